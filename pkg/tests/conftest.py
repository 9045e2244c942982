import pytest

from tcr.models.schemas import Channel, Context, ExternalInput, ImplementationSpec, NdSchedule, TcrSpec
from tcr.utils.coordination import optimal_response_rule
from tcr.utils.epistemic import PointSpace
from tcr.utils.runtime import enumerate_runs, never_respond, simulate
from tcr.utils.scenario_io import load_bundled


def make_delta(agents, entries: dict) -> ImplementationSpec:
    return ImplementationSpec(agents=tuple(agents), delta=entries)


def make_context(agents, channels, inputs=(("e", "1"),), shared_clock=True) -> Context:
    return Context(
        agents=tuple(agents),
        channels=tuple(Channel(source=s, target=t, bound=b) for s, t, b in channels),
        external_inputs=tuple(ExternalInput(id=i, observer=o) for i, o in inputs),
        shared_clock=shared_clock,
    )


@pytest.fixture
def c1() -> Context:
    return make_context(["1", "2"], [("1", "2", 2), ("2", "1", 3)])


@pytest.fixture
def c1_gap_spec(c1) -> TcrSpec:
    return TcrSpec(context=c1, trigger="e", agents=("1", "2"), delta=make_delta(["1", "2"], {("1", "2"): 1}))


@pytest.fixture
def c1_zero_spec(c1) -> TcrSpec:
    delta = make_delta(["1", "2"], {("1", "2"): 0, ("2", "1"): 0})
    return TcrSpec(context=c1, trigger="e", agents=("1", "2"), delta=delta)


@pytest.fixture
def max_delay_run(c1):
    return simulate(c1, never_respond, NdSchedule(name="max-delay", input_times={"e": 0}), 5)


@pytest.fixture
def early_run(c1):
    sched = NdSchedule.model_validate(
        {
            "name": "early",
            "input_times": {"e": 0},
            "delays": [{"sender": "1", "send_time": 0, "recipient": "2", "delay": 1}],
        }
    )
    return simulate(c1, never_respond, sched, 5)


@pytest.fixture(scope="session")
def bundled():
    cache = {}

    def get(name: str):
        if name not in cache:
            cache[name] = load_bundled(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def optimal_runs(bundled):
    cache = {}

    def get(name: str):
        if name not in cache:
            scenario = bundled(name)
            rule = optimal_response_rule(scenario.spec)
            cache[name] = enumerate_runs(scenario.context, rule, scenario.oracle.horizon, scenario.oracle.max_runs)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def relay_space(optimal_runs) -> PointSpace:
    return PointSpace(optimal_runs("relay_zero"))


@pytest.fixture(scope="session")
def c1_space(optimal_runs) -> PointSpace:
    return PointSpace(optimal_runs("c1_zero"))
