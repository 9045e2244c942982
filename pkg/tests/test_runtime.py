import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcr.models.schemas import NdSchedule, NodeRef
from tcr.utils.errors import CapExceededError, ScheduleViolationError
from tcr.utils.runtime import (
    apply_rule,
    enumerate_runs,
    enumerate_schedules,
    nd_events,
    never_respond,
    simulate,
    trace_lines,
)
from tcr.utils.syncausality import nd_past
from tests.conftest import make_context
from tests.settings import QUICK_SETTINGS
from tests.strategies import contexts

TRIGGER = ("input", "e", "1", 0)


def test_max_delay_delivers_at_bound(max_delay_run):
    assert TRIGGER in max_delay_run.state("1", 0)
    assert TRIGGER not in max_delay_run.state("2", 1)
    assert TRIGGER in max_delay_run.state("2", 2)
    assert all(not d.early for d in max_delay_run.deliveries)


def test_early_delivery_spreads_knowledge_sooner(early_run):
    assert TRIGGER in early_run.state("2", 1)
    early = [d for d in early_run.deliveries if d.early]
    assert [d.label for d in early] == ["1@0->2"]


def test_nd_events_are_inputs_and_early_deliveries(max_delay_run, early_run):
    assert [e.label for e in nd_events(max_delay_run)] == ["e@1:0"]
    assert [e.label for e in nd_events(early_run)] == ["e@1:0", "1@0->2:1"]


def test_messages_past_horizon_are_pending(max_delay_run):
    pending = {(p.sender, p.send_time, p.recipient) for p in max_delay_run.pending}
    assert pending == {("1", 4, "2"), ("1", 5, "2"), ("2", 3, "1"), ("2", 4, "1"), ("2", 5, "1")}


def test_state_grows_monotonically(early_run):
    for agent in ("1", "2"):
        for t in range(early_run.horizon):
            assert early_run.state(agent, t) <= early_run.state(agent, t + 1)


def test_responses_are_recorded_once(c1):
    def respond_from_two(agent, time, state):
        return time >= 2

    run = simulate(c1, respond_from_two, NdSchedule(input_times={"e": 0}), 4)
    assert run.responses == {"1": 2, "2": 2}


def test_horizon_zero_enumeration(c1):
    runs = enumerate_runs(c1, never_respond, 0)
    assert len(runs) == 2
    assert sorted(r.triggered("e") for r in runs) == [False, True]


def test_c1_run_count(c1):
    assert len(enumerate_runs(c1, never_respond, 3)) == 720


def test_enumeration_respects_cap(c1):
    with pytest.raises(CapExceededError) as info:
        enumerate_schedules(c1, 3, cap=1)
    assert info.value.count == 720


def test_threaded_enumeration_matches_serial(c1):
    serial = enumerate_runs(c1, never_respond, 2)
    threaded = enumerate_runs(c1, never_respond, 2, workers=4)
    assert [r.timeline_key for r in serial] == [r.timeline_key for r in threaded]


@pytest.mark.parametrize(
    "schedule",
    [
        {"input_times": {"x": 0}},
        {"input_times": {"e": -1}},
        {"delays": [{"sender": "1", "send_time": 0, "recipient": "2", "delay": 3}]},
        {"delays": [{"sender": "1", "send_time": 0, "recipient": "9", "delay": 1}]},
    ],
)
def test_schedule_violations(c1, schedule):
    with pytest.raises(ScheduleViolationError):
        simulate(c1, never_respond, NdSchedule.model_validate(schedule), 4)


def test_negative_horizon_is_rejected(c1):
    with pytest.raises(ValueError):
        simulate(c1, never_respond, NdSchedule(), -1)


def test_unbounded_channel_never_delivers_by_default():
    ctx = make_context(["1", "2"], [("1", "2", float("inf"))])
    run = simulate(ctx, never_respond, NdSchedule(input_times={"e": 0}), 3)
    assert run.deliveries == ()
    assert len(run.pending) == 4


def test_apply_rule_keeps_timelines(c1):
    runs = enumerate_runs(c1, never_respond, 2)

    def knows_trigger(agent, time, state):
        return any(f[0] == "input" for f in state)

    ruled = apply_rule(runs, knows_trigger)
    assert [r.timeline_key for r in ruled] == [r.timeline_key for r in runs]
    for run in ruled:
        if run.input_time("e") is None:
            assert run.responses == {"1": None, "2": None}
        else:
            assert run.responses["1"] == run.input_time("e")


def test_trace_format(early_run):
    lines = trace_lines(early_run)
    assert lines[0] == "# horizon=5 schedule=early"
    assert "t=0 input e observer=1" in lines
    assert "t=1 deliver 1@0->2 early" in lines
    assert "t=1 agent=2 new=[1@0->2:1, e@1:0] respond=no" in lines
    assert lines[-1] == "pending 2@5->1"


@given(times=st.lists(st.integers(min_value=1, max_value=2), min_size=4, max_size=4), start=st.integers(0, 3))
@QUICK_SETTINGS
def test_delivered_state_is_sender_state(times, start):
    c1 = make_context(["1", "2"], [("1", "2", 2), ("2", "1", 3)])
    delays = [{"sender": "1", "send_time": t, "recipient": "2", "delay": d} for t, d in enumerate(times)]
    sched = NdSchedule.model_validate({"input_times": {"e": start}, "delays": delays})
    run = simulate(c1, never_respond, sched, 5)
    for d in run.deliveries:
        assert run.state(d.sender, d.send_time) <= run.state(d.recipient, d.time)


@given(ctx=contexts(max_agents=2))
@QUICK_SETTINGS
def test_states_hold_no_fact_from_the_future(ctx):
    for run in enumerate_runs(ctx, never_respond, 2):
        for agent in ctx.agents:
            for t in range(run.horizon + 1):
                assert all(fact[-1] <= t for fact in run.state(agent, t))


@given(ctx=contexts(max_agents=2))
@QUICK_SETTINGS
def test_same_nd_past_gives_same_state(ctx):
    seen: dict[tuple, frozenset] = {}
    for run in enumerate_runs(ctx, never_respond, 2):
        for agent in ctx.agents:
            for t in range(run.horizon + 1):
                past = frozenset(nd_past(run, NodeRef(agent=agent, time=t)))
                state = run.state(agent, t)
                assert seen.setdefault((agent, t, past), state) == state
