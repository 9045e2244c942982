import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tcr.utils.epistemic import (
    PointSet,
    PointSpace,
    at_exactly,
    clipped_by_shift,
    common_knowledge,
    delta_common_knowledge,
    eventual_common_knowledge,
    everybody_knows,
    g_delta_common_knowledge,
    is_delta_coordinated,
    knowledge_ensemble,
    knows,
    nd_knowledge_check,
    no_later_than,
    random_coordinated_ensemble,
)
from tcr.utils.errors import DeltaNegInfError, SpaceMismatchError
from tcr.utils.extended import NEG_INF, POS_INF
from tcr.utils.runtime import enumerate_runs, never_respond
from tests.conftest import make_delta
from tests.settings import SPACE_SETTINGS

AGENTS = ["1", "2"]
ZERO = make_delta(AGENTS, {("1", "2"): 0, ("2", "1"): 0})


@pytest.fixture
def small_space(c1) -> PointSpace:
    return PointSpace(enumerate_runs(c1, never_respond, 1))


def random_set(space: PointSpace, seed: int, density: float = 0.6) -> PointSet:
    rng = np.random.default_rng(seed)
    return PointSet(space, rng.random(space.size) < density)


SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


def test_small_space_layout(small_space):
    assert len(small_space.runs) == 12
    assert small_space.size == 24
    points = [(3, 1), (0, 0)]
    assert sorted(small_space.from_points(points).points()) == sorted(points)
    assert (3, 1) in small_space.from_points(points)


def test_observer_knows_its_input(small_space):
    happened = small_space.input_by("e")
    assert knows(small_space, "1", happened) == happened


def test_other_agent_learns_only_through_early_delivery(small_space):
    known = knows(small_space, "2", small_space.input_by("e"))
    expected = [
        (r, 1)
        for r, run in enumerate(small_space.runs)
        if run.input_time("e") == 0 and any(d.sender == "1" and d.time == 1 for d in run.deliveries)
    ]
    assert known.points() == expected


def test_trigger_is_never_common_knowledge(small_space):
    happened = small_space.input_by("e")
    assert len(common_knowledge(small_space, AGENTS, happened)) == 0
    assert len(everybody_knows(small_space, AGENTS, happened)) > 0


def test_eventual_common_knowledge_of_everything(small_space):
    assert eventual_common_knowledge(small_space, AGENTS, small_space.full()) == small_space.full()


def test_temporal_operators_on_one_run(small_space):
    psi = small_space.from_points([(0, 1)])
    assert no_later_than(small_space, 0, psi).points() == [(0, 1)]
    assert no_later_than(small_space, 1, psi).points() == [(0, 0), (0, 1)]
    assert no_later_than(small_space, POS_INF, psi).points() == [(0, 0), (0, 1)]
    assert len(no_later_than(small_space, NEG_INF, psi)) == 0
    assert at_exactly(small_space, 1, psi).points() == [(0, 0)]
    assert at_exactly(small_space, -1, psi).points() == []
    assert clipped_by_shift(small_space, 1) == 12


def test_mixing_spaces_is_rejected(small_space, c1):
    other = PointSpace(enumerate_runs(c1, never_respond, 1))
    with pytest.raises(SpaceMismatchError):
        small_space.full() & other.full()
    with pytest.raises(SpaceMismatchError):
        PointSpace(enumerate_runs(c1, never_respond, 1) + enumerate_runs(c1, never_respond, 0))
    with pytest.raises(SpaceMismatchError):
        small_space.cells("9")


def test_delta_common_knowledge_argument_checks(small_space):
    psi = small_space.input_by("e")
    with pytest.raises(ValueError):
        delta_common_knowledge(small_space, ["1"], ZERO, psi)
    with pytest.raises(DeltaNegInfError):
        g_delta_common_knowledge(small_space, AGENTS, make_delta(AGENTS, {("1", "2"): NEG_INF}), psi)


def test_fixed_point_trace_shrinks(relay_space):
    fixed, sizes = delta_common_knowledge(relay_space, AGENTS, ZERO, relay_space.input_by("e"), trace=True)
    assert sizes[0] == {i: relay_space.size for i in AGENTS}
    for before, after in zip(sizes, sizes[1:]):
        assert all(after[i] <= before[i] for i in AGENTS)
    assert sizes[-1] == {i: len(fixed[i]) for i in AGENTS}


def test_knowledge_ensemble_is_coordinated(relay_space):
    psi = relay_space.input_by("e")
    known = knowledge_ensemble(relay_space, delta_common_knowledge(relay_space, AGENTS, ZERO, psi))
    assert is_delta_coordinated(known, ZERO)
    assert all(known[i] <= psi for i in AGENTS)


def test_nd_knowledge_holds(relay_space, c1_space):
    assert nd_knowledge_check(relay_space, "e").passed
    assert nd_knowledge_check(c1_space, "e").passed


@given(seed=SEEDS)
@SPACE_SETTINGS
def test_knowledge_is_veridical_and_introspective(relay_space, seed):
    psi = random_set(relay_space, seed)
    for i in AGENTS:
        known = knows(relay_space, i, psi)
        assert known <= psi
        assert knows(relay_space, i, known) == known


@given(seed=SEEDS, other=SEEDS)
@SPACE_SETTINGS
def test_knowledge_is_monotone(relay_space, seed, other):
    small = random_set(relay_space, seed) & random_set(relay_space, other)
    large = random_set(relay_space, seed)
    for i in AGENTS:
        assert knows(relay_space, i, small) <= knows(relay_space, i, large)


@given(seed=SEEDS, eps=st.integers(min_value=-3, max_value=3))
@SPACE_SETTINGS
def test_temporal_operators(relay_space, seed, eps):
    psi = random_set(relay_space, seed, density=0.05)
    assert at_exactly(relay_space, 0, psi) == psi
    assert no_later_than(relay_space, eps, psi) <= no_later_than(relay_space, eps + 1, psi)
    assert no_later_than(relay_space, eps, psi) <= no_later_than(relay_space, POS_INF, psi)
    if eps >= 0:
        assert psi <= no_later_than(relay_space, eps, psi)
        assert at_exactly(relay_space, eps, psi) <= no_later_than(relay_space, eps, psi)


@given(seed=SEEDS)
@SPACE_SETTINGS
def test_common_knowledge_is_a_fixed_point(relay_space, seed):
    psi = random_set(relay_space, seed, density=0.9)
    ck = common_knowledge(relay_space, AGENTS, psi)
    assert ck <= everybody_knows(relay_space, AGENTS, psi)
    assert everybody_knows(relay_space, AGENTS, psi & ck) == ck


@given(seed=SEEDS)
@SPACE_SETTINGS
def test_random_coordinated_ensembles_are_below_the_fixed_point(relay_space, seed):
    psi = relay_space.input_by("e")
    known = knowledge_ensemble(relay_space, delta_common_knowledge(relay_space, AGENTS, ZERO, psi))
    sample = random_coordinated_ensemble(relay_space, AGENTS, ZERO, psi, np.random.default_rng(seed))
    assert is_delta_coordinated(sample, ZERO)
    assert all(sample[i] <= known[i] for i in AGENTS)
