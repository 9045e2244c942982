"""Hypothesis strategies for constraint sets and contexts."""

import itertools

from hypothesis import strategies as st

from tcr.models.schemas import ImplementationSpec
from tcr.utils.extended import POS_INF
from tests.conftest import make_context

ENTRY = st.one_of(st.integers(min_value=-3, max_value=3), st.just(POS_INF))


@st.composite
def implementation_specs(draw, min_agents: int = 2, max_agents: int = 4, entry=ENTRY) -> ImplementationSpec:
    n = draw(st.integers(min_value=min_agents, max_value=max_agents))
    agents = tuple(str(k + 1) for k in range(n))
    delta = {pair: draw(entry) for pair in itertools.permutations(agents, 2)}
    return ImplementationSpec(agents=agents, delta=delta)


@st.composite
def contexts(draw, max_agents: int = 4):
    n = draw(st.integers(min_value=1, max_value=max_agents))
    agents = [str(k + 1) for k in range(n)]
    channels = []
    for s, t in itertools.permutations(agents, 2):
        bound = draw(st.one_of(st.none(), st.integers(min_value=1, max_value=4), st.just(POS_INF)))
        if bound is not None:
            channels.append((s, t, bound))
    return make_context(agents, channels)
