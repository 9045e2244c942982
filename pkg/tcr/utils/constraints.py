"""Difference constraints between response times.

An `ImplementationSpec` bounds every ordered pair: t(j) ≤ t(i) + δ(i, j). Read as a
weighted digraph (edge i→j of weight δ(i, j) wherever δ(i, j) < +inf) the spec is a
shortest-path problem, and its canonical form is the all-pairs distance matrix:

- an entry is +inf when j is unreachable from i,
- an entry is -inf when some i→j walk runs through a negative cycle or a -inf edge,
- the diagonal is 0 except on negative cycles.

A spec is implementable exactly when the canonical form has no -inf entry, and the
least implementation reads straight off its rows.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from tcr.models.schemas import ImplementationSpec
from tcr.utils.errors import AgentMismatchError, NotImplementableError
from tcr.utils.extended import NEG_INF, POS_INF, ext_add, from_matrix_cell, is_finite

logger = logging.getLogger(__name__)


class CanonicalForm(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    agents: tuple[str, ...]
    matrix: np.ndarray

    def index(self, agent: str) -> int:
        return self.agents.index(agent)

    def value(self, i: str, j: str) -> int | float:
        return from_matrix_cell(self.matrix[self.index(i), self.index(j)])

    def row_min(self, i: str) -> int | float:
        return from_matrix_cell(self.matrix[self.index(i)].min())

    def as_spec(self) -> ImplementationSpec:
        delta = {
            (i, j): self.value(i, j)
            for i in self.agents
            for j in self.agents
            if i != j and self.value(i, j) != POS_INF
        }
        return ImplementationSpec(agents=self.agents, delta=delta)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CanonicalForm):
            return NotImplemented
        return self.agents == other.agents and np.array_equal(self.matrix, other.matrix)


def _reachability(spec: ImplementationSpec) -> np.ndarray:
    n = len(spec.agents)
    index = {a: k for k, a in enumerate(spec.agents)}
    reach = np.eye(n, dtype=bool)
    for i, j, _ in spec.edges():
        reach[index[i], index[j]] = True
    for k in range(n):
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return reach


def canonical_form(spec: ImplementationSpec) -> CanonicalForm:
    n = len(spec.agents)
    index = {a: k for k, a in enumerate(spec.agents)}
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    neg_inf_edges: list[tuple[int, int]] = []
    for i, j, w in spec.edges():
        if w == NEG_INF:
            neg_inf_edges.append((index[i], index[j]))
        else:
            dist[index[i], index[j]] = min(dist[index[i], index[j]], float(w))

    # Relaxation through each intermediate vertex in turn. Entries that a negative
    # cycle can reach are wrong afterwards, but every one of them is overwritten below.
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])

    reach = _reachability(spec)
    # i->j is -inf once i reaches a negative cycle or a -inf edge that reaches j
    poisoned = np.zeros((n, n), dtype=bool)
    for c in np.flatnonzero(np.diag(dist) < 0):
        poisoned |= np.outer(reach[:, c], reach[c, :])
    for u, v in neg_inf_edges:
        poisoned |= np.outer(reach[:, u], reach[v, :])
    dist[poisoned] = -np.inf

    if poisoned.any():
        logger.debug("canonical form has %d -inf entries", int(poisoned.sum()))
    return CanonicalForm(agents=spec.agents, matrix=dist)


def is_implementable(spec: ImplementationSpec) -> bool:
    return not np.isneginf(canonical_form(spec).matrix).any()


def minimal_implementation(spec: ImplementationSpec) -> dict[str, int]:
    """Least response-time assignment: t(i) = −min_j dhat(i, j)."""
    form = canonical_form(spec)
    if np.isneginf(form.matrix).any():
        raise NotImplementableError("constraints contain a negative cycle or a -inf bound")
    return {a: int(-form.row_min(a)) for a in spec.agents}


def verify_implementation(spec: ImplementationSpec, t: dict[str, int]) -> bool:
    if set(t) != set(spec.agents):
        raise AgentMismatchError(
            f"assignment covers {sorted(t)}, constraints cover {sorted(spec.agents)}"
        )
    for i, j in spec.pairs():
        bound = spec.value(i, j)
        if bound == POS_INF:
            continue
        if bound == NEG_INF or t[j] > ext_add(t[i], bound):
            return False
    return True


def extremal_implementation(
    spec: ImplementationSpec, i: str, j: str, k: int
) -> dict[str, int]:
    """An implementation stretching t(j) − t(i) as far as the constraints allow.

    When dhat(i, j) is finite the gap equals it and `k` is ignored; otherwise the gap
    is at least `k`. Works by adding the reverse bound t(i) − t(j) ≤ −gap, which closes
    no negative cycle, and taking the least implementation of the tightened spec.
    """
    if i == j:
        raise ValueError("extremal implementation needs two distinct agents")
    form = canonical_form(spec)
    if np.isneginf(form.matrix).any():
        raise NotImplementableError("constraints contain a negative cycle or a -inf bound")
    gap = form.value(i, j)
    target = -gap if is_finite(gap) else -k
    delta = dict(spec.delta)
    delta[(j, i)] = min(spec.value(j, i), target)
    return minimal_implementation(ImplementationSpec(agents=spec.agents, delta=delta))


def strongly_connected_components(spec: ImplementationSpec) -> list[tuple[str, ...]]:
    """Components of the constraint graph, in topological order of the condensation.

    Ties between unrelated components keep the order of `spec.agents`.
    """
    reach = _reachability(spec)
    mutual = reach & reach.T
    seen: set[int] = set()
    components: list[list[int]] = []
    for k in range(len(spec.agents)):
        if k in seen:
            continue
        members = [int(m) for m in np.flatnonzero(mutual[k])]
        seen.update(members)
        components.append(members)
    # A component precedes every component it reaches.
    remaining = list(range(len(components)))
    ordered: list[int] = []
    while remaining:
        for c in remaining:
            rep = components[c][0]
            blocked = any(
                reach[components[o][0], rep] for o in remaining if o != c
            )
            if not blocked:
                ordered.append(c)
                remaining.remove(c)
                break
    return [tuple(spec.agents[m] for m in components[c]) for c in ordered]


def condensation_edges(
    spec: ImplementationSpec, components: list[tuple[str, ...]]
) -> set[tuple[int, int]]:
    owner = {a: k for k, comp in enumerate(components) for a in comp}
    return {
        (owner[i], owner[j]) for i, j, _ in spec.edges() if owner[i] != owner[j]
    }


def zero_cycle_classes(form: CanonicalForm) -> list[tuple[str, ...]]:
    """Agents grouped by zero-length cycles: i ~ j iff dhat(i, j) = −dhat(j, i), finite.

    Each class is sorted, so its first member is the lexicographically smallest id.
    """
    classes: list[tuple[str, ...]] = []
    assigned: set[str] = set()
    for a in sorted(form.agents):
        if a in assigned:
            continue
        members = [
            b
            for b in sorted(form.agents)
            if b == a
            or (is_finite(form.value(a, b)) and form.value(a, b) == -form.value(b, a))
        ]
        assigned.update(members)
        classes.append(tuple(members))
    return classes


def ordered_response_delta(agents: list[str]) -> ImplementationSpec:
    """Each agent responds no earlier than its predecessor in `agents`."""
    delta = {(agents[m + 1], agents[m]): 0 for m in range(len(agents) - 1)}
    return ImplementationSpec(agents=tuple(agents), delta=delta)


def simultaneous_response_delta(agents: list[str]) -> ImplementationSpec:
    delta = {(i, j): 0 for i in agents for j in agents if i != j}
    return ImplementationSpec(agents=tuple(agents), delta=delta)


def ordered_joint_response_delta(groups: list[list[str]]) -> ImplementationSpec:
    """Members of a group respond together, groups in order."""
    position = {a: m for m, group in enumerate(groups) for a in group}
    agents = tuple(a for group in groups for a in group)
    delta = {
        (i, j): 0 for i in agents for j in agents if i != j and position[i] >= position[j]
    }
    return ImplementationSpec(agents=agents, delta=delta)


def weakly_timed_response_delta(agents: list[str], gaps: list[int]) -> ImplementationSpec:
    """t(agents[m+1]) ≥ t(agents[m]) + gaps[m]."""
    if len(gaps) != len(agents) - 1:
        raise ValueError("weakly timed response needs one gap per consecutive pair")
    delta = {(agents[m + 1], agents[m]): -gaps[m] for m in range(len(agents) - 1)}
    return ImplementationSpec(agents=tuple(agents), delta=delta)


def tightly_timed_response_delta(times: dict[str, int]) -> ImplementationSpec:
    """Response times fixed relative to each other: t(j) − t(i) = times[j] − times[i]."""
    agents = tuple(times)
    delta = {(i, j): times[j] - times[i] for i in agents for j in agents if i != j}
    return ImplementationSpec(agents=agents, delta=delta)
