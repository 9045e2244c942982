"""Knowledge over finite point spaces.

A point is (run index, time). Sets of points are numpy boolean masks laid out run by
run, so point (r, t) sits at index r * (horizon + 1) + t and the per-run view of a mask
is a plain reshape. Agent i cannot tell two points apart when its full-information
state is equal at both (and, with a shared clock, the times are equal too); those
equivalence classes are stored as integer cell ids per agent.

The fixed points are computed by downward iteration from the full space. Every
operator here is monotone and the space is finite, so the iteration reaches the
greatest fixed point.
"""

import logging

import numpy as np

from tcr.models.schemas import ImplementationSpec, SuiteResult
from tcr.utils.errors import DeltaNegInfError, FixedPointMismatchError, SpaceMismatchError
from tcr.utils.extended import NEG_INF, POS_INF
from tcr.utils.runtime import Run

logger = logging.getLogger(__name__)


class PointSpace:
    """All points of a fixed family of runs, with each agent's indistinguishability cells."""

    def __init__(self, runs: list[Run]):
        if not runs:
            raise ValueError("a point space needs at least one run")
        self.context = runs[0].context
        self.horizon = runs[0].horizon
        for run in runs[1:]:
            if run.horizon != self.horizon or run.context != self.context:
                raise SpaceMismatchError("runs of one space must share context and horizon")
        self.runs = tuple(runs)
        self.width = self.horizon + 1
        self.size = len(runs) * self.width
        self.run_of = np.repeat(np.arange(len(runs)), self.width)
        self.time_of = np.tile(np.arange(self.width), len(runs))
        self._cells: dict[str, np.ndarray] = {}
        for agent in self.context.agents:
            ids: dict[object, int] = {}
            cell = np.empty(self.size, dtype=np.int64)
            for r, run in enumerate(runs):
                for t in range(self.width):
                    state = run.state(agent, t)
                    key = (t, state) if self.context.shared_clock else state
                    cell[r * self.width + t] = ids.setdefault(key, len(ids))
            self._cells[agent] = cell
        logger.debug("point space: %d runs, %d points", len(runs), self.size)

    def cells(self, agent: str) -> np.ndarray:
        if agent not in self._cells:
            raise SpaceMismatchError(f"agent {agent!r} is not part of this space")
        return self._cells[agent]

    def index(self, r: int, t: int) -> int:
        return r * self.width + t

    def empty(self) -> "PointSet":
        return PointSet(self, np.zeros(self.size, dtype=bool))

    def full(self) -> "PointSet":
        return PointSet(self, np.ones(self.size, dtype=bool))

    def from_points(self, points: list[tuple[int, int]]) -> "PointSet":
        mask = np.zeros(self.size, dtype=bool)
        for r, t in points:
            mask[self.index(r, t)] = True
        return PointSet(self, mask)

    def input_by(self, input_id: str) -> "PointSet":
        """Points at which the input has already occurred."""
        mask = np.zeros(self.size, dtype=bool)
        for r, run in enumerate(self.runs):
            time = run.input_time(input_id)
            if time is not None:
                mask[self.index(r, time) : self.index(r, self.horizon) + 1] = True
        return PointSet(self, mask)


class PointSet:
    __slots__ = ("space", "mask")

    def __init__(self, space: PointSpace, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (space.size,):
            raise SpaceMismatchError(f"mask of shape {mask.shape} does not fit {space.size} points")
        self.space = space
        self.mask = mask

    def _same_space(self, other: "PointSet") -> None:
        if other.space is not self.space:
            raise SpaceMismatchError("point sets belong to different spaces")

    def __and__(self, other: "PointSet") -> "PointSet":
        self._same_space(other)
        return PointSet(self.space, self.mask & other.mask)

    def __or__(self, other: "PointSet") -> "PointSet":
        self._same_space(other)
        return PointSet(self.space, self.mask | other.mask)

    def __sub__(self, other: "PointSet") -> "PointSet":
        self._same_space(other)
        return PointSet(self.space, self.mask & ~other.mask)

    def complement(self) -> "PointSet":
        return PointSet(self.space, ~self.mask)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        self._same_space(other)
        return bool(np.array_equal(self.mask, other.mask))

    __hash__ = None

    def __le__(self, other: "PointSet") -> bool:
        self._same_space(other)
        return not (self.mask & ~other.mask).any()

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, point: tuple[int, int]) -> bool:
        r, t = point
        return bool(self.mask[self.space.index(r, t)])

    def points(self) -> list[tuple[int, int]]:
        found = np.flatnonzero(self.mask)
        return [(int(self.space.run_of[k]), int(self.space.time_of[k])) for k in found]

    def grid(self) -> np.ndarray:
        """Runs by times view of the mask."""
        return self.mask.reshape(len(self.space.runs), self.space.width)

    def __repr__(self) -> str:
        return f"PointSet({self.points()})"


Ensemble = dict[str, PointSet]


def _check(space: PointSpace, *sets: PointSet) -> None:
    for s in sets:
        if s.space is not space:
            raise SpaceMismatchError("point set belongs to a different space")


def knows(space: PointSpace, i: str, psi: PointSet) -> PointSet:
    _check(space, psi)
    cell = space.cells(i)
    spoiled = np.zeros(int(cell.max()) + 1, dtype=bool)
    np.logical_or.at(spoiled, cell, ~psi.mask)
    return PointSet(space, ~spoiled[cell])


def everybody_knows(space: PointSpace, agents: list[str], psi: PointSet) -> PointSet:
    out = space.full()
    for i in agents:
        out = out & knows(space, i, psi)
    return out


def no_later_than(space: PointSpace, eps: int | float, psi: PointSet) -> PointSet:
    """Points (r, t) with some (r, t') in psi and t' ≤ t + eps."""
    _check(space, psi)
    if eps == NEG_INF:
        return space.empty()
    grid = psi.grid()
    if eps == POS_INF:
        hit = grid.any(axis=1)
        return PointSet(space, np.repeat(hit, space.width))
    seen = np.logical_or.accumulate(grid, axis=1)
    reach = np.arange(space.width) + int(eps)
    valid = reach >= 0
    out = np.zeros_like(grid)
    out[:, valid] = seen[:, np.minimum(reach[valid], space.horizon)]
    return PointSet(space, out.reshape(-1))


def at_exactly(space: PointSpace, eps: int, psi: PointSet) -> PointSet:
    """Points (r, t) with (r, t + eps) in psi; shifts leaving the window are dropped."""
    _check(space, psi)
    grid = psi.grid()
    target = np.arange(space.width) + int(eps)
    valid = (target >= 0) & (target <= space.horizon)
    out = np.zeros_like(grid)
    out[:, valid] = grid[:, target[valid]]
    if not valid.all():
        logger.debug("shift by %d clips %d points", eps, clipped_by_shift(space, eps))
    return PointSet(space, out.reshape(-1))


def clipped_by_shift(space: PointSpace, eps: int) -> int:
    """Number of points whose shift by eps falls outside 0..horizon."""
    target = np.arange(space.width) + int(eps)
    outside = int(((target < 0) | (target > space.horizon)).sum())
    return outside * len(space.runs)


def common_knowledge(space: PointSpace, agents: list[str], psi: PointSet) -> PointSet:
    """C_I(psi), by iterated E_I and as the gfp of x -> E_I(psi ∩ x); the two must agree."""
    _check(space, psi)
    level = everybody_knows(space, agents, psi)
    while True:
        deeper = everybody_knows(space, agents, level)
        if deeper == level:
            break
        level = deeper

    x = space.full()
    while True:
        nxt = everybody_knows(space, agents, psi & x)
        if nxt == x:
            break
        x = nxt
    if x != level:
        raise FixedPointMismatchError("iterated E_I and the fixed point of E_I(psi & x) differ")
    return x


def eventual_common_knowledge(space: PointSpace, agents: list[str], psi: PointSet) -> PointSet:
    """Greatest x with x = ⋂ᵢ ◇◇Kᵢ(psi ∩ x)."""
    _check(space, psi)
    x = space.full()
    while True:
        nxt = space.full()
        for i in agents:
            nxt = nxt & no_later_than(space, POS_INF, knows(space, i, psi & x))
        if nxt == x:
            return x
        x = nxt


def _iterate(
    space: PointSpace,
    agents: list[str],
    step,
    trace: bool,
) -> Ensemble | tuple[Ensemble, list[dict[str, int]]]:
    x: Ensemble = {i: space.full() for i in agents}
    sizes: list[dict[str, int]] = [{i: len(x[i]) for i in agents}]
    while True:
        nxt = {i: step(i, x) for i in agents}
        sizes.append({i: len(nxt[i]) for i in agents})
        if all(nxt[i] == x[i] for i in agents):
            break
        x = nxt
    logger.debug("fixed point reached after %d iterations", len(sizes) - 1)
    return (x, sizes) if trace else x


def delta_common_knowledge(
    space: PointSpace,
    agents: list[str],
    delta: ImplementationSpec,
    psi: PointSet,
    trace: bool = False,
) -> Ensemble | tuple[Ensemble, list[dict[str, int]]]:
    """Greatest fixed point of x_i -> ⋂_{j≠i} no_later_than(δ(i, j), K_j(psi ∩ x_j)).

    With `trace` the per-iteration coordinate sizes are returned too.
    """
    _check(space, psi)
    if len(agents) < 2:
        raise ValueError("delta common knowledge needs at least two agents")

    def step(i: str, x: Ensemble) -> PointSet:
        out = space.full()
        for j in agents:
            if j != i:
                out = out & no_later_than(space, delta.value(i, j), knows(space, j, psi & x[j]))
        return out

    return _iterate(space, agents, step, trace)


def g_delta_common_knowledge(
    space: PointSpace,
    agents: list[str],
    delta: ImplementationSpec,
    psi: PointSet,
    trace: bool = False,
) -> Ensemble | tuple[Ensemble, list[dict[str, int]]]:
    """Greatest fixed point of x_i -> ◇◇psi ∩ ⋂ at_exactly(δ(i, j), K_j(psi ∩ x_j)) over
    the finite entries δ(i, j)."""
    _check(space, psi)
    for i in agents:
        for j in agents:
            if i != j and delta.value(i, j) == NEG_INF:
                raise DeltaNegInfError(f"delta({i}, {j}) is -inf")
    sometime = no_later_than(space, POS_INF, psi)

    def step(i: str, x: Ensemble) -> PointSet:
        out = sometime
        for j in agents:
            bound = delta.value(i, j)
            if j != i and bound != POS_INF:
                out = out & at_exactly(space, bound, knows(space, j, psi & x[j]))
        return out

    return _iterate(space, agents, step, trace)


def knowledge_ensemble(space: PointSpace, fixed_point: Ensemble) -> Ensemble:
    return {i: knows(space, i, x) for i, x in fixed_point.items()}


def is_delta_coordinated(ensemble: Ensemble, delta: ImplementationSpec) -> bool:
    spaces = {id(e.space) for e in ensemble.values()}
    if len(spaces) > 1:
        raise SpaceMismatchError("ensemble members belong to different spaces")
    for i, e_i in ensemble.items():
        for j, e_j in ensemble.items():
            if i != j and not e_i <= no_later_than(e_i.space, delta.value(i, j), e_j):
                return False
    return True


def random_coordinated_ensemble(
    space: PointSpace,
    agents: list[str],
    delta: ImplementationSpec,
    psi: PointSet,
    rng: np.random.Generator,
    density: float = 0.7,
) -> Ensemble:
    """A random δ-coordinated ensemble inside psi.

    Starts from random unions of each agent's cells and shrinks every coordinate to
    what the agent knows is both in psi and coordinated with the others, until stable.
    """
    ensemble: Ensemble = {}
    for i in agents:
        cell = space.cells(i)
        keep = rng.random(int(cell.max()) + 1) < density
        ensemble[i] = PointSet(space, keep[cell])
    while True:
        nxt = {}
        for i in agents:
            allowed = ensemble[i] & psi
            for j in agents:
                if j != i:
                    allowed = allowed & no_later_than(space, delta.value(i, j), ensemble[j])
            nxt[i] = knows(space, i, allowed)
        if all(nxt[i] == ensemble[i] for i in agents):
            return nxt
        ensemble = nxt


def nd_knowledge_check(space: PointSpace, trigger: str, agents: list[str] | None = None) -> SuiteResult:
    """K_i(sometime trigger) = K_i(trigger already happened), for every agent."""
    agents = list(agents or space.context.agents)
    happened = space.input_by(trigger)
    sometime = no_later_than(space, POS_INF, happened)
    failures = []
    for i in agents:
        lhs = knows(space, i, sometime)
        rhs = knows(space, i, happened)
        for r, t in (lhs - rhs).points() + (rhs - lhs).points():
            failures.append(f"agent {i} at run {r} time {t}")
    return SuiteResult(name="nd-knowledge", checked=len(agents) * space.size, failures=failures)
