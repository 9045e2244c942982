"""TCR solvability, the response-time bound, and the response logics.

A response rule answers "should agent i respond now?" from i's full-information state
alone. The optimal answer is yes exactly when, for every path p = (i, p₂, ...) of the
constraint graph, i already knows a chain of ND events after the trigger whose members
guarantee (p_m, t + L(p₁..p_m)) in turn. Two engines decide that:

- `bruteforce_response_rule` enumerates raw constraint-graph walks breadth first and
  checks each for a path-traversing centipede, up to a path budget;
- `optimal_response_rule` walks only representative paths (one agent per zero-cycle
  class, covering the whole class at each step), and uses brooms of each strongly
  connected component to stop early.

The brute-force rule stops extending a walk once one event of its last layer covers
every later end node (a broom), or once the walk revisits a (vertex, time, layer)
state. The optimal engine additionally merges search states across paths and clamps
times. They decide the same predicate; the test-suite compares their response tables
run by run.
"""

import logging
import os
from collections import deque
from collections.abc import Callable, Iterator

import numpy as np
from dotenv import load_dotenv

from tcr.models.schemas import ChainWitness, ImplementationSpec, NdEvent, SolvabilityReport, TcrSpec
from tcr.utils.constraints import (
    CanonicalForm,
    canonical_form,
    condensation_edges,
    minimal_implementation,
    strongly_connected_components,
    zero_cycle_classes,
)
from tcr.utils.context import comm_reachability, is_strongly_connected
from tcr.utils.errors import (
    BudgetInsufficientError,
    NotImplementableError,
    NotSolvableError,
    PreconditionViolatedError,
)
from tcr.utils.extended import NEG_INF, POS_INF, ext_add, is_finite
from tcr.utils.runtime import Run
from tcr.utils.syncausality import (
    CausalView,
    distances,
    next_layer,
    path_targets,
    traversing_layers,
)

load_dotenv()

logger = logging.getLogger(__name__)

TCR_PATH_BUDGET = int(os.getenv("TCR_PATH_BUDGET", "32"))


def tcr_violations(spec: TcrSpec, runs: list[Run], deadline: int | None = None) -> list[str]:
    """Every way the recorded responses break the TCR requirements.

    Runs are finite, so pairwise bounds are only enforced where the bound falls inside
    the horizon: if i responds at t and t + δ(i, j) ≤ horizon, j must have responded by
    t + δ(i, j). `deadline`, when given, also demands that every responder has responded
    within that many ticks of the trigger whenever that point is inside the horizon.
    """
    problems: list[str] = []
    for k, run in enumerate(runs):
        trigger_time = run.input_time(spec.trigger)
        responses = {a: run.responses.get(a) for a in spec.agents}
        if trigger_time is None:
            for a, t in sorted(responses.items()):
                if t is not None:
                    problems.append(f"run {k}: agent {a} responded at {t} without the trigger")
            continue
        for a, t in sorted(responses.items()):
            if t is not None and t < trigger_time:
                problems.append(f"run {k}: agent {a} responded at {t} before the trigger")
        for i, j in spec.delta.pairs():
            t_i, t_j = responses[i], responses[j]
            if t_i is None:
                continue
            bound = spec.delta.value(i, j)
            if bound == POS_INF:
                continue
            if bound == NEG_INF:
                problems.append(f"run {k}: pair ({i}, {j}) has bound -inf")
                continue
            limit = t_i + bound
            if t_j is not None and t_j > limit:
                problems.append(f"run {k}: agent {j} responded at {t_j}, after {i}@{t_i} + {bound}")
            elif t_j is None and limit <= run.horizon:
                problems.append(f"run {k}: agent {j} never responded, due by {limit}")
        if deadline is not None and trigger_time + deadline <= run.horizon:
            for a, t in sorted(responses.items()):
                if t is None or t > trigger_time + deadline:
                    problems.append(f"run {k}: agent {a} missed the deadline {trigger_time + deadline}")
    return problems


def verify_tcr(spec: TcrSpec, runs: list[Run], deadline: int | None = None) -> bool:
    return not tcr_violations(spec, runs, deadline)


def _dag_paths(n: int, edges: set[tuple[int, int]]) -> list[tuple[int, ...]]:
    successors = {k: sorted(b for a, b in edges if a == k) for k in range(n)}
    paths: list[tuple[int, ...]] = []

    def extend(path: tuple[int, ...]) -> None:
        paths.append(path)
        for nxt in successors[path[-1]]:
            extend(path + (nxt,))

    for start in range(n):
        extend((start,))
    return paths


def check_solvability(spec: TcrSpec) -> SolvabilityReport:
    form = canonical_form(spec.delta)
    if np.isneginf(form.matrix).any():
        raise NotImplementableError("constraint graph has a negative cycle or a -inf bound")
    ctx = spec.context
    components = strongly_connected_components(spec.delta)
    dist = distances(ctx)
    agents = sorted(ctx.agents)

    def anchors(component: tuple[str, ...]) -> list[str]:
        return [a for a in agents if all(is_finite(dist(a, j)) for j in component)]

    sccs = [sorted(c) for c in components]
    if is_strongly_connected(ctx):
        chains = []
        for c in components:
            found = anchors(c)
            chains.append(ChainWitness(chain=(tuple(sorted(c)),), witness=(found[0],) if found else None))
        reasons = [f"no agent has finite distance to all of {list(w.chain[0])}" for w in chains if w.witness is None]
        return SolvabilityReport(
            solvable=not reasons,
            sccs=sccs,
            chains=chains,
            comm_strongly_connected=True,
            reduction="per-scc",
            reasons=reasons,
        )

    reach = comm_reachability(ctx)
    index = {a: k for k, a in enumerate(ctx.agents)}
    observer = index[spec.observer]

    def reaches(a: str, b: str) -> bool:
        return bool(reach[index[a], index[b]])

    chains = []
    for path in _dag_paths(len(components), condensation_edges(spec.delta, components)):
        groups = [components[k] for k in path]
        # Walk from the observer through the last group's anchor back to the first.
        feasible: list[list[str]] = [[] for _ in groups]
        feasible[-1] = [a for a in anchors(groups[-1]) if reach[observer, index[a]]]
        for m in range(len(groups) - 2, -1, -1):
            feasible[m] = [
                a for a in anchors(groups[m]) if any(reaches(b, a) for b in feasible[m + 1])
            ]
        witness: tuple[str, ...] | None = None
        if feasible[0]:
            chosen = [feasible[0][0]]
            for m in range(1, len(groups)):
                chosen.append(next(b for b in feasible[m] if reaches(b, chosen[-1])))
            witness = tuple(chosen)
        chains.append(ChainWitness(chain=tuple(tuple(sorted(g)) for g in groups), witness=witness))
    reasons = [
        "no witness for chain " + " -> ".join(str(list(g)) for g in w.chain)
        for w in chains
        if w.witness is None
    ]
    return SolvabilityReport(
        solvable=not reasons,
        sccs=sccs,
        chains=chains,
        comm_strongly_connected=False,
        reduction="chains",
        reasons=reasons,
    )


def worst_case_latest_response(spec: TcrSpec) -> int | float:
    """Latest response, after the trigger, that some solving protocol guarantees.

    Needs δ ≥ 0 and a strongly connected constraint graph.
    """
    reasons = []
    if any(w == NEG_INF or w < 0 for _, _, w in spec.delta.edges()):
        reasons.append("constraints have a negative entry")
    if len(strongly_connected_components(spec.delta)) != 1:
        reasons.append("constraint graph is not strongly connected")
    if reasons:
        raise PreconditionViolatedError(reasons)
    dist = distances(spec.context)
    return min(
        dist(spec.observer, v) + max(dist(v, j) for j in spec.agents) for v in spec.context.agents
    )


class ResponseLogic:
    """A response rule bound to one TCR spec, memoized per (agent, time, state)."""

    def __init__(self, spec: TcrSpec):
        self.spec = spec
        self.context = spec.context
        self.responders = frozenset(spec.agents)
        self._decisions: dict[tuple[str, int, frozenset], bool] = {}

    def __call__(self, agent: str, time: int, state: frozenset) -> bool:
        if agent not in self.responders:
            return False
        key = (agent, time, state)
        decision = self._decisions.get(key)
        if decision is None:
            view = CausalView.from_state(self.context, state, time)
            decision = self.decide(view, agent, time)
            self._decisions[key] = decision
        return decision

    def decide(self, view: CausalView, agent: str, time: int) -> bool:
        raise NotImplementedError


def _require_rule_preconditions(spec: TcrSpec) -> None:
    if not spec.context.shared_clock:
        raise PreconditionViolatedError(["response logics need a shared clock"])
    report = check_solvability(spec)
    if not report.solvable:
        raise NotSolvableError("; ".join(report.reasons), report=report)


def _reachable(form: CanonicalForm, agents: list[str]) -> dict[str, list[str]]:
    return {v: [j for j in agents if is_finite(form.value(v, j))] for v in agents}


class BruteforceResponseLogic(ResponseLogic):
    """Respond once a path-traversing centipede is known for every constraint-graph walk
    from the agent.

    Walks are checked one by one, breadth first. A walk is not extended further when
    one event of its last layer already guarantees (j, s + dhat(v, j)) for every j
    reachable from its end (v, s): repeating that event covers every continuation. A
    walk that returns to a (vertex, time, layer) state it passed through earlier is not
    extended either. Any other walk still open at `path_budget` vertices is
    BudgetInsufficient.
    """

    def __init__(self, spec: TcrSpec, path_budget: int):
        _require_rule_preconditions(spec)
        if path_budget < 1 and spec.delta.edges():
            raise BudgetInsufficientError("a path budget below 1 covers no constraint-graph path")
        super().__init__(spec)
        self.path_budget = path_budget
        self.form = canonical_form(spec.delta)
        self.reachable = _reachable(self.form, sorted(spec.agents))

    def covers_extensions(self, view: CausalView, e: NdEvent, v: str, s: int | float) -> bool:
        return all(view.guarantees(e, j, ext_add(s, self.form.value(v, j))) for j in self.reachable[v])

    def decide(self, view: CausalView, agent: str, time: int) -> bool:
        trigger = view.input_event(self.spec.trigger)
        if trigger is None:
            return False
        candidates = view.descendants(trigger)
        delta = self.spec.delta
        extendable: set[tuple[str, ...]] = set()
        unsettled: tuple[str, ...] | None = None
        for walk in iter_constraint_walks(delta, agent, self.path_budget, extendable.__contains__):
            path = list(walk)
            times = path_targets(path, delta, time)
            layers = traversing_layers(view, candidates, path, times)
            if len(layers) < len(path) or not layers[-1]:
                return False
            v, s = path[-1], times[-1]
            if any(self.covers_extensions(view, e, v, s) for e in layers[-1]):
                continue
            passed = {(path[m], times[m], frozenset(layers[m])) for m in range(len(path) - 1)}
            if (v, s, frozenset(layers[-1])) in passed:
                continue
            if len(self.reachable[v]) == 1:
                continue
            if len(walk) >= self.path_budget:
                unsettled = unsettled or walk
                continue
            extendable.add(walk)
        if unsettled is not None:
            raise BudgetInsufficientError(f"walk {'->'.join(unsettled)} still open at budget {self.path_budget}")
        return True


class OptimalResponseLogic(ResponseLogic):
    def __init__(self, spec: TcrSpec):
        _require_rule_preconditions(spec)
        super().__init__(spec)
        self.form = canonical_form(spec.delta)
        self.dist = distances(spec.context)
        self.agents = sorted(spec.agents)
        self.reachable = _reachable(self.form, self.agents)
        negative = [-self.form.value(i, j) for i in self.agents for j in self.reachable[i]]
        self.slack = max([0, *negative])
        self.classes = zero_cycle_classes(self.form)
        self.class_of = {a: cls for cls in self.classes for a in cls}
        self.representatives = [cls[0] for cls in self.classes]
        self.components = strongly_connected_components(spec.delta)
        self.component_of = {a: comp for comp in self.components for a in comp}

    def closing_time(self, e: NdEvent, v: str, within: list[str]) -> int | float:
        """Earliest time s at vertex v from which e alone covers every extension through
        `within`: e ⇢ (j, s + dhat(v, j)) for each j."""
        return ext_add(e.time, max(ext_add(self.dist(e.observer, j), -self.form.value(v, j)) for j in within))

    def clamp_limit(self, events: list[NdEvent], time: int) -> int | float:
        """Search times past this limit behave alike: every known event has reached every
        agent it ever reaches, and a zero-or-negative cycle can pull s back by at most
        `slack` twice."""
        finite = [
            e.time + self.dist(e.observer, w)
            for e in events
            for w in self.agents
            if is_finite(self.dist(e.observer, w))
        ]
        return max([time, *finite]) + 2 * self.slack

    def closed(self, layer: list[NdEvent], v: str, s: int | float) -> bool:
        return any(s >= self.closing_time(e, v, self.reachable[v]) for e in layer)

    def _class_targets(self, v: str, s: int | float) -> list[tuple[str, int | float]]:
        return [(j, ext_add(s, self.form.value(v, j))) for j in self.class_of[v]]

    def decide(self, view: CausalView, agent: str, time: int) -> bool:
        trigger = view.input_event(self.spec.trigger)
        if trigger is None:
            return False
        candidates = view.descendants(trigger)
        if not candidates:
            return False

        brooms: dict[tuple[str, ...], list[NdEvent]] = {}
        horizon: dict[tuple[str, ...], int | float] = {}
        for comp in self.components:
            members = [e for e in candidates if all(is_finite(self.dist(e.observer, j)) for j in comp)]
            brooms[comp] = members
            if members:
                horizon[comp] = max(
                    self.closing_time(e, v, list(comp)) for e in members for v in comp
                )
        if not brooms[self.component_of[agent]]:
            return False

        first = next_layer(view, candidates, None, self._class_targets(agent, time))
        limit = self.clamp_limit(candidates, time)
        seen: set[tuple] = set()
        queue = deque([(agent, time, first)])
        while queue:
            v, s, layer = queue.popleft()
            if not layer:
                return False
            comp = self.component_of[v]
            if not brooms[comp]:
                return False
            if s >= horizon[comp] and not set(layer) & set(brooms[comp]):
                return False
            # one event of the layer already meets every later end node
            if self.closed(layer, v, s):
                continue
            key = (v, min(s, limit), frozenset(layer))
            if key in seen:
                continue
            seen.add(key)
            for r in self.representatives:
                if r in self.class_of[v] or r not in self.reachable[v]:
                    continue
                s_next = ext_add(s, self.form.value(v, r))
                queue.append((r, s_next, next_layer(view, candidates, layer, self._class_targets(r, s_next))))
        return True


class BroomResponseLogic(ResponseLogic):
    """Respond at the earliest known broom horizon for all responders, offset by the
    least implementation of δ."""

    def __init__(self, spec: TcrSpec):
        super().__init__(spec)
        self.offsets = minimal_implementation(spec.delta)

    def decide(self, view: CausalView, agent: str, time: int) -> bool:
        trigger = view.input_event(self.spec.trigger)
        if trigger is None:
            return False
        return any(
            view.broom_horizon(e, self.spec.agents) + self.offsets[agent] <= time
            for e in view.descendants(trigger)
        )


def optimal_response_rule(spec: TcrSpec) -> OptimalResponseLogic:
    return OptimalResponseLogic(spec)


def bruteforce_response_rule(spec: TcrSpec, path_budget: int = TCR_PATH_BUDGET) -> BruteforceResponseLogic:
    return BruteforceResponseLogic(spec, path_budget)


def broom_response_rule(spec: TcrSpec) -> BroomResponseLogic:
    return BroomResponseLogic(spec)


def response_times(runs: list[Run], agents: list[str]) -> list[tuple[int | None, ...]]:
    return [tuple(run.responses.get(a) for a in agents) for run in runs]


def iter_constraint_walks(
    delta: ImplementationSpec,
    start: str,
    max_vertices: int,
    extend: Callable[[tuple[str, ...]], bool] | None = None,
) -> Iterator[tuple[str, ...]]:
    """Constraint-graph walks from `start` with at most `max_vertices` vertices, level
    by level. Only walks for which `extend` holds, once their level is exhausted, grow
    into the next level."""
    level = [(start,)]
    while True:
        yield from level
        if len(level[0]) >= max_vertices:
            return
        level = [
            p + (w,)
            for p in level
            if extend is None or extend(p)
            for w in sorted(delta.agents)
            if w != p[-1] and delta.value(p[-1], w) != POS_INF
        ]
        if not level:
            return


def constraint_walks(delta: ImplementationSpec, start: str, max_vertices: int) -> list[tuple[str, ...]]:
    """Constraint-graph walks from `start` with at most `max_vertices` vertices."""
    return list(iter_constraint_walks(delta, start, max_vertices))
