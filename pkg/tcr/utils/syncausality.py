"""Syncausality, bound guarantees, and the ND-event structures built on them.

Two orders on (agent, time) nodes:

- the bound guarantee (i, t) ⇢ (j, t') holds in every run: t' ≥ t + dist(i, j), with
  dist the shortest path over finite-bound channels;
- syncausality (i, t) ⇝ (j, t') is run-specific: the closure of locality, actual
  deliveries and delivery guarantees.

Between ND events, e ⇝ e' means e = e', or e' is a delivery of a message whose send
node is syncausally after e.

Everything here works on a `CausalView`: the inputs and deliveries known up to some
time. A view of a whole run answers questions about the run; a view of one agent's
state at time t answers the same questions exactly for every node in that agent's
syncausal past, which is all the response rules ever ask about.
"""

import heapq
import logging
from collections import defaultdict
from collections.abc import Iterable
from functools import lru_cache

from tcr.models.schemas import CentipedeResult, Context, Fact, ImplementationSpec, NdEvent, NodeRef
from tcr.utils.context import CommDistance, comm_distance
from tcr.utils.errors import (
    EventNotInRunError,
    GroupOverlapError,
    InvalidPathError,
    TriggerAbsentError,
)
from tcr.utils.extended import NEG_INF, POS_INF, ext_add
from tcr.utils.runtime import Run

logger = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def distances(ctx: Context) -> CommDistance:
    return comm_distance(ctx)


def bound_guarantee(ctx: Context, a: NodeRef, b: NodeRef) -> bool:
    return b.time >= a.time + distances(ctx)(a.agent, b.agent)


class CausalView:
    """ND events and syncausal reachability over a set of known facts."""

    def __init__(self, ctx: Context, facts: Iterable[Fact], horizon: int):
        self.context = ctx
        self.horizon = horizon
        self.dist = distances(ctx)
        self.inputs: list[tuple[str, str, int]] = []
        self.deliveries: list[tuple[str, int, str, int]] = []
        for fact in facts:
            if fact[0] == "input":
                _, input_id, observer, time = fact
                self.inputs.append((input_id, observer, time))
            else:
                _, sender, send_time, recipient, time = fact
                self.deliveries.append((sender, send_time, recipient, time))
        self.inputs.sort(key=lambda x: (x[2], x[0]))
        self.deliveries.sort(key=lambda d: (d[3], d[2], d[0], d[1]))

        self._sent: dict[str, list[tuple[int, str, int]]] = defaultdict(list)
        for sender, send_time, recipient, time in self.deliveries:
            self._sent[sender].append((send_time, recipient, time))
        self.guarantee_edges: dict[str, list[tuple[str, int]]] = defaultdict(list)
        for c in ctx.channels:
            if c.bound != POS_INF:
                self.guarantee_edges[c.source].append((c.target, int(c.bound)))

        events = [
            NdEvent(kind="input", time=time, observer=observer, input_id=input_id)
            for input_id, observer, time in self.inputs
        ]
        for sender, send_time, recipient, time in self.deliveries:
            if time < send_time + ctx.bound(sender, recipient):
                events.append(
                    NdEvent(
                        kind="early_delivery",
                        time=time,
                        observer=recipient,
                        sender=sender,
                        send_time=send_time,
                    )
                )
        self.events: list[NdEvent] = sorted(events, key=lambda e: e.sort_key)
        self._event_set = set(self.events)
        self._influence: dict[NdEvent, dict[str, int]] = {}

    @classmethod
    def from_run(cls, run: Run) -> "CausalView":
        facts: list[Fact] = [("input", x.input_id, x.observer, x.time) for x in run.inputs]
        facts += [("delivery", d.sender, d.send_time, d.recipient, d.time) for d in run.deliveries]
        return cls(run.context, facts, run.horizon)

    @classmethod
    def from_state(cls, ctx: Context, state: frozenset, now: int) -> "CausalView":
        return cls(ctx, state, now)

    def input_event(self, input_id: str) -> NdEvent | None:
        for name, observer, time in self.inputs:
            if name == input_id:
                return NdEvent(kind="input", time=time, observer=observer, input_id=input_id)
        return None

    def contains(self, e: NdEvent) -> bool:
        return e in self._event_set

    def influence(self, e: NdEvent) -> dict[str, int]:
        """Earliest time each agent is syncausally after `e`; absent agents are never
        reached within the horizon."""
        cached = self._influence.get(e)
        if cached is not None:
            return cached
        best: dict[str, int] = {e.observer: e.time}
        queue = [(e.time, e.observer)]
        while queue:
            time, agent = heapq.heappop(queue)
            if best.get(agent) != time:
                continue
            reached: list[tuple[str, int]] = [
                (target, time + bound) for target, bound in self.guarantee_edges.get(agent, ())
            ]
            reached += [
                (recipient, at)
                for send_time, recipient, at in self._sent.get(agent, ())
                if send_time >= time
            ]
            for target, at in reached:
                if at <= self.horizon and at < best.get(target, POS_INF):
                    best[target] = at
                    heapq.heappush(queue, (at, target))
        self._influence[e] = best
        return best

    def node_after(self, e: NdEvent, node: NodeRef) -> bool:
        return self.influence(e).get(node.agent, POS_INF) <= node.time

    def precedes(self, e: NdEvent, later: NdEvent) -> bool:
        """e ⇝ later between ND events."""
        if e == later:
            return True
        if later.kind != "early_delivery":
            return False
        return self.influence(e).get(later.sender, POS_INF) <= later.send_time

    def guarantees(self, e: NdEvent, agent: str, time: int | float) -> bool:
        """e ⇢ (agent, time), by arithmetic on channel distances."""
        return time >= ext_add(e.time, self.dist(e.observer, agent))

    def descendants(self, trigger: NdEvent) -> list[NdEvent]:
        return [e for e in self.events if self.precedes(trigger, e)]

    def broom_horizon(self, e: NdEvent, agents: Iterable[str]) -> int | float:
        """Earliest common time by which `e` guarantees every agent."""
        return max(ext_add(e.time, self.dist(e.observer, j)) for j in agents)


def _view_with_trigger(run: Run, trigger: str) -> tuple[CausalView, NdEvent]:
    view = CausalView.from_run(run)
    event = view.input_event(trigger)
    if event is None:
        raise TriggerAbsentError(f"input {trigger!r} does not occur in this run")
    return view, event


def earliest_influence(run: Run, e: NdEvent) -> dict[str, int | float]:
    view = CausalView.from_run(run)
    if not view.contains(e):
        raise EventNotInRunError(f"{e.label} is not an ND event of this run")
    reached = view.influence(e)
    return {a: reached.get(a, POS_INF) for a in run.context.agents}


def nd_past(run: Run, node: NodeRef) -> set[NdEvent]:
    view = CausalView.from_run(run)
    return {e for e in view.events if view.node_after(e, node)}


def find_brooms(
    run: Run, trigger: str, agents: Iterable[str], times: dict[str, int]
) -> list[NdEvent]:
    view, trigger_event = _view_with_trigger(run, trigger)
    agents = list(agents)
    return [
        e
        for e in view.descendants(trigger_event)
        if all(view.guarantees(e, i, times[i]) for i in agents)
    ]


def chain_layers(
    view: CausalView,
    candidates: list[NdEvent],
    targets: list[list[tuple[str, int | float]]],
    link_backward: bool,
) -> list[list[NdEvent]]:
    """Feasible events per chain position.

    Position m needs an event guaranteeing every (agent, time) in `targets[m]`. With
    `link_backward` each event must precede some feasible event of the previous
    position (centipede order); otherwise it must follow one (centibroom order).
    Stops at the first empty layer.
    """
    layers: list[list[NdEvent]] = []
    for required in targets:
        layer = next_layer(view, candidates, layers[-1] if layers else None, required, link_backward)
        layers.append(layer)
        if not layer:
            break
    return layers


def next_layer(
    view: CausalView,
    candidates: list[NdEvent],
    previous: list[NdEvent] | None,
    required: list[tuple[str, int | float]],
    link_backward: bool = True,
) -> list[NdEvent]:
    """One step of `chain_layers`; `previous=None` starts a chain."""
    layer = [e for e in candidates if all(view.guarantees(e, a, t) for a, t in required)]
    if previous is None:
        return layer
    if link_backward:
        return [e for e in layer if any(view.precedes(e, p) for p in previous)]
    return [e for e in layer if any(view.precedes(p, e) for p in previous)]


def _witness(view: CausalView, layers: list[list[NdEvent]], link_backward: bool) -> list[NdEvent]:
    chain = [layers[-1][0]]
    for layer in reversed(layers[:-1]):
        nxt = chain[-1]
        if link_backward:
            chain.append(next(e for e in layer if view.precedes(nxt, e)))
        else:
            chain.append(next(e for e in layer if view.precedes(e, nxt)))
    chain.reverse()
    return chain


def path_targets(
    path: list[str], delta: ImplementationSpec, t: int
) -> list[int | float]:
    """End-node times t + L(p₁..p_m) along a constraint-graph path."""
    times: list[int | float] = [t]
    for a, b in zip(path, path[1:]):
        weight = delta.value(a, b)
        if weight == POS_INF:
            raise InvalidPathError(f"{a}->{b} is not an edge of the constraint graph")
        if weight == NEG_INF:
            raise InvalidPathError(f"{a}->{b} has weight -inf")
        times.append(ext_add(times[-1], weight))
    return times


def has_path_traversing_centipede(
    run: Run,
    trigger: str,
    path: list[str],
    delta: ImplementationSpec,
    t: int,
    clip_to_horizon: bool = True,
) -> CentipedeResult:
    if not path:
        raise InvalidPathError("path is empty")
    unknown = [a for a in path if a not in delta.agents]
    if unknown:
        raise InvalidPathError(f"path visits agents {unknown} outside the constraints")
    times = path_targets(path, delta, t)
    if clip_to_horizon and any(x < 0 or x > run.horizon for x in times):
        return CentipedeResult(events=None, clipped=True)
    view, trigger_event = _view_with_trigger(run, trigger)
    layers = traversing_layers(view, view.descendants(trigger_event), path, times)
    if len(layers) < len(path) or not layers[-1]:
        return CentipedeResult(events=None)
    return CentipedeResult(events=tuple(_witness(view, layers, link_backward=True)))


def traversing_layers(
    view: CausalView, candidates: list[NdEvent], path: list[str], times: list[int | float]
) -> list[list[NdEvent]]:
    """Feasible centipede members per path position; a full, non-empty last layer means
    the path-traversing centipede exists in `view`."""
    return chain_layers(view, candidates, [[(a, x)] for a, x in zip(path, times)], link_backward=True)


def find_centibroom(
    run: Run, trigger: str, groups: list[list[str]], times: dict[str, int]
) -> tuple[NdEvent, ...] | None:
    seen: set[str] = set()
    for group in groups:
        if not group:
            raise GroupOverlapError("centibroom groups must be non-empty")
        if seen & set(group):
            raise GroupOverlapError(f"agents {sorted(seen & set(group))} appear in two groups")
        seen |= set(group)
    view, trigger_event = _view_with_trigger(run, trigger)
    layers = chain_layers(
        view,
        view.descendants(trigger_event),
        [[(a, times[a]) for a in group] for group in groups],
        link_backward=False,
    )
    if len(layers) < len(groups) or not layers[-1]:
        return None
    return tuple(_witness(view, layers, link_backward=False))


def max_nd_count(run: Run, a: NodeRef | NdEvent, b: NodeRef) -> int | float:
    """Most ND events on one syncausal path from `a` to `b`; +inf when unrelated."""
    view = CausalView.from_run(run)
    weight: dict[tuple[str, int], int] = defaultdict(int)
    for e in view.events:
        weight[(e.observer, e.time)] += 1
    if isinstance(a, NdEvent):
        start = (a.observer, a.time)
        start_weight = 1
    else:
        start = (a.agent, a.time)
        start_weight = weight[start]
    goal = (b.agent, b.time)
    if goal[1] < start[1]:
        return POS_INF

    successors: dict[tuple[str, int], list[tuple[str, int]]] = defaultdict(list)
    for agent in run.context.agents:
        for time in range(run.horizon):
            successors[(agent, time)].append((agent, time + 1))
        for target, bound in view.guarantee_edges.get(agent, ()):
            for time in range(run.horizon - bound + 1):
                successors[(agent, time)].append((target, time + bound))
    for sender, send_time, recipient, time in view.deliveries:
        successors[(sender, send_time)].append((recipient, time))

    best: dict[tuple[str, int], int] = {start: start_weight}
    for time in range(start[1], goal[1] + 1):
        for agent in sorted(run.context.agents):
            node = (agent, time)
            if node not in best:
                continue
            for nxt in successors.get(node, ()):
                if nxt[1] > goal[1]:
                    continue
                count = best[node] + weight[nxt]
                if count > best.get(nxt, -1):
                    best[nxt] = count
    return best.get(goal, POS_INF)
