"""Discrete-time simulation of full-information protocols.

Every agent, at every tick 0..horizon:

1. absorbs the external inputs it observes and the messages delivered to it, each
   message carrying the sender's whole state at send time;
2. asks the response rule whether to respond (at most once per run);
3. sends its whole state on every outgoing channel.

States are frozensets of facts (see `tcr.models.schemas.Fact`). Responses are recorded
but never change what is sent, so the set of runs of a context does not depend on the
rule; only the response columns do. Enumeration relies on that: it walks schedules, not
protocol behaviours.

A message whose chosen delivery time falls after the horizon is PENDING. Enumeration
gives every such message one canonical completion, so runs that differ only past the
horizon are not duplicated.
"""

import itertools
import logging
import os
from collections import defaultdict
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict

from tcr.models.schemas import Context, DelayChoice, Fact, NdEvent, NdSchedule
from tcr.utils.context import require_valid
from tcr.utils.errors import CapExceededError, ScheduleViolationError
from tcr.utils.extended import POS_INF

load_dotenv()

logger = logging.getLogger(__name__)

TCR_MAX_RUNS = int(os.getenv("TCR_MAX_RUNS", "5000"))
TCR_ENUM_WORKERS = int(os.getenv("TCR_ENUM_WORKERS", "1"))

ResponseRule = Callable[[str, int, frozenset], bool]


def never_respond(agent: str, time: int, state: frozenset) -> bool:
    return False


class InputOccurrence(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_id: str
    observer: str
    time: int


class Delivery(BaseModel):
    model_config = ConfigDict(frozen=True)

    sender: str
    send_time: int
    recipient: str
    time: int
    early: bool

    @property
    def label(self) -> str:
        return f"{self.sender}@{self.send_time}->{self.recipient}"


class PendingMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    sender: str
    send_time: int
    recipient: str


class Run(BaseModel):
    """One complete timeline up to `horizon`.

    `states[agent][t]` is the agent's full-information state at time t.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    context: Context
    schedule: NdSchedule
    horizon: int
    inputs: tuple[InputOccurrence, ...]
    deliveries: tuple[Delivery, ...]
    pending: tuple[PendingMessage, ...]
    states: dict[str, tuple[frozenset, ...]]
    responses: dict[str, int | None]

    def state(self, agent: str, time: int) -> frozenset:
        return self.states[agent][time]

    def input_time(self, input_id: str) -> int | None:
        for x in self.inputs:
            if x.input_id == input_id:
                return x.time
        return None

    def triggered(self, input_id: str) -> bool:
        return self.input_time(input_id) is not None

    @property
    def timeline_key(self) -> tuple:
        return (
            tuple((x.time, x.input_id) for x in self.inputs),
            tuple((d.time, d.sender, d.send_time, d.recipient) for d in self.deliveries),
            tuple((p.send_time, p.sender, p.recipient) for p in self.pending),
        )

    def with_responses(self, responses: dict[str, int | None]) -> "Run":
        return self.model_copy(update={"responses": responses})


def fact_label(fact: Fact) -> str:
    if fact[0] == "input":
        _, input_id, observer, time = fact
        return f"{input_id}@{observer}:{time}"
    _, sender, send_time, recipient, time = fact
    return f"{sender}@{send_time}->{recipient}:{time}"


def _check_schedule(ctx: Context, sched: NdSchedule) -> None:
    for input_id, time in sched.input_times.items():
        if ctx.observer_of(input_id) is None:
            raise ScheduleViolationError(f"schedule {sched.name!r} names unknown input {input_id!r}")
        if time is not None and time < 0:
            raise ScheduleViolationError(f"input {input_id!r} scheduled at negative time {time}")
    for d in sched.delays:
        if ctx.bound(d.sender, d.recipient) is None:
            raise ScheduleViolationError(
                f"schedule {sched.name!r} sets a delay on missing channel {d.sender}->{d.recipient}"
            )


def simulate(ctx: Context, rule: ResponseRule, sched: NdSchedule, horizon: int) -> Run:
    require_valid(ctx)
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    _check_schedule(ctx, sched)

    observed: dict[tuple[int, str], list[str]] = defaultdict(list)
    inputs: list[InputOccurrence] = []
    for x in sorted(ctx.external_inputs, key=lambda x: x.id):
        time = sched.input_time(x.id)
        if time is not None and time <= horizon:
            observed[(time, x.observer)].append(x.id)
            inputs.append(InputOccurrence(input_id=x.id, observer=x.observer, time=time))

    channels = sorted(ctx.channels, key=lambda c: (c.source, c.target))
    arrivals: dict[tuple[int, str], list[tuple[str, int]]] = defaultdict(list)
    states: dict[str, list[frozenset]] = {a: [] for a in ctx.agents}
    responses: dict[str, int | None] = {a: None for a in ctx.agents}
    deliveries: list[Delivery] = []
    pending: list[PendingMessage] = []

    for t in range(horizon + 1):
        for a in ctx.agents:
            prev = states[a][t - 1] if t else frozenset()
            new: set[Fact] = {("input", i, a, t) for i in observed.get((t, a), ())}
            for sender, send_time in arrivals.get((t, a), ()):
                new |= states[sender][send_time]
                new.add(("delivery", sender, send_time, a, t))
            states[a].append(prev | new if new else prev)

        for a in sorted(ctx.agents):
            if responses[a] is None and rule(a, t, states[a][t]):
                responses[a] = t

        for c in channels:
            delay = sched.delay_for(c.source, t, c.target, c.bound)
            if delay is not None and not 1 <= delay <= c.bound:
                raise ScheduleViolationError(
                    f"delay {delay} for {c.source}@{t}->{c.target} is outside 1..{c.bound}"
                )
            if delay is None or t + delay > horizon:
                pending.append(PendingMessage(sender=c.source, send_time=t, recipient=c.target))
                continue
            arrivals[(t + delay, c.target)].append((c.source, t))
            deliveries.append(
                Delivery(
                    sender=c.source,
                    send_time=t,
                    recipient=c.target,
                    time=t + delay,
                    early=delay < c.bound,
                )
            )

    deliveries.sort(key=lambda d: (d.time, d.recipient, d.sender, d.send_time))
    return Run.model_construct(
        context=ctx,
        schedule=sched,
        horizon=horizon,
        inputs=tuple(sorted(inputs, key=lambda x: (x.time, x.input_id))),
        deliveries=tuple(deliveries),
        pending=tuple(pending),
        states={a: tuple(v) for a, v in states.items()},
        responses=responses,
    )


def nd_events(run: Run) -> list[NdEvent]:
    events = [
        NdEvent(kind="input", time=x.time, observer=x.observer, input_id=x.input_id)
        for x in run.inputs
    ]
    events += [
        NdEvent(
            kind="early_delivery",
            time=d.time,
            observer=d.recipient,
            sender=d.sender,
            send_time=d.send_time,
        )
        for d in run.deliveries
        if d.early
    ]
    return sorted(events, key=lambda e: e.sort_key)


def _delay_options(bound: int | float, send_time: int, horizon: int) -> list[int]:
    """Distinct outcomes for one message: each in-horizon delay, plus one PENDING stand-in."""
    room = horizon - send_time
    options = list(range(1, int(min(bound, room)) + 1)) if room >= 1 else []
    if send_time + bound > horizon:
        options.append(int(bound) if bound != POS_INF else room + 1)
    return options


def enumerate_schedules(ctx: Context, horizon: int, cap: int = TCR_MAX_RUNS) -> list[NdSchedule]:
    """Every distinguishable schedule up to the horizon, or CapExceeded."""
    require_valid(ctx)
    input_ids = sorted(x.id for x in ctx.external_inputs)
    input_options = [list(range(horizon + 1)) + [None] for _ in input_ids]
    messages = [
        (c.source, t, c.target, _delay_options(c.bound, t, horizon))
        for c in sorted(ctx.channels, key=lambda c: (c.source, c.target))
        for t in range(horizon + 1)
    ]
    total = 1
    for options in input_options:
        total *= len(options)
    for *_, options in messages:
        total *= len(options)
    if total > cap:
        raise CapExceededError(count=total, cap=cap)

    schedules = []
    for times in itertools.product(*input_options):
        for delays in itertools.product(*(m[3] for m in messages)):
            schedules.append(
                NdSchedule(
                    name=f"enum-{len(schedules)}",
                    input_times=dict(zip(input_ids, times, strict=True)),
                    delays=tuple(
                        DelayChoice(sender=s, send_time=t, recipient=r, delay=d)
                        for (s, t, r, _), d in zip(messages, delays, strict=True)
                    ),
                )
            )
    return schedules


def enumerate_runs(
    ctx: Context,
    rule: ResponseRule,
    horizon: int,
    cap: int = TCR_MAX_RUNS,
    workers: int = TCR_ENUM_WORKERS,
) -> list[Run]:
    """All runs up to `horizon`, deduplicated and sorted by timeline."""
    schedules = enumerate_schedules(ctx, horizon, cap)
    logger.info("enumerating %d schedules to horizon %d", len(schedules), horizon)

    def one(sched: NdSchedule) -> Run:
        return simulate(ctx, rule, sched, horizon)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            produced: Iterable[Run] = list(pool.map(one, schedules))
    else:
        produced = (one(s) for s in schedules)
    unique: dict[tuple, Run] = {}
    for run in produced:
        unique.setdefault(run.timeline_key, run)
    return [unique[k] for k in sorted(unique)]


def apply_rule(runs: list[Run], rule: ResponseRule) -> list[Run]:
    """Same timelines with the response columns recomputed under `rule`."""
    out = []
    for run in runs:
        responses: dict[str, int | None] = {}
        for a in sorted(run.context.agents):
            responses[a] = next(
                (t for t in range(run.horizon + 1) if rule(a, t, run.state(a, t))), None
            )
        out.append(run.with_responses(responses))
    return out


def trace_lines(run: Run) -> list[str]:
    lines = [f"# horizon={run.horizon} schedule={run.schedule.name or '-'}"]
    for t in range(run.horizon + 1):
        for x in run.inputs:
            if x.time == t:
                lines.append(f"t={t} input {x.input_id} observer={x.observer}")
        for d in run.deliveries:
            if d.time == t:
                lines.append(f"t={t} deliver {d.label}{' early' if d.early else ''}")
        for a in sorted(run.context.agents):
            before = run.state(a, t - 1) if t else frozenset()
            new = sorted(fact_label(f) for f in run.state(a, t) - before)
            responded = "yes" if run.responses.get(a) == t else "no"
            lines.append(f"t={t} agent={a} new=[{', '.join(new)}] respond={responded}")
    for p in run.pending:
        lines.append(f"pending {p.sender}@{p.send_time}->{p.recipient}")
    return lines
