from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from tcr.utils.extended import POS_INF, ExtendedInt

# Facts held in full-information states. The last element is always the occurrence time.
#   ("input", input_id, observer, time)
#   ("delivery", sender, send_time, recipient, time)
Fact = tuple


class Diagnostic(BaseModel):
    code: str
    severity: str = "error"  # error | warning
    message: str


class Channel(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    bound: ExtendedInt = Field(description="Worst-case delivery time; positive integer or +inf.")


class ExternalInput(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    observer: str


class Context(BaseModel):
    """Agents, bounded channels and external inputs of one discrete-time system.

    Construction never rejects a malformed context; `validate_context` reports what
    is wrong so scenario loading can list every problem at once.
    """

    model_config = ConfigDict(frozen=True)

    agents: tuple[str, ...]
    channels: tuple[Channel, ...] = ()
    external_inputs: tuple[ExternalInput, ...] = ()
    shared_clock: bool = True

    _bounds: dict[tuple[str, str], int | float] = PrivateAttr(default_factory=dict)
    _observers: dict[str, str] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._bounds = {(c.source, c.target): c.bound for c in self.channels}
        self._observers = {x.id: x.observer for x in self.external_inputs}

    def bound(self, source: str, target: str) -> int | float | None:
        """Channel bound, or None when there is no channel."""
        return self._bounds.get((source, target))

    def observer_of(self, input_id: str) -> str | None:
        return self._observers.get(input_id)

    def out_channels(self, agent: str) -> list[Channel]:
        return sorted(
            (c for c in self.channels if c.source == agent), key=lambda c: c.target
        )

    @property
    def input_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._observers))


class ImplementationSpec(BaseModel):
    """An agent set with upper bounds δ(i, j) on t(j) − t(i).

    Omitted pairs mean +inf.
    """

    model_config = ConfigDict(frozen=True)

    agents: tuple[str, ...]
    delta: dict[tuple[str, str], ExtendedInt] = Field(default_factory=dict)

    @field_validator("agents")
    @classmethod
    def _distinct_agents(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        if len(set(v)) != len(v):
            raise ValueError(f"duplicate agent ids in {list(v)}")
        return v

    @model_validator(mode="after")
    def _pairs_over_agents(self) -> "ImplementationSpec":
        known = set(self.agents)
        for i, j in self.delta:
            if i == j:
                raise ValueError(f"delta entry ({i}, {j}) is on the diagonal")
            if i not in known or j not in known:
                raise ValueError(f"delta entry ({i}, {j}) names an agent outside {list(self.agents)}")
        return self

    def value(self, i: str, j: str) -> int | float:
        return self.delta.get((i, j), POS_INF)

    def pairs(self) -> list[tuple[str, str]]:
        return [(i, j) for i in self.agents for j in self.agents if i != j]

    def edges(self) -> list[tuple[str, str, int | float]]:
        """Edges of the constraint graph: every pair whose bound is not +inf."""
        return [(i, j, self.value(i, j)) for i, j in self.pairs() if self.value(i, j) != POS_INF]


class TcrSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    context: Context
    trigger: str
    agents: tuple[str, ...]
    delta: ImplementationSpec

    @model_validator(mode="after")
    def _check(self) -> "TcrSpec":
        if self.context.observer_of(self.trigger) is None:
            raise ValueError(f"trigger {self.trigger!r} is not an external input of the context")
        unknown = [a for a in self.agents if a not in self.context.agents]
        if unknown:
            raise ValueError(f"responding agents {unknown} are not context agents")
        if len(set(self.agents)) < 2:
            raise ValueError("coordination needs at least two responding agents")
        if set(self.delta.agents) != set(self.agents):
            raise ValueError("delta must range over exactly the responding agents")
        return self

    @property
    def observer(self) -> str:
        return self.context.observer_of(self.trigger)


class DelayChoice(BaseModel):
    model_config = ConfigDict(frozen=True)

    sender: str
    send_time: int = Field(ge=0)
    recipient: str
    delay: int


class NdSchedule(BaseModel):
    """Resolution of every nondeterministic choice of one run.

    `input_times` maps an input id to its time; missing or None means it never occurs.
    Messages without an explicit `delays` entry take the `default_delay` policy: "max"
    delivers at the bound (never, for an unbounded channel), "min" after one tick.
    """

    model_config = ConfigDict(frozen=True)

    name: str = ""
    input_times: dict[str, int | None] = Field(default_factory=dict)
    delays: tuple[DelayChoice, ...] = ()
    default_delay: Literal["max", "min"] = "max"

    _explicit: dict[tuple[str, int, str], int] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        self._explicit = {(d.sender, d.send_time, d.recipient): d.delay for d in self.delays}

    def input_time(self, input_id: str) -> int | None:
        return self.input_times.get(input_id)

    def delay_for(self, sender: str, send_time: int, recipient: str, bound: int | float) -> int | None:
        """Chosen delay, or None when the message is never delivered in finite time."""
        explicit = self._explicit.get((sender, send_time, recipient))
        if explicit is not None:
            return explicit
        if self.default_delay == "min":
            return 1
        if bound == POS_INF:
            return None
        return int(bound)


class NodeRef(BaseModel):
    model_config = ConfigDict(frozen=True)

    agent: str
    time: int = Field(ge=0)


class NdEvent(BaseModel):
    """An external input or an early delivery, observed by `observer` at `time`."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["input", "early_delivery"]
    time: int
    observer: str
    input_id: str | None = None
    sender: str | None = None
    send_time: int | None = None

    @property
    def node(self) -> NodeRef:
        return NodeRef(agent=self.observer, time=self.time)

    @property
    def sort_key(self) -> tuple:
        return (
            self.time,
            self.observer,
            self.kind,
            self.input_id or "",
            self.sender or "",
            -1 if self.send_time is None else self.send_time,
        )

    @property
    def label(self) -> str:
        if self.kind == "input":
            return f"{self.input_id}@{self.observer}:{self.time}"
        return f"{self.sender}@{self.send_time}->{self.observer}:{self.time}"


class ChainWitness(BaseModel):
    chain: tuple[tuple[str, ...], ...]
    witness: tuple[str, ...] | None


class SolvabilityReport(BaseModel):
    solvable: bool
    sccs: list[list[str]]
    chains: list[ChainWitness]
    comm_strongly_connected: bool
    reduction: Literal["chains", "per-scc"]
    reasons: list[str] = Field(default_factory=list)


class CentipedeResult(BaseModel):
    """Outcome of a centipede search; `clipped` means the horizon cut the search short."""

    events: tuple[NdEvent, ...] | None = None
    clipped: bool = False

    @property
    def found(self) -> bool:
        return self.events is not None


class OracleComparison(BaseModel):
    """Knowledge fixed point against optimal-rule response times on one scenario."""

    scenario: str
    horizon: int
    runs: int
    guarded_points: int
    agents: list[str]
    disagreements: list[str] = Field(default_factory=list)
    f_equals_g: bool | None = None  # None when the comparison does not apply
    exact_shift_unmet: list[str] = Field(default_factory=list)
    coordinated: bool
    stable: bool
    maximal: bool
    nd_knowledge: bool

    @property
    def agree(self) -> bool:
        return (
            not self.disagreements
            and self.f_equals_g is not False
            and self.coordinated
            and self.stable
            and self.maximal
            and self.nd_knowledge
        )


class SuiteResult(BaseModel):
    name: str
    checked: int
    failures: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures
