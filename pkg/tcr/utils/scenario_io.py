"""Loading, validating and writing scenario files."""

import json
import logging
from importlib import resources
from pathlib import Path

from pydantic import BaseModel, ConfigDict, ValidationError

from tcr.models.scenario import OracleSection, ScenarioFile
from tcr.models.schemas import (
    Channel,
    Context,
    DelayChoice,
    Diagnostic,
    ExternalInput,
    ImplementationSpec,
    NdSchedule,
    TcrSpec,
)
from tcr.utils.context import validate_context
from tcr.utils.errors import ScenarioParseError, ScenarioValidationError

logger = logging.getLogger(__name__)

BUNDLED_PACKAGE = "tcr.scenarios"


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    description: str
    context: Context
    spec: TcrSpec
    schedules: tuple[NdSchedule, ...]
    oracle: OracleSection
    source: ScenarioFile

    def schedule(self, name: str) -> NdSchedule:
        for sched in self.schedules:
            if sched.name == name:
                return sched
        known = ", ".join(s.name for s in self.schedules) or "none"
        raise KeyError(f"no schedule named {name!r} (known: {known})")


def _schema_diagnostics(exc: ValidationError, prefix: str = "") -> list[Diagnostic]:
    return [
        Diagnostic(
            code="Schema",
            message=f"{prefix}{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}",
        )
        for err in exc.errors()
    ]


def _build(source: ScenarioFile) -> Scenario:
    ctx = Context(
        agents=tuple(source.context.agents),
        channels=tuple(
            Channel(source=c.source, target=c.target, bound=c.bound) for c in source.context.channels
        ),
        external_inputs=tuple(
            ExternalInput(id=x.id, observer=x.observer) for x in source.context.external_inputs
        ),
        shared_clock=source.context.shared_clock,
    )
    diagnostics = validate_context(ctx)

    delta: dict[tuple[str, str], int | float] = {}
    for entry in source.tcr.delta:
        key = (entry.source, entry.target)
        if key in delta:
            diagnostics.append(
                Diagnostic(code="DuplicateDelta", message=f"tcr.delta: pair {key} given twice")
            )
        delta[key] = entry.bound

    spec = None
    try:
        spec = TcrSpec(
            context=ctx,
            trigger=source.tcr.trigger,
            agents=tuple(source.tcr.agents),
            delta=ImplementationSpec(agents=tuple(source.tcr.agents), delta=delta),
        )
    except ValidationError as exc:
        diagnostics += _schema_diagnostics(exc, prefix="tcr.")

    schedules = []
    for sched in source.schedules:
        for input_id in sched.input_times:
            if ctx.observer_of(input_id) is None:
                diagnostics.append(
                    Diagnostic(
                        code="UnknownInput",
                        message=f"schedule {sched.name!r} times unknown input {input_id!r}",
                    )
                )
        schedules.append(
            NdSchedule(
                name=sched.name,
                input_times=dict(sched.input_times),
                delays=tuple(DelayChoice(**d.model_dump()) for d in sched.delays),
                default_delay=sched.default_delay,
            )
        )
    names = [s.name for s in schedules]
    for name in sorted({n for n in names if names.count(n) > 1}):
        diagnostics.append(Diagnostic(code="DuplicateSchedule", message=f"schedule {name!r} given twice"))

    if diagnostics:
        raise ScenarioValidationError(diagnostics)
    return Scenario(
        name=source.name,
        description=source.description,
        context=ctx,
        spec=spec,
        schedules=tuple(schedules),
        oracle=source.oracle,
        source=source,
    )


def load_scenario(data: bytes | str) -> Scenario:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioParseError(f"not UTF-8: {exc.reason}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    try:
        source = ScenarioFile.model_validate(raw)
    except ValidationError as exc:
        raise ScenarioValidationError(_schema_diagnostics(exc)) from None
    scenario = _build(source)
    logger.debug("loaded scenario %s", scenario.name)
    return scenario


def load_scenario_file(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_bytes())


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario.source.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def normalize_scenario_text(data: str) -> str:
    return json.dumps(json.loads(data), indent=2, sort_keys=True) + "\n"


def bundled_scenario_names() -> list[str]:
    files = resources.files(BUNDLED_PACKAGE)
    return sorted(p.name.removesuffix(".json") for p in files.iterdir() if p.name.endswith(".json"))


def bundled_scenario_text(name: str) -> str:
    return (resources.files(BUNDLED_PACKAGE) / f"{name}.json").read_text(encoding="utf-8")


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_scenario_text(name))


def resolve_scenario(ref: str) -> Scenario:
    """A path to a scenario file, or the name of a bundled scenario."""
    path = Path(ref)
    if path.exists():
        return load_scenario_file(path)
    name = path.name.removesuffix(".json")
    if name in bundled_scenario_names():
        return load_bundled(name)
    raise FileNotFoundError(f"no scenario file or bundled scenario named {ref!r}")
