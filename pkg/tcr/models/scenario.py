"""On-disk scenario format.

Scenario files are JSON. Extended integers are written as integers or the tokens
"-inf" / "+inf". Unknown keys are rejected at every level.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from tcr.utils.extended import ExtendedInt


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChannelEntry(_Strict):
    source: str
    target: str
    bound: ExtendedInt


class InputEntry(_Strict):
    id: str
    observer: str


class ContextSection(_Strict):
    agents: list[str]
    channels: list[ChannelEntry] = Field(default_factory=list)
    external_inputs: list[InputEntry] = Field(default_factory=list)
    shared_clock: bool = True


class DeltaEntry(_Strict):
    source: str
    target: str
    bound: ExtendedInt


class TcrSection(_Strict):
    trigger: str
    agents: list[str]
    delta: list[DeltaEntry] = Field(default_factory=list, description="Omitted pairs are +inf.")


class DelayEntry(_Strict):
    sender: str
    send_time: int = Field(ge=0)
    recipient: str
    delay: int


class ScheduleSection(_Strict):
    name: str
    input_times: dict[str, int | None] = Field(default_factory=dict)
    delays: list[DelayEntry] = Field(default_factory=list)
    default_delay: Literal["max", "min"] = "max"


class OracleSection(_Strict):
    horizon: int = Field(ge=0)
    max_runs: int = Field(default=5000, ge=1)
    path_budget: int = Field(default=32, ge=0)


class ScenarioFile(_Strict):
    name: str
    description: str = ""
    context: ContextSection
    tcr: TcrSection
    schedules: list[ScheduleSection] = Field(default_factory=list)
    oracle: OracleSection
