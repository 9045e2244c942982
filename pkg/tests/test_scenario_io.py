import json

import pytest

from tcr.utils.constraints import canonical_form, is_implementable
from tcr.utils.errors import ScenarioParseError, ScenarioValidationError
from tcr.utils.scenario_io import (
    bundled_scenario_names,
    bundled_scenario_text,
    dump_scenario,
    load_bundled,
    load_scenario,
    normalize_scenario_text,
    resolve_scenario,
)

BUNDLED = [
    "acme",
    "c1_gap",
    "c1_lead",
    "c1_zero",
    "chain3",
    "relay_gap",
    "relay_zero",
    "ring3_zero",
    "star3_zero",
]


def base() -> dict:
    return json.loads(bundled_scenario_text("c1_zero"))


def codes(exc: ScenarioValidationError) -> list[str]:
    return sorted(d.code for d in exc.diagnostics)


def test_bundled_names():
    assert bundled_scenario_names() == BUNDLED


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_are_written_normalized(name):
    text = bundled_scenario_text(name)
    assert dump_scenario(load_bundled(name)) == normalize_scenario_text(text)


def test_loaded_scenario_fields():
    scenario = load_bundled("c1_zero")
    assert scenario.spec.observer == "1"
    assert scenario.context.bound("2", "1") == 3
    assert [s.name for s in scenario.schedules] == ["max-delay", "fast", "early-first", "quiet"]
    assert scenario.schedule("quiet").input_time("e") is None
    with pytest.raises(KeyError):
        scenario.schedule("nope")


def test_infinite_bound_token():
    data = base()
    data["context"]["channels"][1]["bound"] = "+inf"
    scenario = load_scenario(json.dumps(data))
    assert scenario.context.bound("2", "1") == float("inf")
    assert '"bound": "+inf"' in dump_scenario(scenario)


def test_parse_errors_carry_position():
    with pytest.raises(ScenarioParseError) as info:
        load_scenario('{\n  "name": \n')
    assert info.value.line == 3
    with pytest.raises(ScenarioParseError):
        load_scenario(b"\xff\xfe")


def test_unknown_keys_are_rejected():
    data = base()
    data["context"]["colour"] = "blue"
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(json.dumps(data))
    assert codes(info.value) == ["Schema"]
    assert "context.colour" in str(info.value)


def test_semantic_problems_are_all_reported():
    data = base()
    data["context"]["channels"].append({"bound": 0, "source": "1", "target": "3"})
    data["tcr"]["delta"].append({"bound": 4, "source": "1", "target": "2"})
    data["schedules"].append({"name": "fast", "input_times": {"x": 1}})
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(json.dumps(data))
    assert codes(info.value) == [
        "DuplicateDelta",
        "DuplicateSchedule",
        "NonPositiveBound",
        "UnknownAgent",
        "UnknownInput",
    ]


def test_unknown_trigger_is_reported():
    data = base()
    data["tcr"]["trigger"] = "x"
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(json.dumps(data))
    assert codes(info.value) == ["Schema"]
    assert "trigger 'x'" in str(info.value)


def test_resolve_scenario(tmp_path):
    assert resolve_scenario("acme").name == "acme"
    assert resolve_scenario("acme.json").name == "acme"
    path = tmp_path / "mine.json"
    path.write_text(bundled_scenario_text("relay_zero"), encoding="utf-8")
    assert resolve_scenario(str(path)).name == "relay_zero"
    with pytest.raises(FileNotFoundError):
        resolve_scenario("no-such-scenario")


def test_neg_inf_delta_loads_but_is_not_implementable():
    data = base()
    data["tcr"]["delta"][0]["bound"] = "-inf"
    scenario = load_scenario(json.dumps(data).encode("utf-8"))
    assert not is_implementable(scenario.spec.delta)


def test_missing_trigger_is_a_schema_error():
    data = base()
    del data["tcr"]["trigger"]
    with pytest.raises(ScenarioValidationError) as info:
        load_scenario(json.dumps(data))
    assert "tcr.trigger" in str(info.value)


def test_acme_canonical_form_from_file():
    form = canonical_form(load_bundled("acme").spec.delta)
    assert (form.value("1", "2"), form.value("2", "1")) == (100, 300)
