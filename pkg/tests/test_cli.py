import json

import pytest

from tcr.app.main import main


def run(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_canon(capsys):
    code, out, _ = run(capsys, "canon", "acme")
    assert code == 0
    assert "100" in out and "300" in out


def test_bound(capsys):
    assert run(capsys, "bound", "c1_zero")[:2] == (0, "2\n")


def test_implementable_and_min_impl(capsys):
    assert run(capsys, "implementable", "acme")[:2] == (0, "implementable\n")
    code, out, _ = run(capsys, "min-impl", "c1_lead")
    assert code == 0
    assert out.split() == ["agent", "time", "1", "1", "2", "0"]


def test_solvable_json(capsys):
    code, out, _ = run(capsys, "solvable", "c1_zero", "--json")
    assert code == 0
    report = json.loads(out)
    assert report["solvable"] is True
    assert report["reduction"] == "per-scc"


def test_simulate_optimal(capsys):
    code, out, _ = run(capsys, "simulate", "c1_gap", "--schedule", "max-delay")
    assert code == 0
    assert "t=1 agent=1 new=[] respond=yes" in out.splitlines()
    assert "t=2 agent=2 new=[1@0->2:2, e@1:0] respond=yes" in out.splitlines()


def test_simulate_csv(capsys, tmp_path):
    target = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "simulate", "c1_gap", "--schedule", "fast", "--csv", str(target))
    assert code == 0
    assert target.read_text(encoding="utf-8").startswith("time,entry")


def test_detect_broom(capsys, tmp_path):
    dot = tmp_path / "run.dot"
    code, out, _ = run(
        capsys, "detect", "c1_zero", "--schedule", "max-delay", "--structure", "broom",
        "--times", "1=2,2=2", "--dot", str(dot),
    )
    assert code == 0
    assert out == "brooms: e@1:0\n"
    assert dot.read_text(encoding="utf-8").startswith('digraph "c1_zero"')

    code, out, _ = run(
        capsys, "detect", "c1_zero", "--schedule", "max-delay", "--structure", "broom", "--times", "1=1,2=1"
    )
    assert (code, out) == (1, "no broom found\n")


def test_detect_centipede(capsys):
    base = ["detect", "c1_gap", "--schedule", "max-delay", "--structure", "centipede", "--path", "1,2"]
    assert run(capsys, *base, "--t", "1")[:2] == (0, "centipede: e@1:0 e@1:0\n")
    assert run(capsys, *base, "--t", "0")[:2] == (1, "no centipede found\n")
    code, out, _ = run(capsys, *base, "--t", "3")
    assert code == 1 and out.startswith("clipped")


def test_table_exports(capsys, tmp_path):
    csv_path = tmp_path / "table.csv"
    xlsx_path = tmp_path / "table.xlsx"
    code, out, _ = run(
        capsys, "table", "c1_gap", "--rules", "optimal,broom", "--horizon", "2",
        "--csv", str(csv_path), "--xlsx", str(xlsx_path),
    )
    assert code == 0
    assert out == ""
    assert csv_path.read_text(encoding="utf-8").splitlines()[0] == "run,trigger,optimal:1,optimal:2,broom:1,broom:2"
    assert xlsx_path.read_bytes()[:2] == b"PK"


def test_oracle_equiv(capsys):
    code, out, _ = run(capsys, "oracle-equiv", "relay_zero", "--samples", "5")
    assert code == 0
    assert "AGREE on all guarded points" in out


@pytest.mark.parametrize(
    "argv",
    [
        ("canon", "no-such-scenario"),
        ("simulate", "c1_zero", "--schedule", "nope"),
        ("bound", "c1_gap"),
        ("canon",),
    ],
)
def test_errors_exit_with_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err


@pytest.mark.parametrize(
    ("argv", "message"),
    [
        (("detect", "c1_zero", "--schedule", "max-delay", "--structure", "broom", "--times", "9=2"), "'9'"),
        (("detect", "c1_zero", "--schedule", "max-delay", "--structure", "broom", "--times", "1=x"), "integer"),
        (("simulate", "c1_zero", "--schedule", "max-delay", "--horizon", "-1"), "--horizon"),
        (("table", "c1_zero", "--horizon", "-3"), "--horizon"),
    ],
)
def test_bad_arguments_for_the_scenario_exit_with_two(capsys, argv, message):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert message in err


def test_negative_verdicts_exit_with_one(capsys, tmp_path):
    path = tmp_path / "loop.json"
    data = {
        "name": "loop",
        "context": {
            "agents": ["1", "2"],
            "channels": [{"source": "1", "target": "2", "bound": 1}],
            "external_inputs": [{"id": "e", "observer": "1"}],
        },
        "tcr": {
            "trigger": "e",
            "agents": ["1", "2"],
            "delta": [{"source": "1", "target": "2", "bound": -1}, {"source": "2", "target": "1", "bound": 0}],
        },
        "oracle": {"horizon": 2},
    }
    path.write_text(json.dumps(data), encoding="utf-8")
    assert run(capsys, "implementable", str(path))[:2] == (1, "not implementable\n")
    assert run(capsys, "min-impl", str(path))[0] == 1
    assert run(capsys, "solvable", str(path))[0] == 1
