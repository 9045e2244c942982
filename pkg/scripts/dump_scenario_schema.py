"""Write the JSON Schema of scenario files to docs/scenario.schema.json.

The schema is committed next to the bundled scenarios, so a change to the scenario
models shows up as a reviewable diff here. Run after changing `tcr/models/scenario.py`:

    python scripts/dump_scenario_schema.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "docs" / "scenario.schema.json"

sys.path.insert(0, str(ROOT))

from tcr.models.scenario import ScenarioFile  # noqa: E402


def main() -> int:
    schema = ScenarioFile.model_json_schema()
    OUT.parent.mkdir(parents=True, exist_ok=True)
    # sort_keys so a new field cannot reshuffle the whole file.
    OUT.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
    models = len(schema.get("$defs", {}))
    print(f"wrote {OUT.relative_to(ROOT)}: {models} models")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
