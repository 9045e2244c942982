"""Tabular reports: aligned text for the terminal, CSV and XLSX for export."""

import logging
from io import BytesIO

import pandas as pd

from tcr.models.schemas import SolvabilityReport, TcrSpec
from tcr.utils.constraints import CanonicalForm
from tcr.utils.extended import format_extended
from tcr.utils.runtime import Run, trace_lines

logger = logging.getLogger(__name__)


def canonical_form_frame(form: CanonicalForm) -> pd.DataFrame:
    rows = [[format_extended(form.value(i, j)) for j in form.agents] for i in form.agents]
    return pd.DataFrame(rows, index=list(form.agents), columns=list(form.agents))


def assignment_frame(times: dict[str, int]) -> pd.DataFrame:
    return pd.DataFrame({"agent": list(times), "time": list(times.values())})


def solvability_frame(report: SolvabilityReport) -> pd.DataFrame:
    rows = [
        {
            "chain": " -> ".join("{" + ",".join(group) + "}" for group in w.chain),
            "witness": ",".join(w.witness) if w.witness else "-",
        }
        for w in report.chains
    ]
    return pd.DataFrame(rows, columns=["chain", "witness"])


def response_table(spec: TcrSpec, tables: dict[str, list[Run]]) -> pd.DataFrame:
    """One row per run; a column per (rule, agent) holding the response time.

    Every entry of `tables` must list the same timelines in the same order, as
    `apply_rule` produces them.
    """
    names = list(tables)
    base = tables[names[0]]
    agents = sorted(spec.agents)
    rows = []
    for k, run in enumerate(base):
        start = run.input_time(spec.trigger)
        row: dict[str, object] = {"run": k, "trigger": "-" if start is None else start}
        for name in names:
            other = tables[name][k]
            for a in agents:
                t = other.responses.get(a)
                row[f"{name}:{a}"] = "-" if t is None else t
        rows.append(row)
    logger.debug("response table: %d runs, rules %s", len(rows), names)
    return pd.DataFrame(rows)


def trace_frame(run: Run) -> pd.DataFrame:
    rows = []
    for line in trace_lines(run)[1:]:
        head, _, rest = line.partition(" ")
        if head.startswith("t="):
            rows.append({"time": int(head[2:]), "entry": rest})
        else:
            rows.append({"time": None, "entry": line})
    return pd.DataFrame(rows, columns=["time", "entry"])


def format_table(df: pd.DataFrame, index: bool = False) -> str:
    if df.empty:
        return "(empty)"
    return df.to_string(index=index)


def export_to_csv(df: pd.DataFrame) -> str:
    return df.to_csv(index=False)


def export_to_excel(df: pd.DataFrame, sheet_name: str = "Responses") -> bytes:
    output = BytesIO()
    with pd.ExcelWriter(output, engine="openpyxl") as writer:
        df.to_excel(writer, sheet_name=sheet_name, index=False)
    output.seek(0)
    return output.getvalue()
