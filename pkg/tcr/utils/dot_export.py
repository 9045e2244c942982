"""Space-time diagrams of a run in Graphviz DOT.

One node per (agent, time), one `rank=same` subgraph per time step, dotted edges for
locality, dashed edges for bound guarantees over finite-bound channels, solid edges for
deliveries (early ones in orange). Events of a detected structure are drawn filled.
"""

from tcr.models.schemas import NdEvent
from tcr.utils.extended import POS_INF
from tcr.utils.runtime import Run


def _node(agent: str, time: int) -> str:
    return f'"{agent}@{time}"'


def render_run_dot(run: Run, highlight: tuple[NdEvent, ...] = (), title: str = "run") -> str:
    marked = {(e.observer, e.time) for e in highlight}
    agents = sorted(run.context.agents)
    lines = [f'digraph "{title}" {{', "  rankdir=TB;", "  newrank=true;", "  node [shape=circle];"]

    for t in range(run.horizon + 1):
        lines.append(f"  subgraph time_{t} {{")
        lines.append("    rank=same;")
        for a in agents:
            style = ' style=filled fillcolor="lightblue"' if (a, t) in marked else ""
            lines.append(f'    {_node(a, t)} [label="{a}:{t}"{style}];')
        lines.append("  }")

    for x in run.inputs:
        lines.append(f'  "input_{x.input_id}" [shape=box label="{x.input_id}"];')
        lines.append(f'  "input_{x.input_id}" -> {_node(x.observer, x.time)};')
    for a in agents:
        for t in range(run.horizon):
            lines.append(f"  {_node(a, t)} -> {_node(a, t + 1)} [style=dotted];")
    for c in sorted(run.context.channels, key=lambda c: (c.source, c.target)):
        if c.bound == POS_INF:
            continue
        bound = int(c.bound)
        for t in range(run.horizon - bound + 1):
            lines.append(f'  {_node(c.source, t)} -> {_node(c.target, t + bound)} [style=dashed color="gray"];')
    for d in run.deliveries:
        color = ' [color="orange"]' if d.early else ""
        lines.append(f"  {_node(d.sender, d.send_time)} -> {_node(d.recipient, d.time)}{color};")
    lines.append("}")
    return "\n".join(lines) + "\n"
