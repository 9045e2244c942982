"""Context checks and communication-graph distances."""

from collections import Counter

import numpy as np
from pydantic import BaseModel, ConfigDict

from tcr.models.schemas import Context, Diagnostic
from tcr.utils.errors import InvalidContextError
from tcr.utils.extended import NEG_INF, POS_INF, format_extended, from_matrix_cell


class CommDistance(BaseModel):
    """Shortest guaranteed-delivery distances, over finite-bound channels only."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    agents: tuple[str, ...]
    matrix: np.ndarray

    def __call__(self, i: str, j: str) -> int | float:
        return from_matrix_cell(self.matrix[self.agents.index(i), self.agents.index(j)])

    def diameter(self) -> int:
        """Largest finite distance (0 for a single agent)."""
        finite = self.matrix[np.isfinite(self.matrix)]
        return int(finite.max()) if finite.size else 0


def validate_context(ctx: Context) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []
    agents = set(ctx.agents)
    for agent, count in sorted(Counter(ctx.agents).items()):
        if count > 1:
            diagnostics.append(
                Diagnostic(code="DuplicateAgent", message=f"agent {agent!r} declared {count} times")
            )
    seen: set[tuple[str, str]] = set()
    for c in ctx.channels:
        name = f"channel {c.source}->{c.target}"
        if c.source == c.target:
            diagnostics.append(Diagnostic(code="SelfChannel", message=f"{name} loops on one agent"))
        for end in (c.source, c.target):
            if end not in agents:
                diagnostics.append(
                    Diagnostic(code="UnknownAgent", message=f"{name} names unknown agent {end!r}")
                )
        if c.bound == NEG_INF or c.bound < 1:
            diagnostics.append(
                Diagnostic(
                    code="NonPositiveBound",
                    message=f"{name} has bound {format_extended(c.bound)}, need >= 1",
                )
            )
        if (c.source, c.target) in seen:
            diagnostics.append(Diagnostic(code="DuplicateChannel", message=f"{name} declared twice"))
        seen.add((c.source, c.target))
    input_ids: set[str] = set()
    for x in ctx.external_inputs:
        if x.observer not in agents:
            diagnostics.append(
                Diagnostic(
                    code="UnknownObserver",
                    message=f"input {x.id!r} is observed by unknown agent {x.observer!r}",
                )
            )
        if x.id in input_ids:
            diagnostics.append(Diagnostic(code="DuplicateInput", message=f"input {x.id!r} declared twice"))
        input_ids.add(x.id)
    return diagnostics


def require_valid(ctx: Context) -> None:
    diagnostics = validate_context(ctx)
    if diagnostics:
        raise InvalidContextError(
            "; ".join(d.message for d in diagnostics), diagnostics=diagnostics
        )


def comm_distance(ctx: Context) -> CommDistance:
    require_valid(ctx)
    n = len(ctx.agents)
    index = {a: k for k, a in enumerate(ctx.agents)}
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for c in ctx.channels:
        if c.bound != POS_INF:
            dist[index[c.source], index[c.target]] = float(c.bound)
    for k in range(n):
        dist = np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :])
    return CommDistance(agents=ctx.agents, matrix=dist)


def comm_reachability(ctx: Context) -> np.ndarray:
    """Reachability over every channel, unbounded ones included."""
    n = len(ctx.agents)
    index = {a: k for k, a in enumerate(ctx.agents)}
    reach = np.eye(n, dtype=bool)
    for c in ctx.channels:
        reach[index[c.source], index[c.target]] = True
    for k in range(n):
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return reach


def is_strongly_connected(ctx: Context) -> bool:
    return bool(comm_reachability(ctx).all())
