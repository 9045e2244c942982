"""Cross-check of the optimal response rule against δ-common knowledge.

On the enumerated point space of a scenario, agent i should first know its coordinate
of the δ-common-knowledge fixed point (with psi = "the trigger has occurred") exactly
when the optimal rule makes it respond. Near the horizon the temporal operators lose
points that lie beyond it, so the comparison is made only on guarded points: every
point of an untriggered run, and points (r, t) of triggered runs where both the
trigger time and t are at least `horizon_slack` ticks before the horizon.
"""

import logging
import os

import numpy as np
from dotenv import load_dotenv

from tcr.models.schemas import OracleComparison, TcrSpec
from tcr.utils.constraints import canonical_form
from tcr.utils.coordination import optimal_response_rule
from tcr.utils.epistemic import (
    Ensemble,
    PointSet,
    PointSpace,
    delta_common_knowledge,
    g_delta_common_knowledge,
    is_delta_coordinated,
    knowledge_ensemble,
    nd_knowledge_check,
    no_later_than,
    random_coordinated_ensemble,
)
from tcr.utils.extended import NEG_INF, is_finite
from tcr.utils.runtime import TCR_MAX_RUNS, enumerate_runs
from tcr.utils.syncausality import distances

load_dotenv()

logger = logging.getLogger(__name__)

TCR_ORACLE_SAMPLES = int(os.getenv("TCR_ORACLE_SAMPLES", "100"))
TCR_SELFTEST_SEED = int(os.getenv("TCR_SELFTEST_SEED", "20260"))


def horizon_slack(spec: TcrSpec) -> int | float:
    """Ticks after the trigger within which every guarded point's fixed point settles.

    Three parts: the furthest any agent may have to respond ahead of another (minus
    the smallest canonical row entry), the widest finite window a no-later-than shift
    looks forward, and how long the observer needs to reach every responder.
    """
    form = canonical_form(spec.delta)
    lead = max(-form.row_min(i) for i in spec.agents)
    finite = [w for _, _, w in spec.delta.edges() if is_finite(w)]
    dist = distances(spec.context)
    spread = max(dist(spec.observer, j) for j in spec.agents)
    return lead + max([0, *finite]) + spread


def guarded_mask(space: PointSpace, spec: TcrSpec) -> np.ndarray:
    slack = horizon_slack(spec)
    mask = np.zeros(space.size, dtype=bool)
    for r, run in enumerate(space.runs):
        start = run.input_time(spec.trigger)
        for t in range(space.width):
            if start is None or (start + slack <= space.horizon and t + slack <= space.horizon):
                mask[space.index(r, t)] = True
    return mask


def exact_shift_conditions(
    space: PointSpace,
    spec: TcrSpec,
    psi: PointSet,
    fixed: Ensemble,
    guard: np.ndarray,
) -> list[str]:
    """Unmet conditions for the exact-shift fixed point to equal the no-later-than one.

    Checked on the space itself: finite-below δ, perfect recall, a stable psi, and in
    every guarded run where psi occurs, every coordinate of `fixed` holds somewhere.
    Runs without a guarded point are truncated before either fixed point settles, so
    they are left out of the last check.
    """
    unmet = []
    if any(w == NEG_INF for _, _, w in spec.delta.edges()):
        unmet.append("delta has a -inf entry")
    forgets = any(
        not run.state(a, t) <= run.state(a, t + 1)
        for run in space.runs
        for a in space.context.agents
        for t in range(space.horizon)
    )
    if forgets:
        unmet.append("some agent state loses a fact over time")
    if psi != no_later_than(space, 0, psi):
        unmet.append("psi is not stable")
    watched = psi.grid().any(axis=1) & guard.reshape(len(space.runs), space.width).any(axis=1)
    for i in sorted(fixed):
        if (watched & ~fixed[i].grid().any(axis=1)).any():
            unmet.append(f"psi occurs in a guarded run where coordinate {i} never holds")
    return unmet


def compare_oracle(
    spec: TcrSpec,
    horizon: int,
    name: str = "",
    cap: int = TCR_MAX_RUNS,
    samples: int = TCR_ORACLE_SAMPLES,
    seed: int = TCR_SELFTEST_SEED,
) -> OracleComparison:
    rule = optimal_response_rule(spec)
    runs = enumerate_runs(spec.context, rule, horizon, cap)
    space = PointSpace(runs)
    agents = sorted(spec.agents)
    psi = space.input_by(spec.trigger)
    fixed = delta_common_knowledge(space, agents, spec.delta, psi)
    known = knowledge_ensemble(space, fixed)
    guard = guarded_mask(space, spec)
    logger.info(
        "oracle %s: %d runs, %d points, %d guarded", name or "-", len(runs), space.size, int(guard.sum())
    )

    disagreements = []
    for k in np.flatnonzero(guard):
        r, t = int(space.run_of[k]), int(space.time_of[k])
        for i in agents:
            responded = runs[r].responses.get(i)
            expected = responded is not None and t >= responded
            if bool(known[i].mask[k]) != expected:
                disagreements.append(
                    f"run {r} time {t} agent {i}: knowledge={bool(known[i].mask[k])} response={responded}"
                )

    f_equals_g = None
    unmet = exact_shift_conditions(space, spec, psi, fixed, guard)
    if unmet:
        logger.info("oracle %s: exact-shift comparison skipped: %s", name or "-", "; ".join(unmet))
    else:
        g_known = knowledge_ensemble(space, g_delta_common_knowledge(space, agents, spec.delta, psi))
        f_equals_g = all(
            np.array_equal(known[i].mask[guard], g_known[i].mask[guard]) for i in agents
        )

    stable = all(fixed[i] == no_later_than(space, 0, fixed[i]) for i in agents)
    rng = np.random.default_rng(seed)
    maximal = True
    for _ in range(samples):
        sample = random_coordinated_ensemble(space, agents, spec.delta, psi, rng)
        if not all(sample[i] <= known[i] for i in agents):
            maximal = False
            break

    return OracleComparison(
        scenario=name,
        horizon=horizon,
        runs=len(runs),
        guarded_points=int(guard.sum()),
        agents=agents,
        disagreements=disagreements,
        f_equals_g=f_equals_g,
        exact_shift_unmet=unmet,
        coordinated=is_delta_coordinated(known, spec.delta),
        stable=stable,
        maximal=maximal,
        nd_knowledge=nd_knowledge_check(space, spec.trigger, agents).passed,
    )
