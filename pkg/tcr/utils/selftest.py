"""Desk-scale property suites run by `tcr selftest`.

Each suite returns a `SuiteResult` listing every failure it found. The suites use the
bundled scenarios and seeded random constraint sets, so repeated runs report the same
thing.
"""

import itertools
import logging

import numpy as np

from tcr.models.schemas import Context, ImplementationSpec, SuiteResult, TcrSpec
from tcr.utils.constraints import (
    canonical_form,
    is_implementable,
    minimal_implementation,
    verify_implementation,
)
from tcr.utils.coordination import (
    broom_response_rule,
    bruteforce_response_rule,
    check_solvability,
    constraint_walks,
    optimal_response_rule,
    response_times,
    verify_tcr,
    worst_case_latest_response,
)
from tcr.utils.epistemic import (
    PointSpace,
    delta_common_knowledge,
    eventual_common_knowledge,
    knows,
)
from tcr.utils.extended import POS_INF
from tcr.utils.oracle import TCR_SELFTEST_SEED, compare_oracle
from tcr.utils.runtime import apply_rule, enumerate_runs
from tcr.utils.scenario_io import Scenario, load_bundled
from tcr.utils.syncausality import find_brooms, has_path_traversing_centipede

logger = logging.getLogger(__name__)

ENTRY_CHOICES = [-3, -2, -1, 0, 1, 2, 3, POS_INF]
WINDOW = 9


def random_spec(rng: np.random.Generator, size: int, implementable: bool | None = None) -> ImplementationSpec:
    agents = tuple(str(k + 1) for k in range(size))
    while True:
        delta = {
            (i, j): ENTRY_CHOICES[int(rng.integers(len(ENTRY_CHOICES)))]
            for i in agents
            for j in agents
            if i != j
        }
        spec = ImplementationSpec(agents=agents, delta=delta)
        if implementable is None or is_implementable(spec) == implementable:
            return spec


def implementation_mask(matrix: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Which rows of `grid` (assignments) satisfy every off-diagonal bound of `matrix`."""
    ok = np.ones(len(grid), dtype=bool)
    n = matrix.shape[0]
    for i, j in itertools.permutations(range(n), 2):
        ok &= grid[:, j] <= grid[:, i] + matrix[i, j]
    return ok


def _spec_matrix(spec: ImplementationSpec) -> np.ndarray:
    return np.array([[0.0 if i == j else float(spec.value(i, j)) for j in spec.agents] for i in spec.agents])


def canonical_suite(rng: np.random.Generator, count: int = 500) -> tuple[SuiteResult, SuiteResult]:
    canon_failures: list[str] = []
    minimal_failures: list[str] = []
    for k in range(count):
        size = int(rng.integers(2, 5))
        spec = random_spec(rng, size, implementable=True if k % 5 < 3 else None)
        form = canonical_form(spec)
        tag = f"spec {k} {sorted(spec.delta.items())}"
        if canonical_form(form.as_spec()) != form:
            canon_failures.append(f"{tag}: not idempotent")
        raw = _spec_matrix(spec)
        if (form.matrix > raw).any():
            canon_failures.append(f"{tag}: canonical entry above the constraint")
        for i, j, m in itertools.product(range(size), repeat=3):
            a, b = form.matrix[i, j], form.matrix[j, m]
            if np.isinf(a) and np.isinf(b) and a != b:
                continue
            if form.matrix[i, m] > a + b:
                canon_failures.append(f"{tag}: triangle fails at {i},{j},{m}")
        grid = np.array(list(itertools.product(range(WINDOW), repeat=size)), dtype=float)
        mask = implementation_mask(raw, grid)
        if not np.array_equal(mask, implementation_mask(form.matrix, grid)):
            canon_failures.append(f"{tag}: implementation sets differ")
        if is_implementable(spec):
            least = minimal_implementation(spec)
            if not verify_implementation(spec, least):
                minimal_failures.append(f"{tag}: least assignment is not an implementation")
            floor = np.array([least[a] for a in spec.agents], dtype=float)
            if mask.any() and not (grid[mask] >= floor).all():
                minimal_failures.append(f"{tag}: an implementation lies below the least one")
        elif mask.any():
            canon_failures.append(f"{tag}: not implementable yet has implementations")
    return (
        SuiteResult(name="canonical-form", checked=count, failures=canon_failures),
        SuiteResult(name="minimal-implementation", checked=count, failures=minimal_failures),
    )


def acme_suite() -> SuiteResult:
    scenario = load_bundled("acme")
    delta = scenario.spec.delta
    failures = []
    form = canonical_form(delta)
    if (form.value("1", "2"), form.value("2", "1"), form.value("1", "1")) != (100, 300, 0):
        failures.append("canonical form differs from 100/300")
    if not is_implementable(delta):
        failures.append("not implementable")
    if minimal_implementation(delta) != {"1": 0, "2": 0}:
        failures.append("least implementation is not (0, 0)")
    return SuiteResult(name="acme", checked=1, failures=failures)


def _runs(scenario: Scenario, rule) -> list:
    return enumerate_runs(scenario.context, rule, scenario.oracle.horizon, scenario.oracle.max_runs)


def broom_suite(names: tuple[str, ...] = ("c1_zero", "ring3_zero", "star3_zero")) -> SuiteResult:
    failures = []
    checked = 0
    for name in names:
        scenario = load_bundled(name)
        spec = scenario.spec
        for k, run in enumerate(_runs(scenario, optimal_response_rule(spec))):
            times = {a: run.responses.get(a) for a in spec.agents}
            if not run.triggered(spec.trigger) or None in times.values():
                continue
            checked += 1
            if not find_brooms(run, spec.trigger, spec.agents, times):
                failures.append(f"{name} run {k}: no broom by the response times {times}")
    return SuiteResult(name="broom", checked=checked, failures=failures)


def centipede_suite(
    names: tuple[str, ...] = ("c1_zero", "c1_gap", "c1_lead", "relay_zero", "ring3_zero"),
    max_vertices: int = 4,
) -> SuiteResult:
    failures = []
    checked = 0
    for name in names:
        scenario = load_bundled(name)
        spec = scenario.spec
        for label, rule in (("optimal", optimal_response_rule(spec)), ("broom", broom_response_rule(spec))):
            runs = _runs(scenario, rule)
            if not verify_tcr(spec, runs):
                failures.append(f"{name}/{label}: responses violate the constraints")
                continue
            for k, run in enumerate(runs):
                if not run.triggered(spec.trigger):
                    continue
                for i in sorted(spec.agents):
                    t = run.responses.get(i)
                    if t is None:
                        continue
                    for path in constraint_walks(spec.delta, i, max_vertices):
                        checked += 1
                        found = has_path_traversing_centipede(run, spec.trigger, list(path), spec.delta, t)
                        if not (found.found or found.clipped):
                            failures.append(f"{name}/{label} run {k}: no centipede along {path} at {t}")
    return SuiteResult(name="path-centipede", checked=checked, failures=failures)


def cross_check_suite(names: tuple[str, ...] = ("c1_gap", "c1_lead", "chain3", "relay_gap")) -> SuiteResult:
    failures = []
    checked = 0
    for name in names:
        scenario = load_bundled(name)
        spec = scenario.spec
        runs = _runs(scenario, optimal_response_rule(spec))
        brute = apply_rule(runs, bruteforce_response_rule(spec, scenario.oracle.path_budget))
        agents = sorted(spec.agents)
        for k, (a, b) in enumerate(zip(response_times(runs, agents), response_times(brute, agents), strict=True)):
            checked += 1
            if a != b:
                failures.append(f"{name} run {k}: optimal {a} bruteforce {b}")
    return SuiteResult(name="optimal-vs-bruteforce", checked=checked, failures=failures)


def oracle_suite(names: tuple[str, ...] = ("relay_zero", "relay_gap"), seed: int = TCR_SELFTEST_SEED) -> SuiteResult:
    failures = []
    for name in names:
        scenario = load_bundled(name)
        result = compare_oracle(
            scenario.spec, scenario.oracle.horizon, name=name, cap=scenario.oracle.max_runs, seed=seed
        )
        failures += [f"{name}: {d}" for d in result.disagreements]
        for flag in ("coordinated", "stable", "maximal", "nd_knowledge"):
            if not getattr(result, flag):
                failures.append(f"{name}: {flag} check failed")
        if result.f_equals_g is False:
            failures.append(f"{name}: f and g fixed points differ")
    return SuiteResult(name="knowledge-oracle", checked=len(names), failures=failures)


def solvability_suite() -> SuiteResult:
    failures = []
    c1 = load_bundled("c1_zero").spec
    if not check_solvability(c1).solvable:
        failures.append("C1 with simultaneous response should be solvable")
    if worst_case_latest_response(c1) != 2:
        failures.append("C1 bound should be 2")
    ctx = c1.context
    one_way = Context(
        agents=ctx.agents,
        channels=tuple(c for c in ctx.channels if c.source == "1"),
        external_inputs=ctx.external_inputs,
    )
    if not check_solvability(TcrSpec(context=one_way, trigger=c1.trigger, agents=c1.agents, delta=c1.delta)).solvable:
        failures.append("C1 without 2->1 should stay solvable")
    silent = Context(agents=ctx.agents, external_inputs=ctx.external_inputs)
    if check_solvability(TcrSpec(context=silent, trigger=c1.trigger, agents=c1.agents, delta=c1.delta)).solvable:
        failures.append("C1 without channels should be unsolvable")
    return SuiteResult(name="solvability", checked=4, failures=failures)


def eventual_suite(names: tuple[str, ...] = ("c1_zero", "relay_zero")) -> SuiteResult:
    failures = []
    for name in names:
        scenario = load_bundled(name)
        spec = scenario.spec
        agents = sorted(spec.agents)
        space = PointSpace(_runs(scenario, optimal_response_rule(spec)))
        psi = space.input_by(spec.trigger)
        unbounded = ImplementationSpec(agents=spec.delta.agents)
        fixed = delta_common_knowledge(space, agents, unbounded, psi)
        scalar = eventual_common_knowledge(space, agents, psi)
        meet = space.full()
        for i in agents:
            meet = meet & fixed[i]
        if meet != scalar:
            failures.append(f"{name}: intersection of coordinates differs from eventual common knowledge")
        for j in agents:
            if knows(space, j, psi & fixed[j]) != knows(space, j, psi & scalar):
                failures.append(f"{name}: agent {j} knowledge differs")
    return SuiteResult(name="eventual-common-knowledge", checked=len(names), failures=failures)


def run_selftest(seed: int = TCR_SELFTEST_SEED) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    results = [*canonical_suite(rng), acme_suite(), solvability_suite()]
    results += [broom_suite(), centipede_suite(), cross_check_suite()]
    results += [oracle_suite(seed=seed), eventual_suite()]
    for result in results:
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, "%s: %d checked, %d failures", result.name, result.checked, len(result.failures))
    return results
