import numpy as np

from tcr.utils.constraints import is_implementable
from tcr.utils.selftest import (
    acme_suite,
    broom_suite,
    canonical_suite,
    centipede_suite,
    cross_check_suite,
    eventual_suite,
    random_spec,
    solvability_suite,
)


def test_random_spec_honours_request():
    rng = np.random.default_rng(7)
    assert is_implementable(random_spec(rng, 3, implementable=True))
    assert not is_implementable(random_spec(rng, 3, implementable=False))


def test_canonical_suites_pass():
    canon, minimal = canonical_suite(np.random.default_rng(1), count=60)
    assert canon.passed, canon.failures
    assert minimal.passed, minimal.failures
    assert canon.checked == 60


def test_fixed_example_suites_pass():
    for result in (acme_suite(), solvability_suite()):
        assert result.passed, result.failures


def test_structure_suites_pass():
    brooms = broom_suite(("c1_zero",))
    assert brooms.passed, brooms.failures
    assert brooms.checked > 0
    centipedes = centipede_suite(("c1_gap",), max_vertices=3)
    assert centipedes.passed, centipedes.failures


def test_cross_check_and_eventual_suites_pass():
    for result in (cross_check_suite(("relay_gap",)), eventual_suite(("relay_zero",))):
        assert result.passed, result.failures
        assert result.checked > 0
