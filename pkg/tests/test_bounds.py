import math

import numpy as np
import pytest

from permix.bounds import (BoundReport, definetti_bound_and_exact, diagonal_block_lower_bound, eb_quadratic_bound,
                           eb_risk_gap_bound, evaluate_instance, family_tightness_lower_bound, geometric_tail,
                           greenshtein_ritov_check, lecam_pair_checks, lower_spectral, marginal_chi2_bruteforce,
                           mutual_info_gap, replication_trend, thm_main_bounds, two_mixtures_check,
                           worst_case_family, worst_case_matrix, worst_case_size)
from permix.capacity import ExplicitFinite, FamilyFunctionals, family_functionals
from permix.default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from permix.mixtures import ComponentList, FiniteDistribution, exact_chi2_bruteforce, instance_capacity

GOLDEN_UB2 = math.expm1(0.36 * (1 + math.log(1.5625)))
GOLDEN_UB3 = math.expm1(1.36 * math.log(3.25))


def test_golden_upper_bounds():
    ub1, ub2, ub3 = thm_main_bounds(2, 0.36, 1.5625, 2.25)
    assert ub1 == pytest.approx(1.296)
    assert ub2 == pytest.approx(GOLDEN_UB2)
    assert ub3 == pytest.approx(GOLDEN_UB3)


@pytest.mark.parametrize('n, c, expected', [(2, 0.5, 0.25), (4, 2.0, 28.0), (5, 1.0, 4.0), (1, 3.0, 0.0),
                                            (10, 0.0, 0.0)])
def test_geometric_tail(n, c, expected):
    assert geometric_tail(n, c) == pytest.approx(expected)


def test_infinite_inputs():
    ub1, ub2, ub3 = thm_main_bounds(3, 0.5, math.inf, math.inf)
    assert math.isfinite(ub1)
    assert ub2 == math.inf and ub3 == math.inf
    # (e Delta)^0 = 1 even when Delta is infinite
    assert thm_main_bounds(3, 0.0, math.inf, 1.0)[1] == 0.0
    assert geometric_tail(2000, 50.0) == math.inf


@pytest.mark.parametrize('c, delta, d', [(-0.1, 1.0, 1.0), (0.1, 0.5, 1.0), (0.1, 1.0, -1.0), (math.nan, 1.0, 1.0)])
def test_invalid_bound_inputs(c, delta, d):
    with pytest.raises(InvalidDistribution):
        thm_main_bounds(3, c, delta, d)


def test_lower_spectral():
    assert lower_spectral(0.36) == pytest.approx(1 / math.sqrt(1 - 0.36 ** 2) - 1)
    assert lower_spectral(1.0) == math.inf
    assert lower_spectral(0.0) == 0.0


def test_evaluate_golden(golden, settings):
    report = evaluate_instance(golden, settings=settings)
    assert report.provenance == 'instance'
    assert report.exact_chi2 == pytest.approx(0.1296, abs=1e-10)
    assert report.best == pytest.approx(GOLDEN_UB2)
    assert report.lower_spectral <= report.exact_chi2
    assert all(c.passed for c in report.checks)


def test_evaluate_provenance(golden, settings):
    user = evaluate_instance(golden, user=(1.0, 2.0, 3.0), settings=settings)
    assert user.provenance == 'user'
    assert user.ub1 == pytest.approx(10.0)
    family = FamilyFunctionals(0.5, 0.4, 4.0, 1.0, 4.0)
    assert evaluate_instance(golden, family=family, settings=settings).c == 0.5


def test_violation_is_reported():
    report = BoundReport(2, 0.1, 1.0, 1.0, 0.5, 2.0, 2.0, 0.0, exact_chi2=1.0)
    failed = {c.name for c in report.checks if not c.passed}
    assert failed == {'exact_below_ub1', 'exact_below_best'}


@pytest.mark.parametrize('seed', range(4))
def test_random_sandwich(random_components, settings, seed):
    c = random_components(seed, 4, 3)
    report = evaluate_instance(c, settings=settings)
    assert report.exact_chi2 == pytest.approx(exact_chi2_bruteforce(c, settings), rel=1e-8, abs=1e-10)
    assert all(check.passed for check in report.checks)


def test_definetti_golden(golden, settings):
    full = definetti_bound_and_exact(golden, 2, settings)
    assert full.exact == pytest.approx(0.1296, abs=1e-10)
    assert full.bound == pytest.approx(min(1.296, GOLDEN_UB2))
    assert full.bruteforce == pytest.approx(0.1296, abs=1e-10)
    single = definetti_bound_and_exact(golden, 1, settings)
    assert single.exact == 0.0 and single.bound == 0.0
    assert all(c.passed for c in full.checks + single.checks)
    with pytest.raises(DimensionMismatch):
        definetti_bound_and_exact(golden, 3, settings)


@pytest.mark.parametrize('seed', range(3))
def test_definetti_identity(random_components, settings, seed):
    c = random_components(seed, 5, 2)
    values = []
    for k in range(1, 6):
        result = definetti_bound_and_exact(c, k, settings)
        assert result.exact == pytest.approx(marginal_chi2_bruteforce(c, k, settings), rel=1e-7, abs=1e-10)
        assert all(check.passed for check in result.checks)
        values.append(result.exact)
    assert values == sorted(values)


@pytest.mark.parametrize('seed', range(3))
def test_two_mixtures_chain(random_components, settings, seed):
    rest = random_components(seed, 3, 3)
    rng = np.random.default_rng(100 + seed)
    p1 = FiniteDistribution.from_weights(0.1 + rng.dirichlet(np.ones(3)))
    q1 = FiniteDistribution.from_weights(0.1 + rng.dirichlet(np.ones(3)))
    result = two_mixtures_check(rest, p1, q1, settings)
    assert result.n == 4
    # capacity of the shared components, below that of the whole family
    assert result.c == pytest.approx(instance_capacity(rest))
    everyone = family_functionals(ExplicitFinite((p1, q1) + rest.components), settings)
    assert result.c <= everyone.c_chi2_upper + 1e-8
    assert all(c.passed for c in result.checks)
    with pytest.raises(DimensionMismatch):
        two_mixtures_check(rest, FiniteDistribution.bernoulli(0.5), q1, settings)


def test_mutual_info_golden(golden, settings):
    result = mutual_info_gap(golden, settings)
    assert result.information == pytest.approx(0.36)
    assert result.ub == pytest.approx(0.36 * (1 + math.log(1.5625)))
    assert 0 <= result.gap <= result.ub
    assert all(c.passed for c in result.checks)


def test_eb_bounds():
    expected = math.sqrt(6 * 2 * 2.25 * math.exp(3 * 0.36 * (1 + math.log(1.5625))))
    assert eb_risk_gap_bound(1.0, 2, 0.36, 1.5625, 2.25) == pytest.approx(expected)
    assert eb_risk_gap_bound(0.0, 2, 0.36, 1.5625, 2.25) == 0.0
    assert eb_risk_gap_bound(1.0, 2, 0.36, 1.5625, math.inf) == math.inf
    assert eb_quadratic_bound(1.0, 2.25, 0.36) == pytest.approx(12.24)
    with pytest.raises(InvalidDistribution):
        eb_quadratic_bound(-1.0, 1.0, 1.0)


def test_worst_case_matrix(settings):
    assert worst_case_size(2, 0.5) == (2, 1)
    construction = worst_case_matrix(2, 0.5, n=2, settings=settings)
    np.testing.assert_allclose(construction.matrix.eigenvalues, [1.0, 0.5, 0.0, 0.0], atol=1e-12)
    assert construction.matrix.trace == pytest.approx(1.5)
    assert all(c.passed for c in construction.checks)
    block = diagonal_block_lower_bound(2, 2, 0.5)
    assert block.value == pytest.approx(4 * 0.375 ** 4)
    assert block.simple == pytest.approx(4 * 0.25 ** 4)
    assert block.permanent is not None
    assert all(c.passed for c in block.checks)


def test_worst_case_errors(settings):
    with pytest.raises(InvalidDistribution):
        worst_case_size(0.5, 0.5)
    with pytest.raises(InvalidDistribution):
        worst_case_size(2, 1.0)
    with pytest.raises(CapExceeded):
        worst_case_matrix(10, 0.01, settings=settings)


def test_worst_case_family(quick_settings):
    construction = worst_case_family(2, 0.25, quick_settings)
    np.testing.assert_allclose(construction.family.matrix, [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5]])
    assert construction.functionals.delta_h2 == pytest.approx(4.0)
    assert construction.functionals.d_chi2 == math.inf
    assert all(c.passed for c in construction.checks)
    assert construction.components().n == 2


def test_leave_one_out(golden, settings):
    result = greenshtein_ritov_check(golden.components, settings)
    assert result.max_chi2 == pytest.approx(0.5625)
    assert result.bound == pytest.approx(1.125)
    assert all(c.passed for c in result.checks)
    with pytest.raises(DimensionMismatch):
        greenshtein_ritov_check(golden.components[:1], settings)


def test_tightness_and_lecam(golden):
    assert family_tightness_lower_bound(0.4, 1.5625) == pytest.approx(0.02)
    assert family_tightness_lower_bound(2.0, math.inf) == math.inf
    assert all(c.passed for c in lecam_pair_checks(*golden.components))


def test_replication_trend(golden, settings):
    trend = replication_trend(golden, 3, settings)
    np.testing.assert_allclose(trend.chi2, [0.1296, 0.1032, 0.0900], atol=1e-4)
    assert trend.chi2[0] == pytest.approx(0.1296, abs=1e-10)
    # falls towards the large-m reference from above
    assert trend.chi2[0] > trend.chi2[1] > trend.chi2[2] > trend.lower_spectral
    assert trend.spectral_cap == pytest.approx(0.5625)
    assert all(c.passed for c in trend.checks)
    with pytest.raises(CapExceeded):
        replication_trend(golden, 20, settings)
