import itertools
import math

import numpy as np
import pytest

from permix.default.exceptions import (BoundViolation, CapExceeded, DimensionMismatch, InvalidDistribution,
                                       UnsupportedSupport)
from permix.mixtures import (ComponentList, FiniteDistribution, MixtureMatrix, build_mixture_matrix,
                             delta_from_h2, divergence, exact_chi2_bruteforce, iid_mixture_pmf,
                             instance_capacity, instance_d_chi2, instance_delta_h2, mixture_checks,
                             mixture_divergences, permutation_mixture_pmf, permutation_mixture_table,
                             SignedMeasureVector, product_table, support_ratio)


def test_golden_matrix(golden):
    mm = build_mixture_matrix(golden)
    np.testing.assert_allclose(mm.entries, [[0.68, 0.32], [0.32, 0.68]], atol=1e-12)
    assert mm.lambda2 == pytest.approx(0.36, abs=1e-10)
    assert mm.trace == pytest.approx(1.36, abs=1e-12)
    assert mm.spectral_gap == pytest.approx(1 / instance_delta_h2(golden), abs=1e-10)


def test_golden_functionals(golden):
    assert instance_capacity(golden) == pytest.approx(0.36, abs=1e-12)
    assert instance_d_chi2(golden) == pytest.approx(2.25, abs=1e-12)
    assert instance_delta_h2(golden) == pytest.approx(1.5625, abs=1e-12)


def test_golden_bruteforce(golden, settings):
    assert exact_chi2_bruteforce(golden, settings) == pytest.approx(0.1296, abs=1e-10)


def test_pmf_matches_table(golden, settings):
    table = permutation_mixture_table(golden.matrix, settings)
    for index, x in enumerate(itertools.product(range(2), repeat=2)):
        assert permutation_mixture_pmf(golden, x, settings) == pytest.approx(table[index], abs=1e-14)
        assert iid_mixture_pmf(golden, x, settings) == pytest.approx(0.25, abs=1e-14)
    # (0, 1): one coordinate from each component in either order
    assert table[1] == pytest.approx(0.5 * (0.8 * 0.8 + 0.2 * 0.2), abs=1e-14)


@pytest.mark.parametrize('seed', range(5))
def test_random_marginals(random_components, settings, seed):
    c = random_components(seed, 3, 3)
    assert all(check.passed for check in mixture_checks(c, settings))
    assert permutation_mixture_table(c.matrix, settings).sum() == pytest.approx(1.0, abs=1e-12)
    assert product_table(c.marginal.probs, 3, settings).sum() == pytest.approx(1.0, abs=1e-12)


def test_centered_measures(golden, settings):
    measures = golden.centered_measures
    np.testing.assert_allclose(measures[0].weights, [0.3, -0.3], atol=1e-12)
    np.testing.assert_allclose(measures[0].weights + measures[1].weights, 0.0, atol=1e-12)
    assert {check.name for check in mixture_checks(golden, settings)} >= {'psi_int_zero', 'psi_sum_zero'}
    with pytest.raises(InvalidDistribution):
        SignedMeasureVector(np.array([0.5, 0.25]))
    with pytest.raises(DimensionMismatch):
        SignedMeasureVector(np.zeros((2, 2)))


def test_divergence_values():
    p, q = FiniteDistribution.bernoulli(0.2), FiniteDistribution.bernoulli(0.8)
    assert divergence('chi2', p, q) == pytest.approx(2.25)
    assert divergence('tv', p, q) == pytest.approx(0.6)
    assert divergence('hellinger2', p, q) == pytest.approx(0.4)
    assert divergence('lecam', p, q) == pytest.approx(0.36)
    assert divergence('kl', p, q) == pytest.approx(0.6 * math.log(4))


def test_singular_pair():
    p, q = FiniteDistribution.point_mass(0, 2), FiniteDistribution.point_mass(1, 2)
    assert divergence('chi2', p, q) == math.inf
    assert divergence('kl', p, q) == math.inf
    assert divergence('hellinger2', p, q) == pytest.approx(2.0)
    assert delta_from_h2(2.0) == math.inf
    c = ComponentList((p, q))
    assert instance_d_chi2(c) == math.inf
    assert instance_delta_h2(c) == math.inf
    # the permutation mixture of two disjoint point masses is still absolutely continuous
    assert exact_chi2_bruteforce(c) == pytest.approx(1.0)


def test_divergences_of_golden(golden, settings):
    values = mixture_divergences(golden, settings)
    assert set(values) == {'chi2', 'hellinger2', 'tv', 'kl', 'lecam'}
    assert values['chi2'] == pytest.approx(0.1296, abs=1e-10)
    assert 0 <= values['tv'] <= 1
    assert values['hellinger2'] <= values['chi2']


@pytest.mark.parametrize('probs', [[0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0], []])
def test_invalid_distribution(probs):
    with pytest.raises(InvalidDistribution):
        FiniteDistribution(np.asarray(probs, dtype=float))


def test_alphabet_mismatch():
    with pytest.raises(DimensionMismatch):
        ComponentList.from_probs([[0.5, 0.5], [0.2, 0.3, 0.5]])
    with pytest.raises(DimensionMismatch):
        ComponentList.from_dict({'alphabet_size': 3, 'components': [[0.5, 0.5]]})


def test_unsupported_symbol():
    c = ComponentList.from_probs([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]])
    # symbol 2 carries no mass anywhere, so it is simply dropped
    assert build_mixture_matrix(c).trace == pytest.approx(1.0)
    with pytest.raises(UnsupportedSupport):
        support_ratio(np.array([0.5, 0.5, 0.0]), np.array([[0.4, 0.4, 0.2]]))


def test_tuple_errors(golden, settings):
    with pytest.raises(DimensionMismatch):
        permutation_mixture_pmf(golden, (0, 1, 1), settings)
    with pytest.raises(DimensionMismatch):
        permutation_mixture_pmf(golden, (0, 2), settings)


def test_enumeration_cap(settings):
    rng = np.random.default_rng(3)
    c = ComponentList.random(rng, 11, 2)
    with pytest.raises(CapExceeded):
        permutation_mixture_pmf(c, (0,) * 11, settings)


def test_validate_rejects_non_stochastic():
    mm = MixtureMatrix.from_entries(np.array([[0.7, 0.2], [0.2, 0.7]]))
    checks = {c.name: c for c in mm.validate()}
    assert not checks['row_sums'].passed
    with pytest.raises(BoundViolation):
        checks['row_sums'].require()


def test_replicate(golden):
    doubled = golden.replicate(2)
    assert doubled.n == 4
    np.testing.assert_allclose(doubled.marginal.probs, golden.marginal.probs)
    assert instance_capacity(doubled) == pytest.approx(instance_capacity(golden))
