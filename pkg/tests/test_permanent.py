import itertools
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from permix import permanent
from permix.default.exceptions import CapExceeded, DimensionMismatch, IllConditioned
from permix.kernels import complete_homogeneous, esp_batch, rectangular_sum, ryser, ryser_exact
from permix.mixtures import ComponentList, FiniteDistribution, build_mixture_matrix
from permix.permanent import (exact_chi2_permanent, load_matrix, log_series_weight, permanent_ryser,
                              permanent_sandwich, r_ell_enumeration, rectangular_permanent_sum, s_series,
                              series_checks, spectral_series_bounds, wick_factors, wick_mc_check)


def naive_permanent(a):
    n = a.shape[0]
    return sum(np.prod([a[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n)))


@pytest.mark.parametrize('n', [1, 2, 3, 5, 7])
def test_ryser_of_ones(n):
    assert ryser(np.ones((n, n))) == pytest.approx(math.factorial(n))


def test_ryser_empty():
    assert ryser(np.zeros((0, 0))) == 1.0


@pytest.mark.parametrize('seed', range(4))
def test_ryser_against_naive(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((5, 5))
    assert ryser(a) == pytest.approx(naive_permanent(a), rel=1e-10, abs=1e-10)
    z = a + 1j * rng.standard_normal((5, 5))
    np.testing.assert_allclose(ryser(z), naive_permanent(z), rtol=1e-10, atol=1e-10)


def test_rectangular_sum_against_subsets():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((3, 6))
    expected = sum(naive_permanent(a[:, list(cols)]) for cols in itertools.combinations(range(6), 3))
    assert rectangular_sum(a) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(DimensionMismatch):
        rectangular_permanent_sum(a.T)


def test_esp_batch_and_homogeneous():
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(esp_batch(x), [1, 6, 11, 6])
    # h_2(1, 2, 3) = 1 + 4 + 9 + 2 + 3 + 6
    np.testing.assert_allclose(complete_homogeneous(x, 2), [1, 6, 25])


def test_golden_permanent(golden, settings):
    assert exact_chi2_permanent(golden, settings) == pytest.approx(0.1296, abs=1e-10)


@pytest.mark.parametrize('method', ['interpolation', 'direct'])
def test_golden_series(golden, settings, method):
    series = s_series(build_mixture_matrix(golden), method, settings)
    np.testing.assert_allclose(series.s, [1.0, 0.0, 0.1296], atol=1e-10)
    assert series.chi2 == pytest.approx(0.1296, abs=1e-10)
    assert all(c.passed for c in series.checks(0.1296))


@pytest.mark.parametrize('seed', range(3))
def test_series_identities(random_components, settings, seed):
    c = random_components(seed, 4, 3)
    failed = [check.name for check in series_checks(c, settings) if not check.passed]
    assert not failed


def bernoulli_instance(seed, n):
    rng = np.random.default_rng(seed)
    return ComponentList(tuple(FiniteDistribution.bernoulli(p) for p in rng.uniform(0.01, 0.99, n)))


@pytest.mark.parametrize('n', range(2, 9))
@pytest.mark.parametrize('seed', [0, 7, 19])
def test_interpolation_matches_direct(settings, n, seed):
    mm = build_mixture_matrix(bernoulli_instance(seed, n))
    interp = s_series(mm, 'interpolation', settings)
    direct = s_series(mm, 'direct', settings)
    np.testing.assert_allclose(interp.s, direct.s, rtol=1e-5, atol=1e-10)
    np.testing.assert_allclose(interp.t, direct.t, rtol=1e-5, atol=1e-10)


def test_interpolation_at_eight_three_symbols(random_components, settings):
    mm = build_mixture_matrix(random_components(21, 8, 3))
    interp = s_series(mm, 'interpolation', settings)
    direct = s_series(mm, 'direct', settings)
    np.testing.assert_allclose(interp.s, direct.s, rtol=1e-5, atol=1e-10)


def test_floating_point_interpolation(random_components, settings):
    mm = build_mixture_matrix(random_components(3, 4, 3))
    floating = s_series(mm, 'interpolation', replace(settings, interpolation_exact_n=0))
    exact = s_series(mm, 'interpolation', settings)
    np.testing.assert_allclose(floating.s, exact.s, rtol=1e-6, atol=1e-11)


def test_floating_point_interpolation_guard(monkeypatch, random_components, settings):
    mm = build_mixture_matrix(random_components(3, 4, 3))
    original = permanent._float_coefficients

    def shifted(abar, nodes):
        coeffs = original(abar, nodes)
        if nodes[0] != 0:
            coeffs[2] *= Fraction(101, 100)
        return coeffs

    monkeypatch.setattr(permanent, '_float_coefficients', shifted)
    with pytest.raises(IllConditioned):
        s_series(mm, 'interpolation', replace(settings, interpolation_exact_n=0))


@pytest.mark.parametrize('seed', range(3))
def test_ryser_exact(seed):
    a = np.random.default_rng(seed).integers(-5, 6, size=(5, 5))
    assert ryser_exact(a.tolist()) == int(naive_permanent(a))
    assert ryser_exact([]) == 1


def test_r_ell(golden, settings):
    assert r_ell_enumeration(golden, 0, settings) == 1.0
    assert r_ell_enumeration(golden, 1, settings) == pytest.approx(0.0, abs=1e-14)
    assert r_ell_enumeration(golden, 2, settings) == pytest.approx(0.1296, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        r_ell_enumeration(golden, 3, settings)


def test_sandwich_and_spectral(golden, settings):
    mm = build_mixture_matrix(golden)
    sandwich = permanent_sandwich(mm, settings)
    assert sandwich.lower == pytest.approx(0.5)
    assert sandwich.permanent == pytest.approx(0.68 ** 2 + 0.32 ** 2)
    assert sandwich.upper == pytest.approx(0.5 / 0.64)
    assert all(c.passed for c in sandwich.checks)
    bounds = spectral_series_bounds(mm, s_series(mm, 'direct', settings))
    assert bounds['entire_sum'] == pytest.approx(1 / 0.64)
    assert all(c.passed for c in bounds['checks'])


def test_sandwich_flags_unit_eigenvalue(settings):
    c = ComponentList.from_probs([[1.0, 0.0], [0.0, 1.0]])
    sandwich = permanent_sandwich(build_mixture_matrix(c), settings)
    assert sandwich.upper_infinite
    assert sandwich.upper == math.inf


def test_wick_targets(random_components, settings):
    mm = build_mixture_matrix(random_components(5, 3, 3))
    root, reduced = wick_factors(mm)
    np.testing.assert_allclose(root @ root.T, mm.entries, atol=1e-10)
    np.testing.assert_allclose(reduced @ reduced.T, mm.centered, atol=1e-10)
    full = wick_mc_check(root, 20000, seed=1, settings=settings)
    assert full.z_score <= 4
    degree = wick_mc_check(reduced, 20000, seed=2, ell=2, settings=settings)
    assert degree.z_score <= 4
    with pytest.raises(ValueError):
        wick_mc_check(root, 10, seed=0, settings=settings)


def test_permanent_cap(settings):
    with pytest.raises(CapExceeded):
        permanent_ryser(np.ones((settings.permanent_n + 1,) * 2), settings)
    with pytest.raises(DimensionMismatch):
        permanent_ryser(np.ones((2, 3)), settings)


def test_load_matrix():
    real = load_matrix({'n': 2, 'rows': [[1, 2], [3, 4]]})
    assert ryser(real) == pytest.approx(10.0)
    cplx = load_matrix({'rows': [[1, 0], [0, 1]], 'complex': True, 'imag_rows': [[0, 1], [1, 0]]})
    assert ryser(cplx) == pytest.approx(1 + 1j * 1j)
    with pytest.raises(DimensionMismatch):
        load_matrix({'n': 3, 'rows': [[1, 2], [3, 4]]})


def test_series_weight():
    assert math.exp(log_series_weight(5, 3, 2)) == pytest.approx(3 / 10)
    assert log_series_weight(5, 1, 2) == -math.inf
