import math

import numpy as np
import pytest

from permix.default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from permix.esp import (CenteredVector, binary_support_vector, esp_all, esp_bounds, hadamard_check,
                        newton_checks, random_hadamard_sweep, verify_esp_theorem)


def test_two_point_example():
    e = esp_all(binary_support_vector(2, 1))
    assert e[2] == pytest.approx(-1.0)
    assert abs(e[2]) / esp_bounds(2, 2)[2] == pytest.approx(1 / math.sqrt(10))


@pytest.mark.parametrize('n, ell', [(2, 2), (6, 3), (10, 1), (20, 10)])
def test_bound_ordering(n, ell):
    complex_bound, relaxed, real = esp_bounds(n, ell)
    assert complex_bound <= relaxed * (1 + 1e-12)
    assert real == pytest.approx(math.sqrt(10 * math.comb(n, ell)))


def test_verify_small():
    report = verify_esp_theorem(2, 0, seed=0)
    assert report.max_ratio_real == pytest.approx(0.316, abs=1e-3)
    assert not report.violations
    assert all(c.passed for c in report.checks)


def test_verify_with_complex_trials():
    report = verify_esp_theorem(12, 200, seed=7)
    assert not report.violations
    assert 0 < report.max_ratio_complex <= 1 + 1e-8
    assert report.max_ratio_real < 1


@pytest.mark.parametrize('n', [4, 6, 8, 12])
def test_balanced_vector_generating_function(n):
    # entries are +1 and -1, so prod (1 + x_i z) = (1 - z^2)^(n/2)
    e = esp_all(binary_support_vector(n, n // 2))
    for ell in range(n + 1):
        expected = 0.0 if ell % 2 else (-1) ** (ell // 2) * math.comb(n // 2, ell // 2)
        assert e[ell] == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize('seed', [0, 3, 11])
def test_concatenation_convolves(seed):
    rng = np.random.default_rng(seed)
    x = CenteredVector.normalize(rng.normal(size=5)).values
    y = CenteredVector.normalize(rng.normal(size=7) + 1j * rng.normal(size=7)).values
    joined = esp_all(np.concatenate([x, y])).e
    np.testing.assert_allclose(joined, np.convolve(esp_all(x).e, esp_all(y).e), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize('n, k', [(5, 1), (5, 4), (8, 3)])
def test_binary_support_vector_is_normalized(n, k):
    x = binary_support_vector(n, k)
    assert x.values.sum() == pytest.approx(0.0, abs=1e-12)
    assert (x.values ** 2).sum() == pytest.approx(n)
    assert all(c.passed for c in newton_checks(x))


def test_centered_vector_errors():
    with pytest.raises(InvalidDistribution):
        CenteredVector(np.array([1.0, 1.0]))
    with pytest.raises(InvalidDistribution):
        CenteredVector(np.array([0.5, -0.5]))
    with pytest.raises(InvalidDistribution):
        CenteredVector.normalize([3.0, 3.0, 3.0])
    with pytest.raises(DimensionMismatch):
        binary_support_vector(4, 4)


def test_complex_normalize():
    x = CenteredVector.normalize([1 + 1j, 2 - 1j, -0.5j, 4.0])
    assert abs(x.values.sum()) < 1e-12
    assert np.sum(np.abs(x.values) ** 2) == pytest.approx(4.0)


def test_caps():
    with pytest.raises(CapExceeded):
        esp_all(np.zeros(65))
    with pytest.raises(CapExceeded):
        verify_esp_theorem(65, 0, seed=0)


def test_hadamard(settings):
    a = np.array([[1.0, -1.0, 0.0], [2.0, -1.0, -1.0]])
    result = hadamard_check(a, settings)
    assert result.check.passed
    with pytest.raises(InvalidDistribution):
        hadamard_check(np.array([[1.0, 1.0]]), settings)
    failures = random_hadamard_sweep(30, seed=3, settings=settings)
    assert [c.name for c in failures] == ['hadamard_worst_ratio']
    assert failures[0].passed
