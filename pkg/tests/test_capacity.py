import json
import math

import numpy as np
import pytest

from permix.capacity import (BernoulliInterval, ExplicitFinite, GaussianLocation, PoissonInterval,
                             capacity_estimate, chi2_mutual_information, family_from_dict, family_functionals,
                             load_family, poisson_strip_bounds, simplex_project, union_capacity_bound)
from permix.default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from permix.mixtures import FiniteDistribution
from permix.quadrature import gaussian_affinity, gh_standard_normal


@pytest.mark.parametrize('x, expected', [([0.5, 0.5], [0.5, 0.5]), ([2.0, 0.0], [1.0, 0.0]),
                                         ([0.2, 0.2, 0.2], [1 / 3, 1 / 3, 1 / 3]), ([-1.0, 3.0], [0.0, 1.0])])
def test_simplex_project(x, expected):
    np.testing.assert_allclose(simplex_project(np.array(x)), expected, atol=1e-12)


def test_two_point_information():
    family = ExplicitFinite((FiniteDistribution.bernoulli(0.25), FiniteDistribution.bernoulli(0.75)))
    assert chi2_mutual_information(family, [0.5, 0.5]) == pytest.approx(0.25)
    with pytest.raises(DimensionMismatch):
        chi2_mutual_information(family, [1.0])
    with pytest.raises(InvalidDistribution):
        chi2_mutual_information(family, [0.7, 0.7])


def test_singular_capacity():
    family = ExplicitFinite((FiniteDistribution.point_mass(0, 2), FiniteDistribution.point_mass(1, 2)))
    value, prior = capacity_estimate(family, restarts=4, seed=0, iterations=50)
    assert value == pytest.approx(1.0, abs=1e-9)
    assert prior.sum() == pytest.approx(1.0)


def test_singleton_and_cap():
    single = ExplicitFinite((FiniteDistribution.bernoulli(0.3),))
    assert capacity_estimate(single)[0] == 0.0
    big = ExplicitFinite(tuple(FiniteDistribution.bernoulli(p) for p in np.linspace(0.1, 0.9, 65)))
    with pytest.raises(CapExceeded):
        capacity_estimate(big)


def test_union_bound():
    assert union_capacity_bound([1.0, 2.0]) == pytest.approx(4.0)
    assert union_capacity_bound([0.0] * 3) == pytest.approx(2.0)
    with pytest.raises(DimensionMismatch):
        union_capacity_bound([])


def test_bernoulli_functionals(quick_settings):
    result = family_functionals(BernoulliInterval(0.25), quick_settings, seed=1)
    assert result.c_chi2_upper == pytest.approx(0.5)
    assert result.d_chi2 == pytest.approx(0.25 / 0.75 + 0.25 / 0.25)
    assert result.notes['two_point_uniform'] == pytest.approx(0.25)
    assert result.c_chi2_estimate >= 0.25 - 1e-12
    assert all(c.passed for c in result.checks())


def test_bernoulli_half_is_degenerate(quick_settings):
    result = family_functionals(BernoulliInterval(0.5), quick_settings)
    assert result.c_chi2_upper == 0.0
    assert result.c_chi2_estimate == 0.0
    assert result.delta_h2 == pytest.approx(1.0)


def test_gaussian_functionals(quick_settings):
    result = family_functionals(GaussianLocation(1.0), quick_settings, seed=2)
    assert result.d_chi2 == pytest.approx(math.expm1(4.0))
    assert result.d_h2 == pytest.approx(2 - 2 * math.exp(-0.5))
    assert result.notes['h2_quadrature'] == pytest.approx(result.d_h2, abs=1e-10)
    assert result.delta_h2 == pytest.approx(math.exp(1.0))
    assert all(c.passed for c in result.checks())


def test_gaussian_support(quick_settings):
    result = family_functionals(GaussianLocation(1.0, (-1.0, 1.0)), quick_settings)
    assert result.c_chi2_upper <= 1.0
    assert result.notes['support_size'] == 2
    with pytest.raises(InvalidDistribution):
        GaussianLocation(1.0, (2.0,))


@pytest.mark.parametrize('m', [0.5, 1.0])
def test_poisson_small_rates(quick_settings, m):
    result = family_functionals(PoissonInterval(m), quick_settings)
    assert result.c_chi2_upper == pytest.approx(1 - math.exp(-m))
    assert result.d_chi2 == math.inf
    assert result.delta_h2 == pytest.approx(math.exp(m), rel=1e-9)
    assert all(c.passed for c in result.checks())


def test_poisson_strips(quick_settings):
    bounds = poisson_strip_bounds(4.0)
    assert bounds == pytest.approx([1 - math.exp(-1), math.expm1(9.0)])
    result = family_functionals(PoissonInterval(4.0), quick_settings)
    assert result.c_chi2_upper == pytest.approx(union_capacity_bound(bounds))
    assert family_functionals(PoissonInterval(0.0), quick_settings).c_chi2_upper == 0.0
    with pytest.raises(CapExceeded):
        family_functionals(PoissonInterval(1.0, truncation_mass=1e-3), quick_settings)


def test_explicit_functionals(quick_settings):
    spec = family_from_dict({'variant': 'explicit', 'components': [[0.8, 0.2], [0.2, 0.8]]})
    result = family_functionals(spec, quick_settings)
    assert result.c_chi2_upper == pytest.approx(1.0)
    assert result.c_chi2_estimate == pytest.approx(0.36, abs=1e-6)
    assert result.d_chi2 == pytest.approx(2.25)


def test_family_files(tmp_path):
    path = tmp_path / 'family.json'
    path.write_text(json.dumps({'variant': 'gaussian', 'mu': 0.5, 'support': [-0.5, 0.0, 0.5]}))
    spec = load_family(path)
    assert isinstance(spec, GaussianLocation)
    assert spec.support == (-0.5, 0.0, 0.5)
    assert isinstance(family_from_dict({'variant': 'poisson', 'm': 2}), PoissonInterval)
    with pytest.raises(InvalidDistribution):
        family_from_dict({'variant': 'cauchy'})
    with pytest.raises(InvalidDistribution):
        BernoulliInterval(0.6)


def test_quadrature():
    rule = gh_standard_normal(60)
    assert rule.w.sum() == pytest.approx(1.0)
    assert rule.expect(lambda x: x ** 2) == pytest.approx(1.0)
    assert rule.expect_2d(lambda x, y: (x * y) ** 2) == pytest.approx(1.0)
    assert gaussian_affinity(0.0, 2.0) == pytest.approx(math.exp(-0.5), abs=1e-12)
    with pytest.raises(ValueError):
        gh_standard_normal(1)
