#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Family functionals: chi2 capacity (certified upper bounds and numeric lower
estimates), chi2 and H^2 diameters, and the maximum H^2 singularity.
'''

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.stats import poisson

from .default.config import Settings, get_settings
from .default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from .mixtures import FiniteDistribution, delta_from_h2, divergence, max_pairwise
from .quadrature import gaussian_affinity, gh_standard_normal
from .report import Check, check_close, check_leq
from .sharedutils import dbglog, safe_exp, safe_expm1

FloatArray = NDArray[np.float64]

TAIL_MASS_LIMIT = 1e-6
GRID_POINTS = 9


@dataclass(frozen=True, eq=False)
class ExplicitFinite:
    distributions: Tuple[FiniteDistribution, ...]

    def __post_init__(self) -> None:
        if not self.distributions:
            raise DimensionMismatch('An explicit family needs at least one distribution')
        if len({d.size for d in self.distributions}) != 1:
            raise DimensionMismatch('Family members live on alphabets of different sizes')

    @property
    def matrix(self) -> FloatArray:
        return np.vstack([d.probs for d in self.distributions])


@dataclass(frozen=True)
class GaussianLocation:
    mu_max: float
    support: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.mu_max < 0:
            raise InvalidDistribution('mu_max must be non-negative')
        if self.support is not None:
            if not self.support:
                raise InvalidDistribution('support must be non-empty')
            if max(abs(t) for t in self.support) > self.mu_max + 1e-12:
                raise InvalidDistribution('support points must lie in [-mu_max, mu_max]')


@dataclass(frozen=True)
class BernoulliInterval:
    eps: float

    def __post_init__(self) -> None:
        if not 0 < self.eps <= 0.5:
            raise InvalidDistribution('eps must lie in (0, 1/2]')


@dataclass(frozen=True)
class PoissonInterval:
    m_max: float
    truncation_mass: float = 1e-12

    def __post_init__(self) -> None:
        if self.m_max < 0:
            raise InvalidDistribution('m_max must be non-negative')
        if not 0 < self.truncation_mass:
            raise InvalidDistribution('truncation_mass must be positive')


FamilySpec = Union[ExplicitFinite, GaussianLocation, BernoulliInterval, PoissonInterval]


def family_from_dict(data: Dict[str, Any]) -> FamilySpec:
    variant = data.get('variant')
    if variant == 'explicit':
        return ExplicitFinite(tuple(FiniteDistribution(np.asarray(p, dtype=float)) for p in data['components']))
    if variant == 'gaussian':
        support = data.get('support')
        return GaussianLocation(float(data['mu']), tuple(float(t) for t in support) if support is not None else None)
    if variant == 'bernoulli':
        return BernoulliInterval(float(data['eps']))
    if variant == 'poisson':
        return PoissonInterval(float(data['m']), float(data.get('truncation_mass', 1e-12)))
    raise InvalidDistribution(f'Unknown family variant {variant!r}')


def load_family(path: Union[str, Path]) -> FamilySpec:
    with Path(path).open() as f:
        return family_from_dict(json.load(f))


@dataclass
class FamilyFunctionals:
    c_chi2_upper: float
    c_chi2_estimate: float
    d_chi2: float
    d_h2: float
    delta_h2: float
    notes: Dict[str, Any] = field(default_factory=dict)

    def checks(self) -> List[Check]:
        out = [check_leq('estimate_below_upper', self.c_chi2_estimate, self.c_chi2_upper, rel=0.0, abs_tol=1e-8),
               check_leq('capacity_below_diameter', self.c_chi2_upper, self.d_chi2, rel=0.0, abs_tol=1e-8),
               check_close('delta_from_diameter', self.delta_h2, delta_from_h2(self.d_h2), rel=1e-10)]
        if math.isfinite(self.delta_h2) and math.isfinite(self.d_chi2):
            out.append(check_leq('delta_below_diameter_plus_one', self.delta_h2, self.d_chi2 + 1, rel=0.0, abs_tol=1e-8))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'c_chi2_upper': self.c_chi2_upper, 'c_chi2_estimate': self.c_chi2_estimate,
                'd_chi2': self.d_chi2, 'd_h2': self.d_h2, 'delta_h2': self.delta_h2, 'notes': self.notes}


def _information(matrix: FloatArray, weights: FloatArray) -> float:
    '''sum_i rho_i chi2(P_i || sum_j rho_j P_j) for rho = weights / sum(weights)'''
    rho = weights / weights.sum()
    mix = rho @ matrix
    second = rho @ (matrix ** 2)
    inside = mix > 0
    return float(max(0.0, (second[inside] / mix[inside]).sum() - 1.0))


def chi2_mutual_information(family: ExplicitFinite, prior: Sequence[float] | FloatArray) -> float:
    rho = np.asarray(prior, dtype=float)
    if rho.shape != (len(family.distributions),):
        raise DimensionMismatch(f'Prior of length {rho.size} for a family of size {len(family.distributions)}')
    if np.any(rho < 0) or abs(rho.sum() - 1) > 1e-10:
        raise InvalidDistribution('Prior must be a probability vector')
    mixture = FiniteDistribution.from_weights(rho @ family.matrix)
    return float(sum(r * divergence('chi2', p, mixture)
                     for r, p in zip(rho, family.distributions) if r > 0))


def simplex_project(x: FloatArray) -> FloatArray:
    '''Project vector onto standard simplex.'''
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1
    ks = np.arange(1, x.size + 1)
    k = ks[u - css / ks > 0][-1]
    return np.asarray(np.fmax(x - css[k - 1] / k, 0), dtype=float)


def _ascend(matrix: FloatArray, start: FloatArray, iterations: int, h: float = 1e-7) -> Tuple[float, FloatArray]:
    rho = simplex_project(start)
    value = _information(matrix, rho)
    step = 1.0
    size = rho.size
    for _ in range(iterations):
        grad = np.array([(_information(matrix, rho + h * np.eye(size)[i]) - value) / h for i in range(size)])
        improved = False
        while step > 1e-12:
            candidate = simplex_project(rho + step * grad)
            cand_value = _information(matrix, candidate)
            if cand_value > value:
                rho, value, improved = candidate, cand_value, True
                step *= 2
                break
            step /= 2
        if not improved:
            break
    return value, rho


def capacity_estimate(family: ExplicitFinite, restarts: int = 32, seed: int = 0, iterations: int = 200,
                      starts: Sequence[FloatArray] = ()) -> Tuple[float, FloatArray]:
    '''Best chi2 information found by multi-start projected gradient ascent; a lower estimate of the capacity'''
    size = len(family.distributions)
    if size > 64:
        raise CapExceeded(f'Family of size {size} is above 64')
    matrix = family.matrix
    if size == 1:
        return 0.0, np.ones(1)
    candidates: List[FloatArray] = [np.full(size, 1.0 / size)] + [np.asarray(s, dtype=float) for s in starts]
    for child in np.random.SeedSequence(seed).spawn(max(0, restarts - len(candidates))):
        candidates.append(np.random.default_rng(child).dirichlet(np.ones(size)))
    best_value, best_prior = -math.inf, candidates[0]
    for start in candidates:
        value, prior = _ascend(matrix, start, iterations)
        if value > best_value:
            best_value, best_prior = value, prior
    dbglog(f'capacity estimate {best_value!r} over {len(candidates)} starts')
    return best_value, best_prior


def union_capacity_bound(bounds: Sequence[float]) -> float:
    '''Capacity of a union of m subfamilies is at most sum_i b_i + m - 1'''
    if not bounds:
        raise DimensionMismatch('Need at least one subfamily bound')
    return float(sum(bounds)) + len(bounds) - 1


def _endpoint_start(size: int) -> FloatArray:
    start = np.zeros(size)
    start[[0, -1]] = 0.5
    return start


def _gaussian_grid_family(means: Sequence[float], nodes: int) -> ExplicitFinite:
    '''Quadrature image of N(theta, 1): mass w_k phi_theta(z_k)/phi(z_k) on node k'''
    rule = gh_standard_normal(nodes)
    keep = rule.w > 1e-300
    rows = [rule.w[keep] * np.exp(t * rule.z[keep] - t * t / 2) for t in means]
    return ExplicitFinite(tuple(FiniteDistribution.from_weights(r) for r in rows))


def _gaussian(spec: GaussianLocation, settings: Settings, seed: int) -> FamilyFunctionals:
    mu = spec.mu_max
    means = sorted(spec.support) if spec.support is not None else list(np.linspace(-mu, mu, GRID_POINTS))
    span = (max(means) - min(means)) if spec.support is not None else 2 * mu
    d_chi2 = safe_expm1(span ** 2)
    d_h2 = 2 - 2 * math.exp(-span ** 2 / 8)
    strips = 2 * math.floor(mu + 1) + 1
    upper = min(safe_expm1(4 * mu ** 2), strips * (math.e - 1) + strips - 1, d_chi2)
    notes: Dict[str, Any] = {'strips': strips}
    if spec.support is not None:
        upper = min(upper, union_capacity_bound([0.0] * len(spec.support)))
        notes['support_size'] = len(spec.support)
    if len(means) == 1 or span == 0:
        estimate = 0.0
    else:
        grid = _gaussian_grid_family(means, settings.gh_nodes)
        estimate, _ = capacity_estimate(grid, settings.capacity_restarts, seed, settings.capacity_iterations,
                                        starts=[_endpoint_start(len(means))])
    notes['h2_quadrature'] = 2 - 2 * gaussian_affinity(min(means), max(means), settings.gh_nodes)
    return FamilyFunctionals(upper, estimate, d_chi2, d_h2, delta_from_h2(d_h2), notes)


def _bernoulli(spec: BernoulliInterval, settings: Settings, seed: int) -> FamilyFunctionals:
    eps = spec.eps
    lo, hi = FiniteDistribution.bernoulli(eps), FiniteDistribution.bernoulli(1 - eps)
    d_chi2 = divergence('chi2', lo, hi)
    d_h2 = divergence('hellinger2', lo, hi)
    upper = min(1 - 2 * eps, d_chi2)
    two_point = (1 - 2 * eps) ** 2
    if eps == 0.5:
        estimate = 0.0
    else:
        grid = ExplicitFinite(tuple(FiniteDistribution.bernoulli(p) for p in np.linspace(eps, 1 - eps, GRID_POINTS)))
        estimate, _ = capacity_estimate(grid, settings.capacity_restarts, seed, settings.capacity_iterations,
                                        starts=[_endpoint_start(GRID_POINTS)])
    return FamilyFunctionals(upper, estimate, d_chi2, d_h2, delta_from_h2(d_h2),
                             {'two_point_uniform': two_point, 'gap_to_upper': upper - estimate})


def _poisson_rows(rates: Sequence[float], tail_mass: float) -> FloatArray:
    top = max(rates)
    k_max = int(poisson.isf(tail_mass, top)) + 1 if top > 0 else 0
    ks = np.arange(k_max + 1)
    return np.vstack([poisson.pmf(ks, r) for r in rates])


def poisson_strip_bounds(m: float) -> List[float]:
    '''Per-strip capacity bounds over [(i-1)^2, min(i^2, M)]: strip 1 by the small-rate argument, the rest by their diameters'''
    strips = max(1, math.ceil(math.sqrt(m)))
    bounds = [1 - math.exp(-min(1.0, m))]
    for i in range(2, strips + 1):
        lo, hi = (i - 1) ** 2, min(i * i, m)
        bounds.append(safe_expm1((hi - lo) ** 2 / lo))
    return bounds


def _poisson(spec: PoissonInterval, settings: Settings, seed: int) -> FamilyFunctionals:
    m = spec.m_max
    if spec.truncation_mass > TAIL_MASS_LIMIT:
        raise CapExceeded(f'Truncation mass {spec.truncation_mass} above {TAIL_MASS_LIMIT} gives inaccurate diameters')
    if m == 0:
        return FamilyFunctionals(0.0, 0.0, 0.0, 0.0, 1.0, {})
    rows = _poisson_rows([0.0, m], spec.truncation_mass)
    d_h2 = float(((np.sqrt(rows[0]) - np.sqrt(rows[1])) ** 2).sum() + (1 - rows[1].sum()))
    d_chi2 = math.inf
    if m <= 1:
        upper = 1 - math.exp(-m)
        strips = [upper]
    else:
        strips = poisson_strip_bounds(m)
        upper = union_capacity_bound(strips)
    rates = list(np.linspace(0.0, m, GRID_POINTS))
    table = _poisson_rows(rates, spec.truncation_mass)
    grid = ExplicitFinite(tuple(FiniteDistribution.from_weights(r) for r in table))
    estimate, _ = capacity_estimate(grid, settings.capacity_restarts, seed, settings.capacity_iterations,
                                    starts=[_endpoint_start(GRID_POINTS)])
    return FamilyFunctionals(min(upper, d_chi2), estimate, d_chi2, d_h2, delta_from_h2(d_h2),
                             {'strip_bounds': strips, 'delta_closed_form': math.exp(m)})


def _explicit(spec: ExplicitFinite, settings: Settings, seed: int) -> FamilyFunctionals:
    d_chi2 = max_pairwise('chi2', spec.distributions)
    d_h2 = max_pairwise('hellinger2', spec.distributions)
    size = len(spec.distributions)
    upper = min(d_chi2, union_capacity_bound([0.0] * size))
    estimate, prior = capacity_estimate(spec, settings.capacity_restarts, seed, settings.capacity_iterations)
    return FamilyFunctionals(upper, estimate, d_chi2, d_h2, delta_from_h2(d_h2), {'best_prior': prior})


def family_functionals(spec: FamilySpec, settings: Optional[Settings] = None, seed: int = 0) -> FamilyFunctionals:
    settings = settings or get_settings()
    if isinstance(spec, ExplicitFinite):
        return _explicit(spec, settings, seed)
    if isinstance(spec, GaussianLocation):
        return _gaussian(spec, settings, seed)
    if isinstance(spec, BernoulliInterval):
        return _bernoulli(spec, settings, seed)
    if isinstance(spec, PoissonInterval):
        return _poisson(spec, settings, seed)
    raise InvalidDistribution(f'Unknown family {spec!r}')
