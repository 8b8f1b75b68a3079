#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Balanced Gaussian location model: n/2 means at +mu and n/2 at -mu, unit variance.

The chi2 divergence between its permutation mixture and the i.i.d. mixture has
the closed series sum_{l even} C(n/2, l/2)^2 f(mu)^l / C(n, l), which stays below
f^2/(1-f) for every n.  Next to it live the two terms that make the moment and
cumulant approaches blow up on the same model.
'''

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln

from .default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from .quadrature import gh_standard_normal
from .report import Check, check_close, check_leq
from .sharedutils import dbglog, log_binom, log_factorial, safe_exp

FloatArray = NDArray[np.float64]

MU_MAX = 30.0
ORACLE_MU_MAX = 5.0
TOY_N_MAX = 10**6
CUMULANT_L_MAX = 200
G_REPORT_MAX = 64


def _sech(y: FloatArray) -> FloatArray:
    a = np.exp(-np.abs(y))
    return np.asarray(2 * a / (1 + a * a), dtype=float)


def _log_cosh(y: FloatArray) -> FloatArray:
    a = np.abs(y)
    return np.asarray(a + np.log1p(np.exp(-2 * a)) - math.log(2.0), dtype=float)


def _check_mu(mu: float) -> None:
    if mu < 0 or math.isnan(mu):
        raise InvalidDistribution(f'mu must be non-negative, got {mu!r}')
    if mu > MU_MAX:
        raise CapExceeded(f'mu={mu} is above {MU_MAX}; Gauss-Hermite quadrature is unreliable there')


def f_mu_forms(mu: float, nodes: int = 200) -> Tuple[float, float]:
    '''(1 - e^{-mu^2/2} E sech(mu Z), e^{-mu^2/2} E sinh^2(mu Z)/cosh(mu Z))'''
    _check_mu(mu)
    rule = gh_standard_normal(nodes)
    damp = math.exp(-mu * mu / 2)
    sech_mean = rule.expect(lambda x: _sech(mu * x))
    # e^{-mu^2/2} cosh(mu x) without overflow
    cosh_part = rule.expect(lambda x: 0.5 * (np.exp(mu * x - mu * mu / 2) + np.exp(-mu * x - mu * mu / 2)))
    return 1.0 - damp * sech_mean, cosh_part - damp * sech_mean


def f_mu(mu: float, nodes: int = 200) -> float:
    return f_mu_forms(mu, nodes)[0]


def f_mu_doubling_error(mu: float, nodes: int = 200) -> float:
    '''|f at 2*nodes - f at nodes|'''
    return abs(f_mu(mu, 2 * nodes) - f_mu(mu, nodes))


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise DimensionMismatch(f'The balanced model needs an even n >= 2, got {n}')


def g_ell(n: int, ell: int) -> float:
    '''(-1)^(l/2) C(n/2, l/2) / C(n, l) for even l, 0 for odd l'''
    _check_even(n)
    if not 0 <= ell <= n:
        raise DimensionMismatch(f'Need 0 <= l <= n, got l={ell}, n={n}')
    if ell % 2:
        return 0.0
    sign = -1.0 if (ell // 2) % 2 else 1.0
    return sign * safe_exp(log_binom(n // 2, ell // 2) - log_binom(n, ell))


def _log_series_terms(n: int, f: float) -> FloatArray:
    '''log of C(n/2, l/2)^2 f^l / C(n, l) for l = 2, 4, ..., n'''
    half = np.arange(1, n // 2 + 1, dtype=float)
    ell = 2 * half
    log_half = gammaln(n / 2 + 1) - gammaln(half + 1) - gammaln(n / 2 - half + 1)
    log_full = gammaln(n + 1) - gammaln(ell + 1) - gammaln(n - ell + 1)
    return np.asarray(2 * log_half - log_full + ell * math.log(f), dtype=float)


@dataclass
class ToyModelResult:
    mu: float
    n: int
    f_mu: float
    chi2_series: float
    geometric_cap: float
    stated_bound: float
    quadrature_error: float = 0.0
    large_n_limit: float = 0.0
    g: Optional[FloatArray] = field(default=None, repr=False)

    @property
    def checks(self) -> List[Check]:
        out = [check_leq('f_below_one_minus_exp', self.f_mu, 1 - math.exp(-self.mu ** 2), rel=0.0, abs_tol=1e-10),
               check_leq('series_below_cap', self.chi2_series, self.geometric_cap, rel=0.0, abs_tol=1e-8),
               check_leq('limit_below_cap', self.large_n_limit, self.geometric_cap, rel=0.0, abs_tol=1e-12)]
        if self.g is not None and self.g.size > 1:
            out.append(check_leq('g1_zero', abs(float(self.g[1])), 0.0, abs_tol=1e-15))
            slack = max(float(self.g[ell] ** 2) - safe_exp(-log_binom(self.n, ell)) for ell in range(self.n + 1))
            out.append(check_leq('g_squared_below_inverse_binomial', slack, 0.0, abs_tol=1e-12))
        return out

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'mu': self.mu, 'n': self.n, 'f_mu': self.f_mu, 'chi2_series': self.chi2_series,
                               'geometric_cap': self.geometric_cap, 'stated_bound': self.stated_bound,
                               'quadrature_error': self.quadrature_error, 'large_n_limit': self.large_n_limit}
        if self.g is not None and self.n <= G_REPORT_MAX:
            out['g'] = self.g
        return out


def toy_chi2(n: int, mu: float, nodes: int = 200) -> ToyModelResult:
    _check_even(n)
    if n > TOY_N_MAX:
        raise CapExceeded(f'n={n} is above {TOY_N_MAX}')
    f = f_mu(mu, nodes)
    error = f_mu_doubling_error(mu, nodes)
    if f <= 0:
        chi2 = 0.0
    else:
        chi2 = float(np.exp(_log_series_terms(n, f)).sum())
    cap = f * f / (1 - f) if f < 1 else math.inf
    # n -> infinity: sum_j C(2j, j) (f^2/4)^j
    limit = 1.0 / math.sqrt(1.0 - f * f) - 1.0 if f < 1 else math.inf
    g = np.array([g_ell(n, ell) for ell in range(n + 1)]) if n <= 4 * G_REPORT_MAX else None
    dbglog(f'toy model n={n} mu={mu}: f={f!r}, chi2={chi2!r}')
    return ToyModelResult(mu, n, f, chi2, cap, cap, error, limit, g)


def toy_chi2_oracle_n2(mu: float, nodes: int = 200) -> float:
    '''chi2 at n=2 by a tensor Gauss-Hermite integral of (dP - dQ)^2 / dQ against phi x phi'''
    _check_mu(mu)
    if mu > ORACLE_MU_MAX:
        raise CapExceeded(f'mu={mu} is above the oracle range {ORACLE_MU_MAX}')
    rule = gh_standard_normal(nodes)

    def integrand(x1: FloatArray, x2: FloatArray) -> FloatArray:
        # (r_p - r_q)^2 / r_q = r_p^2/r_q - 2 r_p + r_q, each ratio against phi x phi carrying e^{-mu^2}
        lp = _log_cosh(mu * (x1 - x2))
        lq = _log_cosh(mu * x1) + _log_cosh(mu * x2)
        return np.asarray(np.exp(2 * lp - lq - mu * mu) - 2 * np.exp(lp - mu * mu) + np.exp(lq - mu * mu), dtype=float)

    return rule.expect_2d(integrand)


def balanced_example_constant(mu_grid: Sequence[float], n: int, nodes: int = 200) -> Dict[str, Any]:
    '''Empirical chi2/mu^4 over mu <= 1, with chi2 <= 10 f^2 along the grid'''
    rows = []
    checks = []
    for mu in mu_grid:
        if mu > 1:
            raise InvalidDistribution(f'The small-mu regime needs mu <= 1, got {mu}')
        result = toy_chi2(n, mu, nodes)
        constant = result.chi2_series / mu ** 4 if mu > 0 else 0.0
        rows.append({'mu': mu, 'chi2': result.chi2_series, 'f_mu': result.f_mu, 'constant': constant})
        checks.append(check_leq(f'ten_f_squared_{mu}', result.chi2_series, 10 * result.f_mu ** 2, rel=1e-10))
    return {'rows': rows, 'max_constant': max((r['constant'] for r in rows), default=0.0), 'checks': checks}


'''
Moment method
'''
def log_moments_blowup(n: int, mu: float, ell: int) -> float:
    if ell < 0 or ell + 2 > n:
        raise DimensionMismatch(f'Need l + 2 <= n, got l={ell}, n={n}')
    if mu == 0:
        return -math.inf
    return ((4 * ell + 4) * math.log(mu) - ell * math.log(2.0) - 2 * math.log(n - 1)
            + log_factorial(n) - math.log(2.0) - log_factorial(ell) - log_factorial(n - ell - 2))


def moments_blowup(n: int, mu: float, ell: int) -> float:
    '''mu^(4l+4) / (2^l (n-1)^2) * n! / (2! l! (n-l-2)!)'''
    return safe_exp(log_moments_blowup(n, mu, ell))


@dataclass
class MomentSweep:
    mu: float
    ell: int
    n_values: List[int]
    terms: List[float]
    slope: float

    @property
    def checks(self) -> List[Check]:
        return [check_close('log_slope', self.slope, float(self.ell), rel=0.0, abs_tol=0.05)]

    def table(self) -> List[Dict[str, Any]]:
        return [{'n': n, 'term': t} for n, t in zip(self.n_values, self.terms)]

    def to_dict(self) -> Dict[str, Any]:
        return {'mu': self.mu, 'ell': self.ell, 'n_values': self.n_values, 'terms': self.terms, 'slope': self.slope}


def moments_slope(mu: float, ell: int, n_values: Optional[Sequence[int]] = None) -> MomentSweep:
    '''Fitted slope of log term against log n; the term grows like n^l'''
    if mu <= 0:
        raise InvalidDistribution('The slope needs mu > 0')
    ns = list(n_values) if n_values is not None else [2 ** k for k in range(4, 13)]
    logs = [log_moments_blowup(n, mu, ell) for n in ns]
    slope = float(np.polyfit(np.log(ns), logs, 1)[0])
    return MomentSweep(mu, ell, ns, [safe_exp(v) for v in logs], slope)


'''
Cumulant method
'''
def cumulant_sequence(l_max: int) -> List[int]:
    '''b_1, b_3, ..., b_{2 l_max + 1} (tangent numbers) in exact integers'''
    if not 0 <= l_max <= CUMULANT_L_MAX:
        raise CapExceeded(f'l_max must lie in [0, {CUMULANT_L_MAX}], got {l_max}')
    b = [1]
    for ell in range(1, l_max + 1):
        top = 2 * ell + 1
        value = (-1) ** ell
        for j in range(1, ell + 1):
            value += (-1) ** (j + 1) * math.comb(top, 2 * j) * b[ell - j]
        b.append(value)
    return b


@dataclass
class CumulantReport:
    mu: float
    n: int
    b: List[int]
    log_terms: List[float]
    partial_sums: List[float]
    l0: Optional[int]

    def crosses(self, level: float) -> Optional[int]:
        '''First l whose partial sum exceeds level'''
        for ell, s in enumerate(self.partial_sums):
            if s > level:
                return ell
        return None

    def table(self) -> List[Dict[str, Any]]:
        return [{'ell': ell, 'b': str(b), 'log_term': t, 'partial_sum': s}
                for ell, (b, t, s) in enumerate(zip(self.b, self.log_terms, self.partial_sums))]

    def to_dict(self) -> Dict[str, Any]:
        return {'mu': self.mu, 'n': self.n, 'b': [str(v) for v in self.b[:12]], 'log_terms': self.log_terms,
                'partial_sums': self.partial_sums, 'l0': self.l0}


def cumulant_terms(l_max: int, mu: float, n: int) -> CumulantReport:
    '''kappa^2/alpha! along alpha = (1, 2l+1, 0, ...): mu^(4l+4) b_{2l+1}^2 / ((n-1)^2 (2l+1)!)'''
    if n < 2:
        raise DimensionMismatch(f'Need n >= 2, got {n}')
    if mu <= 0:
        raise InvalidDistribution('The cumulant terms need mu > 0')
    b = cumulant_sequence(l_max)
    logs = [(4 * ell + 4) * math.log(mu) + 2 * math.log(b[ell]) - 2 * math.log(n - 1) - log_factorial(2 * ell + 1)
            for ell in range(l_max + 1)]
    partial = list(np.cumsum([safe_exp(v) for v in logs]))
    # smallest l0 after which every consecutive ratio stays above one
    l0: Optional[int] = None
    for ell in range(len(logs) - 1, 0, -1):
        if logs[ell] > logs[ell - 1]:
            l0 = ell - 1
        else:
            break
    return CumulantReport(mu, n, b, logs, [float(s) for s in partial], l0)
