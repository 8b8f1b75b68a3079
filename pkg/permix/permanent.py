#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Permanents of mixture matrices.

chi2 between the permutation mixture and its i.i.d. counterpart equals
(n^n/n!) Perm(A) - 1.  Writing A = Abar + J/n, Perm(t Abar + J/n) is a polynomial
in t whose coefficients give the degree-l pieces S_l of chi2 + 1.
'''

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .default.config import Settings, get_settings
from .default.exceptions import CapExceeded, DimensionMismatch, IllConditioned
from .kernels import Number, complete_homogeneous, esp_batch, rectangular_sum, ryser, ryser_exact
from .mixtures import (ComponentList, MixtureMatrix, build_mixture_matrix, exact_chi2_bruteforce,
                       support_ratio)
from .report import Check, check_close, check_leq
from .sharedutils import binom, dbglog, log_binom, log_factorial, safe_exp

METHODS = ('interpolation', 'direct')

# per-coefficient agreement required of the floating point interpolation, in units of S_0 = 1
INTERPOLATION_REL = 1e-6
INTERPOLATION_FLOOR = 1e-12


def load_matrix(data: Dict[str, Any]) -> NDArray[np.generic]:
    '''{"n": n, "rows": [...], "complex": bool, "imag_rows": [...]}'''
    rows = np.asarray(data['rows'], dtype=float)
    if rows.ndim != 2:
        raise DimensionMismatch('Matrix rows must form a 2-d array')
    if 'n' in data and int(data['n']) != rows.shape[0]:
        raise DimensionMismatch(f"n={data['n']} does not match {rows.shape[0]} rows")
    if data.get('complex'):
        imag = np.asarray(data.get('imag_rows', np.zeros_like(rows)), dtype=float)
        if imag.shape != rows.shape:
            raise DimensionMismatch('imag_rows must match rows')
        return rows + 1j * imag
    return rows


def permanent_ryser(m: NDArray[np.generic], settings: Optional[Settings] = None) -> Number:
    settings = settings or get_settings()
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f'Permanent needs a square matrix, got shape {a.shape}')
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch('Matrix has non-finite entries')
    if a.shape[0] > settings.permanent_n:
        raise CapExceeded(f'n={a.shape[0]} is above the permanent cap {settings.permanent_n}')
    return ryser(a)


def rectangular_permanent_sum(a: NDArray[np.generic], settings: Optional[Settings] = None) -> Number:
    settings = settings or get_settings()
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionMismatch(f'Expected an l x n matrix, got shape {a.shape}')
    ell, n = a.shape
    if ell > n:
        raise DimensionMismatch(f'Need l <= n, got l={ell}, n={n}')
    if ell > settings.hadamard_ell:
        raise CapExceeded(f'l={ell} is above the row cap {settings.hadamard_ell}')
    return rectangular_sum(a)


def _scale(n: int) -> float:
    '''n^n / n!'''
    return safe_exp(n * math.log(n) - log_factorial(n)) if n > 0 else 1.0


def exact_chi2_permanent(c: ComponentList, settings: Optional[Settings] = None) -> float:
    '''(n^n/n!) Perm(A) - 1'''
    settings = settings or get_settings()
    mm = build_mixture_matrix(c)
    return float(_scale(c.n) * float(np.real(permanent_ryser(mm.entries, settings)))) - 1.0


@dataclass
class SeriesDecomposition:
    s: NDArray[np.float64]
    n: int
    method: str
    r: Optional[NDArray[np.float64]] = None
    t: Optional[NDArray[np.float64]] = None

    @property
    def chi2(self) -> float:
        return float(self.s.sum() - 1.0)

    def checks(self, chi2: Optional[float] = None) -> List[Check]:
        out = [check_close('s0_is_one', float(self.s[0]), 1.0, rel=0.0, abs_tol=1e-8),
               check_leq('s_nonnegative', -float(self.s.min()), 1e-6)]
        if self.n >= 1:
            out.append(check_close('s1_is_zero', float(self.s[1]), 0.0, rel=0.0, abs_tol=1e-6))
        if chi2 is not None:
            out.append(check_close('series_sums_to_chi2_plus_one', float(self.s.sum()), chi2 + 1.0, rel=1e-6))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'method': self.method, 's': self.s, 'r': self.r, 't': self.t, 'chi2': self.chi2}


def _s_from_t(t: NDArray[np.float64], n: int) -> NDArray[np.float64]:
    '''S_l = ((n-l)!/n!) n^l T_l'''
    return np.array([t[ell] * safe_exp(log_factorial(n - ell) - log_factorial(n) + ell * math.log(n))
                     for ell in range(n + 1)])


def _r_from_s(s: NDArray[np.float64], n: int) -> NDArray[np.float64]:
    return np.array([s[ell] / binom(n, ell) for ell in range(n + 1)])


def _newton_to_monomial(nodes: Sequence[Fraction], values: Sequence[Fraction]) -> List[Fraction]:
    '''Monomial coefficients (lowest degree first) of the interpolant through (nodes, values), exactly'''
    dd = list(values)
    size = len(nodes)
    for level in range(1, size):
        for i in range(size - 1, level - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (nodes[i] - nodes[i - level])
    coeffs = [dd[-1]]
    for k in range(size - 2, -1, -1):
        # coeffs * (t - nodes[k]) + dd[k]
        shifted = [Fraction(0)] + coeffs
        for i, c in enumerate(coeffs):
            shifted[i] -= nodes[k] * c
        shifted[0] += dd[k]
        coeffs = shifted
    return coeffs


def _exact_coefficients(abar: NDArray[np.float64]) -> List[Fraction]:
    '''Exact coefficients of t -> Perm(t Abar + J/n) for the floating point entries of Abar.

    With Abar = B/D (B integer, D a power of two), Perm(t Abar + J/n) = Perm(u B + D J) / (nD)^n
    at u = n t, so every node value is an integer permanent.
    '''
    n = abar.shape[0]
    exact = [[Fraction(float(x)) for x in row] for row in abar]
    d = math.lcm(*(x.denominator for row in exact for x in row))
    b = [[int(x * d) for x in row] for row in exact]
    values = [Fraction(ryser_exact([[u * x + d for x in row] for row in b])) for u in range(n + 1)]
    per_u = _newton_to_monomial([Fraction(u) for u in range(n + 1)], values)
    scale = Fraction(n * d) ** n
    return [c * n ** ell / scale for ell, c in enumerate(per_u)]


def _float_coefficients(abar: NDArray[np.float64], nodes: Sequence[Fraction]) -> List[Fraction]:
    j_over_n = np.full(abar.shape, 1.0 / abar.shape[0])
    values = [Fraction(float(np.real(ryser(float(t) * abar + j_over_n)))) for t in nodes]
    return _newton_to_monomial(nodes, values)


def _interpolate(abar: NDArray[np.float64], settings: Settings) -> List[Fraction]:
    n = abar.shape[0]
    if n <= settings.interpolation_exact_n:
        return _exact_coefficients(abar)
    # floating point node values: two node sets must agree coefficient by coefficient
    first = _float_coefficients(abar, [Fraction(k, n) for k in range(n + 1)])
    second = _float_coefficients(abar, [Fraction(2 * k + 1, 2 * n + 2) for k in range(n + 1)])
    scale = _scale(n)
    for ell, (c1, c2) in enumerate(zip(first, second)):
        s1, s2 = scale * float(c1), scale * float(c2)
        error = abs(s1 - s2)
        dbglog(f'interpolation S_{ell}: {s1!r} vs {s2!r}')
        if error > INTERPOLATION_REL * max(abs(s1), abs(s2)) + INTERPOLATION_FLOOR:
            raise IllConditioned(f'S_{ell} differs by {error:.3e} between node sets ({s1!r} vs {s2!r}), use method="direct"')
    return first


def _t_direct(abar: NDArray[np.float64], ell: int) -> float:
    if ell == 0:
        return 1.0
    n = abar.shape[0]
    return float(sum(np.real(rectangular_sum(abar[list(rows), :]))
                     for rows in itertools.combinations(range(n), ell)))


def s_series(a: MixtureMatrix, method: str = 'interpolation', settings: Optional[Settings] = None) -> SeriesDecomposition:
    '''S_0..S_n of the mixture matrix, with R_l and (direct method) T_l'''
    settings = settings or get_settings()
    n = a.n
    abar = a.centered
    if method == 'interpolation':
        if n > settings.permanent_n:
            raise CapExceeded(f'n={n} is above the permanent cap {settings.permanent_n}, interpolation needs n+1 permanents')
        coeffs = _interpolate(abar, settings)
        # S_l = (n^n/n!) c_l and T_l = n^(n-l)/(n-l)! c_l
        s = np.array([float(Fraction(n ** n, math.factorial(n)) * c) for c in coeffs])
        t_values = np.array([float(Fraction(n ** (n - ell), math.factorial(n - ell)) * c) for ell, c in enumerate(coeffs)])
        return SeriesDecomposition(s=s, n=n, method=method, r=_r_from_s(s, n), t=t_values)
    if method == 'direct':
        cost = sum(binom(n, ell) ** 2 * 2 ** ell for ell in range(n + 1))
        if cost > settings.series_budget:
            raise CapExceeded(f'Direct series needs about {cost:.3g} operations, above the budget {settings.series_budget}')
        t_values = np.array([_t_direct(abar, ell) for ell in range(n + 1)])
        s = _s_from_t(t_values, n)
        return SeriesDecomposition(s=s, n=n, method=method, r=_r_from_s(s, n), t=t_values)
    raise ValueError(f'Unknown method {method}, expected one of {METHODS}')


def r_ell_enumeration(c: ComponentList, ell: int, settings: Optional[Settings] = None) -> float:
    '''R_l as a second moment: E over X_1..X_l ~ Pbar of the squared permutation average'''
    settings = settings or get_settings()
    if ell < 0 or ell > c.n:
        raise DimensionMismatch(f'Need 0 <= l <= n, got l={ell}, n={c.n}')
    if ell == 0:
        return 1.0
    support = support_ratio(c.marginal.probs, c.matrix)
    p_bar = c.marginal.probs[support]
    psi = np.vstack([m.weights for m in c.centered_measures])[:, support] / p_bar
    k = int(support.sum())
    tuples = math.perm(c.n, ell)
    if k ** ell * tuples > settings.r_ell_budget:
        raise CapExceeded(f'{k}^{ell} outcomes times {tuples} index tuples exceed the budget {settings.r_ell_budget}')
    inner = np.zeros((k,) * ell)
    for idx in itertools.permutations(range(c.n), ell):
        term = psi[idx[0]]
        for j in idx[1:]:
            term = np.multiply.outer(term, psi[j])
        inner += term
    inner /= tuples
    weight = p_bar
    for _ in range(ell - 1):
        weight = np.multiply.outer(weight, p_bar)
    return float((weight * inner ** 2).sum())


@dataclass
class Sandwich:
    lower: float
    upper: float
    permanent: Optional[float] = None
    upper_infinite: bool = False
    checks: List[Check] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'lower': self.lower, 'upper': self.upper, 'permanent': self.permanent,
                'upper_infinite': self.upper_infinite, 'checks': self.checks}


def permanent_sandwich(a: MixtureMatrix, settings: Optional[Settings] = None) -> Sandwich:
    '''n!/n^n <= Perm(A) <= (n!/n^n) prod_{i>=2} 1/(1 - lambda_i)'''
    settings = settings or get_settings()
    n = a.n
    lower = 1.0 / _scale(n)
    lam = a.clipped_eigenvalues[1:]
    if lam.size and lam[0] >= 1 - 1e-12:
        upper, flagged = math.inf, True
    else:
        upper, flagged = safe_exp(math.log(lower) - float(np.log1p(-lam).sum())), False
    result = Sandwich(lower=lower, upper=upper, upper_infinite=flagged)
    if n <= settings.permanent_n:
        perm = float(np.real(ryser(a.entries)))
        result.permanent = perm
        result.checks = [check_leq('van_der_waerden', lower, perm, rel=0.0, abs_tol=1e-10),
                         check_leq('spectral_upper', perm, upper, rel=1e-8)]
    return result


def spectral_series_bounds(a: MixtureMatrix, series: Optional[SeriesDecomposition] = None) -> Dict[str, Any]:
    '''Per-degree bounds 3 sqrt(l+1) h_l(lambda_2..lambda_n) and the entire-sum bound prod 1/(1-lambda_i)'''
    n = a.n
    lam = a.clipped_eigenvalues[1:]
    h = complete_homogeneous(lam, n)
    per_degree = np.array([3.0 * math.sqrt(ell + 1) * h[ell] for ell in range(n + 1)])
    entire = math.inf if lam.size and lam[0] >= 1 - 1e-12 else safe_exp(-float(np.log1p(-lam).sum()))
    out: Dict[str, Any] = {'h': h, 'per_degree': per_degree, 'entire_sum': entire, 'checks': []}
    if series is not None:
        checks = [check_leq(f'individual_sum_{ell}', float(series.s[ell]), float(per_degree[ell]), rel=1e-8, abs_tol=1e-12)
                  for ell in range(n + 1)]
        checks.append(check_leq('entire_sum', float(series.s.sum()), entire, rel=1e-8))
        out['checks'] = checks
    return out


def wick_factors(a: MixtureMatrix) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    '''P = U D^{1/2} with P P^T = A, and P~ without the top eigenpair so P~ P~^T = Abar'''
    root = a.eigenvectors * np.sqrt(a.clipped_eigenvalues)
    return root, root[:, 1:]


@dataclass
class WickEstimate:
    estimate: float
    stderr: float
    target: float
    samples: int
    ell: Optional[int] = None

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.estimate == self.target else math.inf
        return abs(self.estimate - self.target) / self.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {'estimate': self.estimate, 'stderr': self.stderr, 'target': self.target,
                'samples': self.samples, 'ell': self.ell, 'z_score': self.z_score}


def wick_mc_check(p: NDArray[np.float64], samples: int, seed: int, ell: Optional[int] = None,
                  settings: Optional[Settings] = None, chunk: int = 10000) -> WickEstimate:
    '''Monte Carlo over z ~ CN(0, I).

    Without ell: estimates E prod_i |(Pz)_i|^2, whose exact value is Perm(P P^T).
    With ell: P is n x (n-1) and the estimate is n^l (n-l)!/n! E|e_l(Pz)|^2, whose
    exact value is S_l of the matrix P P^T + J/n.
    '''
    settings = settings or get_settings()
    if samples < 1000:
        raise ValueError(f'Need at least 1000 samples, got {samples}')
    p = np.asarray(p, dtype=float)
    n, m = p.shape
    gram = p @ p.T
    if ell is None:
        target = float(np.real(permanent_ryser(gram, settings)))
        factor = 1.0
    else:
        if not 0 <= ell <= n:
            raise DimensionMismatch(f'Need 0 <= l <= n, got l={ell}, n={n}')
        factor = safe_exp(ell * math.log(n) + log_factorial(n - ell) - log_factorial(n))
        target = factor * _t_direct(gram, ell)
    streams = np.random.SeedSequence(seed).spawn((samples + chunk - 1) // chunk)
    values = []
    remaining = samples
    for child in streams:
        size = min(chunk, remaining)
        remaining -= size
        rng = np.random.default_rng(child)
        z = (rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))) * math.sqrt(0.5)
        y = z @ p.T
        if ell is None:
            values.append(np.prod(np.abs(y) ** 2, axis=1))
        else:
            values.append(np.abs(esp_batch(y)[:, ell]) ** 2)
    draws = factor * np.concatenate(values)
    return WickEstimate(estimate=float(draws.mean()), stderr=float(draws.std(ddof=1) / math.sqrt(samples)),
                        target=target, samples=samples, ell=ell)


def series_checks(c: ComponentList, settings: Optional[Settings] = None) -> List[Check]:
    '''Cross-path identities for one instance: permanent vs enumeration, S/R/T, both series methods'''
    settings = settings or get_settings()
    mm = build_mixture_matrix(c)
    chi2 = exact_chi2_permanent(c, settings)
    checks = [check_close('permanent_vs_bruteforce', chi2, exact_chi2_bruteforce(c, settings), rel=1e-8, abs_tol=1e-8)]
    interp = s_series(mm, 'interpolation', settings)
    direct = s_series(mm, 'direct', settings)
    checks += interp.checks(chi2)
    for ell in range(c.n + 1):
        checks.append(check_close(f'interpolation_vs_direct_{ell}', float(interp.s[ell]), float(direct.s[ell]),
                                  rel=1e-5, abs_tol=1e-9))
    assert direct.r is not None
    for ell in range(min(c.n, 3) + 1):
        checks.append(check_close(f'r_enumeration_{ell}', r_ell_enumeration(c, ell, settings), float(direct.r[ell]),
                                  rel=1e-6, abs_tol=1e-10))
    checks += spectral_series_bounds(mm, direct)['checks']
    checks += permanent_sandwich(mm, settings).checks
    return checks


def log_series_weight(n: int, k: int, ell: int) -> float:
    '''log of C(k, l) / C(n, l)'''
    return log_binom(k, ell) - log_binom(n, ell)
