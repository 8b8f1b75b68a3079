#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Bound evaluators for chi2 between permutation mixtures and i.i.d. mixtures,
with an exact path next to every bound where one is computable.

Every bound is evaluated in log space; infinite inputs give infinite bounds
instead of errors.
'''

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .capacity import ExplicitFinite, FamilyFunctionals, family_functionals, union_capacity_bound
from .default.config import Settings, get_settings
from .default.exceptions import CapExceeded, DimensionMismatch, IllConditioned, InvalidDistribution
from .kernels import ryser
from .mixtures import (ComponentList, FiniteDistribution, MixtureMatrix, build_mixture_matrix,
                       delta_from_h2, divergence, instance_capacity, instance_d_chi2, instance_delta_h2,
                       joint_divergence, max_pairwise, permutation_mixture_table, product_table)
from .permanent import (SeriesDecomposition, exact_chi2_permanent, log_series_weight, s_series,
                        spectral_series_bounds)
from .report import Check, check_close, check_leq
from .sharedutils import dbglog, log_factorial, safe_exp, safe_expm1

FloatArray = NDArray[np.float64]

PROVENANCES = ('instance', 'family', 'user')


def _log_growth(c: float, delta: float) -> float:
    '''log (e Delta)^c, with (e Delta)^0 = 1 even for infinite Delta'''
    if c == 0:
        return 0.0
    if math.isinf(delta) or math.isinf(c):
        return math.inf
    return c * (1.0 + math.log(delta))


def _validate_inputs(c: float, delta_h2: float, d_chi2: float) -> None:
    if c < 0 or math.isnan(c):
        raise InvalidDistribution(f'Capacity must be non-negative, got {c!r}')
    if delta_h2 < 1 - 1e-12 or math.isnan(delta_h2):
        raise InvalidDistribution(f'Maximum H^2 singularity must be >= 1, got {delta_h2!r}')
    if d_chi2 < 0 or math.isnan(d_chi2):
        raise InvalidDistribution(f'chi2 diameter must be non-negative, got {d_chi2!r}')


def geometric_tail(n: int, c: float) -> float:
    '''sum_{l=2}^n c^l'''
    if n < 2 or c == 0:
        return 0.0
    if math.isinf(c):
        return math.inf
    if c == 1:
        return float(n - 1)
    log_c = math.log(c)
    if c > 1:
        # c^2 (c^(n-1) - 1) / (c - 1)
        grown = safe_expm1((n - 1) * log_c)
        if math.isinf(grown):
            return math.inf
        return safe_exp(2 * log_c + math.log(grown) - math.log(c - 1))
    return c * c * -math.expm1((n - 1) * log_c) / (1 - c)


def thm_main_bounds(n: int, c: float, delta_h2: float, d_chi2: float) -> Tuple[float, float, float]:
    '''(10 sum_{l=2}^n c^l, (e Delta)^c - 1, (1 + D)^(1+c) - 1)'''
    _validate_inputs(c, delta_h2, d_chi2)
    ub1 = 10.0 * geometric_tail(n, c)
    ub2 = safe_expm1(_log_growth(c, delta_h2))
    ub3 = math.inf if math.isinf(d_chi2) else safe_expm1((1.0 + c) * math.log1p(d_chi2))
    return ub1, ub2, ub3


def lower_spectral(lambda2: float) -> float:
    '''1/sqrt(1 - lambda2^2) - 1'''
    lam = min(max(lambda2, 0.0), 1.0)
    if lam >= 1.0:
        return math.inf
    return 1.0 / math.sqrt(1.0 - lam * lam) - 1.0


@dataclass
class BoundReport:
    n: int
    c: float
    delta_h2: float
    d_chi2: float
    ub1: float
    ub2: float
    ub3: float
    lower_spectral: float
    provenance: str = 'instance'
    exact_chi2: Optional[float] = None

    @property
    def best(self) -> float:
        return min(self.ub1, self.ub2, self.ub3)

    @property
    def checks(self) -> List[Check]:
        if self.exact_chi2 is None:
            return []
        out = [check_leq('exact_nonnegative', -self.exact_chi2, 0.0, rel=0.0, abs_tol=1e-10)]
        for name in ('ub1', 'ub2', 'ub3'):
            bound = getattr(self, name)
            if math.isfinite(bound):
                out.append(check_leq(f'exact_below_{name}', self.exact_chi2, bound, rel=1e-8, abs_tol=1e-8))
        best = self.best
        if math.isfinite(best):
            out.append(check_leq('exact_below_best', self.exact_chi2, best, rel=0.0, abs_tol=1e-8 * (1 + best)))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'exact_chi2': self.exact_chi2, 'ub1': self.ub1, 'ub2': self.ub2, 'ub3': self.ub3,
                'lower_spectral': self.lower_spectral,
                'inputs': {'n': self.n, 'c': self.c, 'delta_h2': self.delta_h2, 'd_chi2': self.d_chi2},
                'provenance': self.provenance}


def evaluate_instance(c: ComponentList, family: Optional[FamilyFunctionals] = None,
                      user: Optional[Tuple[float, float, float]] = None,
                      settings: Optional[Settings] = None) -> BoundReport:
    '''Upper bounds for one instance with the exact value when the permanent is in reach.

    (C, Delta, D) come from the instance itself unless a family's functionals
    or a user-supplied triple is given.
    '''
    settings = settings or get_settings()
    if user is not None:
        cap, delta, d, provenance = user[0], user[1], user[2], 'user'
    elif family is not None:
        cap, delta, d, provenance = family.c_chi2_upper, family.delta_h2, family.d_chi2, 'family'
    else:
        cap, delta, d, provenance = instance_capacity(c), instance_delta_h2(c), instance_d_chi2(c), 'instance'
    ub1, ub2, ub3 = thm_main_bounds(c.n, cap, delta, d)
    mm = build_mixture_matrix(c)
    exact = exact_chi2_permanent(c, settings) if c.n <= settings.permanent_n else None
    if exact is None:
        dbglog(f'n={c.n} above the permanent cap, reporting bounds only')
    return BoundReport(c.n, cap, delta, d, ub1, ub2, ub3, lower_spectral(mm.lambda2), provenance, exact)


'''
de Finetti
'''
def _series(mm: MixtureMatrix, settings: Settings) -> SeriesDecomposition:
    try:
        return s_series(mm, 'interpolation', settings)
    except IllConditioned as e:
        dbglog(f'{e}; switching to the direct series')
        return s_series(mm, 'direct', settings)


def marginal_chi2_bruteforce(c: ComponentList, k: int, settings: Optional[Settings] = None) -> float:
    '''chi2 between the first k coordinates of both mixtures, by enumeration'''
    settings = settings or get_settings()
    n, size = c.n, c.alphabet_size
    table = permutation_mixture_table(c.matrix, settings).reshape((size,) * n)
    marginal = table.sum(axis=tuple(range(k, n))).ravel() if k < n else table.ravel()
    return joint_divergence('chi2', marginal, product_table(c.marginal.probs, k, settings))


@dataclass
class DefinettiResult:
    n: int
    k: int
    exact: float
    bound: float
    ub1: float = 0.0
    ub2: float = 0.0
    bruteforce: Optional[float] = None
    checks: List[Check] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'k': self.k, 'exact': self.exact, 'bound': self.bound,
                'ub1': self.ub1, 'ub2': self.ub2, 'bruteforce': self.bruteforce}


def definetti_exact(series: SeriesDecomposition, k: int) -> float:
    '''sum_{l=2}^k C(k,l)/C(n,l) S_l'''
    n = series.n
    return float(sum(safe_exp(log_series_weight(n, k, ell)) * series.s[ell] for ell in range(2, k + 1)))


def definetti_bound_and_exact(c: ComponentList, k: int, settings: Optional[Settings] = None) -> DefinettiResult:
    settings = settings or get_settings()
    n = c.n
    if not 1 <= k <= n:
        raise DimensionMismatch(f'Need 1 <= k <= n, got k={k}, n={n}')
    series = _series(build_mixture_matrix(c), settings)
    exact = definetti_exact(series, k)
    ub1, ub2, _ = thm_main_bounds(n, instance_capacity(c), instance_delta_h2(c), instance_d_chi2(c))
    prefactor = k * (k - 1) / (n * (n - 1)) if n > 1 else 0.0
    best = min(ub1, ub2)
    bound = 0.0 if prefactor == 0 else prefactor * best
    result = DefinettiResult(n, k, exact, bound, ub1, ub2)
    result.checks.append(check_leq('definetti_bound', exact, bound, rel=1e-8, abs_tol=1e-8))
    if c.alphabet_size ** n <= settings.enumeration_cells:
        result.bruteforce = marginal_chi2_bruteforce(c, k, settings)
        result.checks.append(check_close('definetti_identity', exact, result.bruteforce, rel=1e-7, abs_tol=1e-9))
    return result


'''
Two permutation mixtures differing in one component
'''
@dataclass
class TwoMixturesResult:
    n: int
    tv2: float
    middle: float
    intermediate: float
    bound: float
    c: float
    delta_h2: float
    d_chi2: float

    @property
    def checks(self) -> List[Check]:
        return [check_leq('tv2_below_middle', self.tv2, self.middle, rel=1e-8, abs_tol=1e-12),
                check_leq('middle_below_intermediate', self.middle, self.intermediate, rel=1e-8, abs_tol=1e-12),
                check_leq('intermediate_below_bound', self.intermediate, self.bound, rel=1e-8, abs_tol=1e-12)]

    def to_dict(self) -> Dict[str, Any]:
        return {'n': self.n, 'tv2': self.tv2, 'middle': self.middle, 'intermediate': self.intermediate,
                'bound': self.bound, 'inputs': {'c': self.c, 'delta_h2': self.delta_h2, 'd_chi2': self.d_chi2}}


def _l2_over_base(p: FloatArray, q: FloatArray, base: FloatArray) -> float:
    diff = p - q
    outside = base == 0
    if np.any(np.abs(diff[outside]) > 0):
        return math.inf
    return float((diff[~outside] ** 2 / base[~outside]).sum())


def two_mixtures_check(rest: ComponentList, p1: FiniteDistribution, q1: FiniteDistribution,
                       settings: Optional[Settings] = None) -> TwoMixturesResult:
    '''tv^2 <= (1/4) int (dP - dQ)^2 / dPbar^n <= (D/n) sum l S_{l-1} <= 3 D (e Delta)^(3C) / n.

    P and Q permute (p1, P2..Pn) and (q1, P2..Pn); rest holds P2..Pn and Pbar is its
    marginal. C is the capacity of the shared components P2..Pn only, the quantity the
    eigenvalues of their mixture matrix sum to, and never exceeds the capacity of the
    whole family (p1, q1, P2..Pn). Delta and D range over all n+1 components.
    '''
    settings = settings or get_settings()
    if p1.size != rest.alphabet_size or q1.size != rest.alphabet_size:
        raise DimensionMismatch('p1 and q1 must share the alphabet of the other components')
    n = rest.n + 1
    p_rows = np.vstack([p1.probs, rest.matrix])
    q_rows = np.vstack([q1.probs, rest.matrix])
    p_table = permutation_mixture_table(p_rows, settings)
    q_table = permutation_mixture_table(q_rows, settings)
    base = product_table(rest.marginal.probs, n, settings)
    tv2 = joint_divergence('tv', p_table, q_table) ** 2
    middle = 0.25 * _l2_over_base(p_table, q_table, base)

    everyone = (p1, q1) + rest.components
    d = max_pairwise('chi2', everyone)
    delta = delta_from_h2(max_pairwise('hellinger2', everyone))
    cap = instance_capacity(rest)
    series = _series(build_mixture_matrix(rest, validate=False), settings)
    weighted = float(sum(ell * series.s[ell - 1] for ell in range(1, n + 1)))
    intermediate = math.inf if math.isinf(d) else d / n * weighted
    if d == 0:
        bound = 0.0
    else:
        log_bound = math.log(3.0 * d / n) + 3 * _log_growth(cap, delta) if math.isfinite(d) else math.inf
        bound = safe_exp(log_bound)
    return TwoMixturesResult(n, tv2, middle, intermediate, bound, cap, delta, d)


def eb_risk_gap_bound(m_loss: float, n: int, c: float, delta: float, d: float) -> float:
    '''M sqrt(6 n D (e Delta)^(3C))'''
    _validate_inputs(c, delta, d)
    if m_loss < 0:
        raise InvalidDistribution(f'Loss bound must be non-negative, got {m_loss!r}')
    if m_loss == 0 or d == 0:
        return 0.0
    if math.isinf(d) or math.isinf(m_loss):
        return math.inf
    return safe_exp(math.log(m_loss) + 0.5 * (math.log(6.0 * n * d) + 3 * _log_growth(c, delta)))


def eb_quadratic_bound(m_loss: float, d_chi2: float, c: float) -> float:
    '''4 M^2 D (1 + C)'''
    if m_loss < 0 or d_chi2 < 0 or c < 0:
        raise InvalidDistribution('Inputs must be non-negative')
    if m_loss == 0 or d_chi2 == 0:
        return 0.0
    return 4.0 * m_loss ** 2 * d_chi2 * (1.0 + c)


'''
Mutual information
'''
@dataclass
class MutualInfoResult:
    gap: float
    ub: float
    information: float

    @property
    def checks(self) -> List[Check]:
        return [check_leq('gap_nonnegative', -self.gap, 0.0, rel=0.0, abs_tol=1e-10),
                check_leq('gap_below_bound', self.gap, self.ub, rel=1e-8, abs_tol=1e-10)]

    def to_dict(self) -> Dict[str, Any]:
        return {'gap': self.gap, 'ub': self.ub, 'chi2_information': self.information}


def mutual_info_gap(c: ComponentList, settings: Optional[Settings] = None) -> MutualInfoResult:
    '''n I(theta_1; X_1) - I(theta; X), which equals KL between the two mixtures'''
    settings = settings or get_settings()
    p_table = permutation_mixture_table(c.matrix, settings)
    q_table = product_table(c.marginal.probs, c.n, settings)
    gap = joint_divergence('kl', p_table, q_table)
    info = instance_capacity(c)
    first = 10.0 * geometric_tail(c.n, info)
    delta = instance_delta_h2(c)
    if info == 0:
        second = 0.0
    else:
        second = info * (1.0 + math.log(delta)) if math.isfinite(delta) else math.inf
    return MutualInfoResult(gap, min(first, second), info)


'''
Worst-case constructions
'''
def worst_case_size(c_target: float, delta: float) -> Tuple[int, int]:
    '''(m, n) = (ceil C, ceil(1 / (2 log(1/(1-Delta)))))'''
    if c_target < 1:
        raise InvalidDistribution(f'Target capacity must be >= 1, got {c_target!r}')
    if not 0 < delta < 1:
        raise InvalidDistribution(f'delta must lie in (0, 1), got {delta!r}')
    m = math.ceil(c_target)
    n = max(1, math.ceil(1.0 / (2.0 * -math.log1p(-delta))))
    return m, n


@dataclass
class WorstCaseMatrix:
    m: int
    n: int
    delta: float
    matrix: MixtureMatrix
    c_target: float

    @property
    def expected_spectrum(self) -> FloatArray:
        return np.concatenate([[1.0], np.full(self.m - 1, 1.0 - self.delta), np.zeros(self.m * (self.n - 1))])

    @property
    def checks(self) -> List[Check]:
        out = self.matrix.validate(1e-10)
        gap = float(np.max(np.abs(self.matrix.eigenvalues - self.expected_spectrum)))
        out.append(check_leq('kronecker_spectrum', gap, 0.0, abs_tol=1e-10))
        out.append(check_leq('trace_vs_target', self.matrix.trace, 1 + self.c_target, rel=0.0, abs_tol=1e-10))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'m': self.m, 'n': self.n, 'delta': self.delta, 'size': self.m * self.n,
                'entries': self.matrix.entries, 'eigenvalues': self.matrix.eigenvalues, 'trace': self.matrix.trace}


def worst_case_matrix(c_target: float, delta: float, n: Optional[int] = None,
                      settings: Optional[Settings] = None) -> WorstCaseMatrix:
    '''((Delta/m) J_m + (1-Delta) I_m) kron (J_n/n); n may be fixed instead of derived from delta'''
    settings = settings or get_settings()
    m, derived = worst_case_size(c_target, delta)
    n = derived if n is None else n
    if n < 1:
        raise DimensionMismatch(f'Block size must be positive, got {n}')
    if m * n > settings.worst_case_size:
        raise CapExceeded(f'Construction has m={m}, n={n} (size {m * n}) above the cap {settings.worst_case_size}')
    block = delta / m * np.ones((m, m)) + (1 - delta) * np.eye(m)
    entries = np.kron(block, np.full((n, n), 1.0 / n))
    return WorstCaseMatrix(m, n, delta, MixtureMatrix.from_entries(entries), c_target)


@dataclass
class DiagonalBlockBound:
    value: float
    simple: float
    permanent: Optional[float] = None

    @property
    def checks(self) -> List[Check]:
        out = [check_leq('simple_below_block', self.simple, self.value, rel=1e-10)]
        if self.permanent is not None:
            out.append(check_leq('block_below_permanent', self.value, self.permanent, rel=1e-8))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'value': self.value, 'simple': self.simple, 'permanent': self.permanent}


def diagonal_block_lower_bound(m: int, n: int, delta: float, with_permanent: bool = True) -> DiagonalBlockBound:
    '''(n!)^m (Delta/(mn) + (1-Delta)/n)^(mn) >= (n!)^m ((1-Delta)/n)^(mn)'''
    if m < 1 or n < 1:
        raise DimensionMismatch(f'Need m, n >= 1, got m={m}, n={n}')
    base = m * log_factorial(n)
    value = safe_exp(base + m * n * math.log(delta / (m * n) + (1 - delta) / n))
    simple = 0.0 if delta >= 1 else safe_exp(base + m * n * math.log((1 - delta) / n))
    result = DiagonalBlockBound(value, simple)
    if with_permanent and m * n <= 16:
        block = delta / m * np.ones((m, m)) + (1 - delta) * np.eye(m)
        result.permanent = float(ryser(np.kron(block, np.full((n, n), 1.0 / n))))
    return result


@dataclass
class WorstCaseFamily:
    m: int
    delta: float
    family: ExplicitFinite
    functionals: FamilyFunctionals

    @property
    def checks(self) -> List[Check]:
        out = [check_close('delta_is_inverse', self.functionals.delta_h2, 1.0 / self.delta, rel=1e-10),
               check_leq('capacity_union_bound', self.functionals.c_chi2_upper,
                         union_capacity_bound([0.0] * self.m), rel=0.0, abs_tol=1e-10)]
        return out + self.functionals.checks()

    def components(self) -> ComponentList:
        return ComponentList(self.family.distributions)

    def to_dict(self) -> Dict[str, Any]:
        return {'m': self.m, 'delta': self.delta, 'components': self.family.matrix,
                'functionals': self.functionals}


def worst_case_family(c_target: float, delta: float, settings: Optional[Settings] = None, seed: int = 0) -> WorstCaseFamily:
    '''P_i = sqrt(Delta) delta_0 + (1 - sqrt(Delta)) delta_i on {0..m}, i = 1..m'''
    settings = settings or get_settings()
    if c_target < 1:
        raise InvalidDistribution(f'Target capacity must be >= 1, got {c_target!r}')
    if not 0 < delta <= 1:
        raise InvalidDistribution(f'delta must lie in (0, 1], got {delta!r}')
    m = math.ceil(c_target)
    root = math.sqrt(delta)
    rows = []
    for i in range(1, m + 1):
        probs = np.zeros(m + 1)
        probs[0] = root
        probs[i] += 1 - root
        rows.append(FiniteDistribution(probs))
    family = ExplicitFinite(tuple(rows))
    return WorstCaseFamily(m, delta, family, family_functionals(family, settings, seed))


'''
Leave-one-out mixtures
'''
@dataclass
class LeaveOneOutResult:
    max_chi2: float
    bound: float
    max_h2: float
    h2_bound: float

    @property
    def checks(self) -> List[Check]:
        return [check_leq('leave_one_out_chi2', self.max_chi2, self.bound, rel=1e-8, abs_tol=1e-12),
                check_leq('leave_one_out_h2', self.max_h2, self.h2_bound, rel=1e-8, abs_tol=1e-12)]

    def to_dict(self) -> Dict[str, Any]:
        return {'max_chi2': self.max_chi2, 'bound': self.bound, 'max_h2': self.max_h2, 'h2_bound': self.h2_bound}


def greenshtein_ritov_check(components: Sequence[FiniteDistribution],
                            settings: Optional[Settings] = None) -> LeaveOneOutResult:
    '''max_i chi2(avg || P_{-i}) <= D/(n+1) over the n+1 leave-one-out permutation mixtures'''
    settings = settings or get_settings()
    total = len(components)
    if total < 2:
        raise DimensionMismatch('Need at least two components')
    if total > 6:
        raise CapExceeded(f'{total} components is above the leave-one-out enumeration cap of 6')
    rows = np.vstack([p.probs for p in components])
    tables = [permutation_mixture_table(np.delete(rows, i, axis=0), settings) for i in range(total)]
    average = np.mean(tables, axis=0)
    d = max_pairwise('chi2', components)
    max_chi2 = max(joint_divergence('chi2', average, t) for t in tables)
    max_h2 = max(joint_divergence('hellinger2', tables[i], tables[j])
                 for i in range(total) for j in range(i + 1, total))
    return LeaveOneOutResult(max_chi2, d / total, max_h2, min(2.0, 4 * d / total))


'''
Tightness
'''
def family_tightness_lower_bound(d_h2: float, delta_h2: float) -> float:
    '''max(D_H^2 ^2 / 8, Delta^(1/4)/sqrt(2) - 1)'''
    if math.isinf(delta_h2):
        return math.inf
    return max(d_h2 ** 2 / 8.0, delta_h2 ** 0.25 / math.sqrt(2.0) - 1.0)


def lecam_pair_checks(p: FiniteDistribution, q: FiniteDistribution) -> List[Check]:
    '''For two components lambda_2 = Tr(A) - 1 = LC(P, Q) >= H^2(P, Q)/2'''
    mm = build_mixture_matrix(ComponentList((p, q)))
    lc = divergence('lecam', p, q)
    return [check_close('lambda2_is_trace_minus_one', mm.lambda2, mm.trace - 1, rel=0.0, abs_tol=1e-10),
            check_close('lambda2_is_lecam', mm.lambda2, lc, rel=0.0, abs_tol=1e-10),
            check_leq('lecam_above_half_h2', divergence('hellinger2', p, q) / 2, lc, rel=1e-10, abs_tol=1e-12)]


def replicate_components(c: ComponentList, m: int) -> ComponentList:
    if m < 1:
        raise DimensionMismatch(f'Replication factor must be positive, got {m}')
    return c.replicate(m)


@dataclass
class ReplicationTrend:
    '''Exact chi2 along m-fold replication.

    The spectrum of the replicated matrix is the original one padded with zeros, so
    prod 1/(1-lambda_i) - 1 caps every value. lower_spectral is the large-m reference
    and is reported only; the values need not be monotone in m.
    '''
    chi2: List[float]
    lower_spectral: float
    spectral_cap: float

    @property
    def checks(self) -> List[Check]:
        out: List[Check] = []
        for m, value in enumerate(self.chi2, start=1):
            out.append(check_leq(f'nonnegative_{m}', 0.0, value, rel=0.0, abs_tol=1e-10))
            out.append(check_leq(f'below_spectral_cap_{m}', value, self.spectral_cap, rel=1e-8, abs_tol=1e-12))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'chi2': self.chi2, 'lower_spectral': self.lower_spectral, 'spectral_cap': self.spectral_cap}


def replication_trend(c: ComponentList, m_max: int, settings: Optional[Settings] = None) -> ReplicationTrend:
    '''Exact chi2 for the m-fold replicated instance, m = 1..m_max'''
    settings = settings or get_settings()
    if c.n * m_max > settings.permanent_n:
        raise CapExceeded(f'Replicated size {c.n * m_max} is above the permanent cap {settings.permanent_n}')
    values = [exact_chi2_permanent(replicate_components(c, m), settings) for m in range(1, m_max + 1)]
    mm = build_mixture_matrix(c)
    cap = spectral_series_bounds(mm)['entire_sum'] - 1.0
    return ReplicationTrend(values, lower_spectral(mm.lambda2), cap)
