#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Elementary symmetric polynomials of centered vectors.

For x summing to zero with sum |x_i|^2 = n:
  complex x: |e_l(x)|^2 <= n^n / (l^l (n-l)^(n-l)) < 3 sqrt(l+1) C(n, l)
  real x:    |e_l(x)|   <= sqrt(10 C(n, l))
The real maximization reduces to vectors taking two values, x^(k) below.
'''

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from .default.config import Settings, get_settings
from .default.exceptions import CapExceeded, DimensionMismatch, InvalidDistribution
from .kernels import esp_batch
from .permanent import rectangular_permanent_sum
from .report import Check, check_leq
from .sharedutils import log_binom, log_factorial, log_leq, safe_exp, safe_log, xlogx

ESP_N_CAP = 64


@dataclass(frozen=True, eq=False)
class CenteredVector:
    values: NDArray[np.generic]

    def __post_init__(self) -> None:
        x = np.array(self.values)
        n = x.size
        if x.ndim != 1 or n == 0:
            raise DimensionMismatch(f'Expected a non-empty vector, got shape {x.shape}')
        if abs(x.sum()) > 1e-10 * n:
            raise InvalidDistribution(f'Vector is not centered, sum {x.sum()!r}')
        if abs(float(np.sum(np.abs(x) ** 2)) - n) > 1e-8 * n:
            raise InvalidDistribution(f'Vector is not normalized to squared norm {n}')
        object.__setattr__(self, 'values', x)

    @classmethod
    def normalize(cls, values: Sequence[complex] | NDArray[np.generic]) -> 'CenteredVector':
        '''Subtract the mean and rescale to squared norm n'''
        x = np.asarray(values)
        x = x - x.mean()
        norm2 = float(np.sum(np.abs(x) ** 2))
        if norm2 == 0:
            raise InvalidDistribution('Cannot normalize a constant vector')
        return cls(x * math.sqrt(x.size / norm2))

    @property
    def n(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class ESPCoefficients:
    e: NDArray[np.generic]

    def __getitem__(self, ell: int) -> complex:
        return complex(self.e[ell])


def esp_all(x: CenteredVector | NDArray[np.generic]) -> ESPCoefficients:
    '''e_0..e_n by sequential convolution'''
    values = x.values if isinstance(x, CenteredVector) else np.asarray(x)
    if values.size > ESP_N_CAP:
        raise CapExceeded(f'n={values.size} is above {ESP_N_CAP}; larger vectors need extended precision')
    return ESPCoefficients(esp_batch(values))


def binary_support_vector(n: int, k: int) -> CenteredVector:
    '''n-k entries sqrt(k/(n-k)) followed by k entries -sqrt((n-k)/k)'''
    if not 1 <= k <= n - 1:
        raise DimensionMismatch(f'Need 1 <= k <= n-1, got n={n}, k={k}')
    return CenteredVector(np.concatenate([np.full(n - k, math.sqrt(k / (n - k))),
                                          np.full(k, -math.sqrt((n - k) / k))]))


def log_esp_bounds(n: int, ell: int) -> Tuple[float, float, float]:
    '''Logs of the complex bound, its binomial relaxation and the real bound'''
    if not 0 <= ell <= n:
        raise DimensionMismatch(f'Need 0 <= l <= n, got n={n}, l={ell}')
    log_c = log_binom(n, ell)
    complex_bound = 0.5 * (xlogx(n) - xlogx(ell) - xlogx(n - ell))
    relaxed = 0.5 * (math.log(3.0) + 0.5 * math.log(ell + 1) + log_c)
    real = 0.5 * (math.log(10.0) + log_c)
    return complex_bound, relaxed, real


def esp_bounds(n: int, ell: int) -> Tuple[float, float, float]:
    '''(complex bound, its 3 sqrt(l+1) C(n,l) relaxation, real bound) on |e_l|'''
    log_complex, log_relaxed, log_real = log_esp_bounds(n, ell)
    return safe_exp(log_complex), safe_exp(log_relaxed), safe_exp(log_real)


@dataclass
class ESPReport:
    max_ratio_real: float = 0.0
    max_ratio_complex: float = 0.0
    argmax_real: Optional[Tuple[int, int, int]] = None
    argmax_complex: Optional[Tuple[int, int]] = None
    per_n_ell: Dict[str, Dict[str, float]] = field(default_factory=dict)
    violations: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def checks(self) -> List[Check]:
        return [check_leq('real_bound_ratio', self.max_ratio_real, 1.0, rel=1e-8),
                check_leq('complex_bound_ratio', self.max_ratio_complex, 1.0, rel=1e-8)]

    def to_dict(self) -> Dict[str, Any]:
        return {'max_ratio_real': self.max_ratio_real, 'max_ratio_complex': self.max_ratio_complex,
                'argmax_real': self.argmax_real, 'argmax_complex': self.argmax_complex,
                'violations': self.violations, 'per_n_ell': self.per_n_ell}


def _record(report: ESPReport, n: int, ell: int, key: str, ratio: float) -> None:
    cell = report.per_n_ell.setdefault(f'{n},{ell}', {'real': 0.0, 'complex': 0.0})
    cell[key] = max(cell[key], ratio)


def verify_esp_theorem(n_max: int, trials: int, seed: int) -> ESPReport:
    '''Exhaustive real check on every x^(k), n <= n_max; complex check on random centered vectors'''
    if n_max > ESP_N_CAP:
        raise CapExceeded(f'n_max={n_max} is above {ESP_N_CAP}')
    report = ESPReport()
    for n in range(2, n_max + 1):
        log_bounds = [log_esp_bounds(n, ell) for ell in range(n + 1)]
        for k in range(1, n):
            e = esp_all(binary_support_vector(n, k)).e
            for ell in range(n + 1):
                log_abs = safe_log(abs(complex(e[ell])))
                log_complex, _, log_real = log_bounds[ell]
                ratio = safe_exp(log_abs - log_real)
                _record(report, n, ell, 'real', ratio)
                if ratio >= report.max_ratio_real:
                    report.max_ratio_real, report.argmax_real = ratio, (n, ell, k)
                if not log_leq(log_abs, log_real):
                    report.violations.append({'kind': 'real', 'n': n, 'ell': ell, 'k': k, 'ratio': ratio})
                ratio_c = safe_exp(log_abs - log_complex)
                _record(report, n, ell, 'complex', ratio_c)
                if ratio_c >= report.max_ratio_complex:
                    report.max_ratio_complex, report.argmax_complex = ratio_c, (n, ell)
                if not log_leq(log_abs, log_complex):
                    report.violations.append({'kind': 'complex', 'n': n, 'ell': ell, 'k': k, 'ratio': ratio_c})
    if trials and n_max >= 2:
        n_complex = min(n_max, 32)
        rng = np.random.default_rng(seed)
        for trial in range(trials):
            n = 2 + trial % (n_complex - 1)
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            e = esp_all(CenteredVector.normalize(z)).e
            for ell in range(n + 1):
                log_abs = safe_log(abs(complex(e[ell])))
                log_complex = log_esp_bounds(n, ell)[0]
                ratio_c = safe_exp(log_abs - log_complex)
                _record(report, n, ell, 'complex', ratio_c)
                if ratio_c >= report.max_ratio_complex:
                    report.max_ratio_complex, report.argmax_complex = ratio_c, (n, ell)
                if not log_leq(log_abs, log_complex):
                    report.violations.append({'kind': 'complex', 'n': n, 'ell': ell, 'trial': trial, 'ratio': ratio_c})
    return report


@dataclass
class HadamardResult:
    lhs: float
    rhs: float

    @property
    def check(self) -> Check:
        return check_leq('hadamard', self.lhs, self.rhs, rel=1e-8)

    def to_dict(self) -> Dict[str, Any]:
        return {'lhs': self.lhs, 'rhs': self.rhs, 'check': self.check}


def hadamard_check(a: NDArray[np.float64], settings: Optional[Settings] = None) -> HadamardResult:
    '''|(1/l!) sum_T Perm(A_T)| against sqrt(10 C(n,l)) prod_i ((1/n) sum_j a_ij^2)^(1/2)'''
    settings = settings or get_settings()
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f'Expected an l x n matrix, got shape {a.shape}')
    ell, n = a.shape
    if np.max(np.abs(a.sum(axis=1)), initial=0.0) > 1e-9 * n:
        raise InvalidDistribution('Every row must sum to zero')
    lhs = abs(float(rectangular_permanent_sum(a, settings))) * safe_exp(-log_factorial(ell))
    row_norms = np.sqrt((a ** 2).mean(axis=1))
    rhs = safe_exp(0.5 * (math.log(10.0) + log_binom(n, ell))) * float(np.prod(row_norms))
    return HadamardResult(lhs, rhs)


def random_hadamard_sweep(trials: int, seed: int, max_ell: int = 6, max_n: int = 12,
                          settings: Optional[Settings] = None) -> List[Check]:
    '''Random centered Gaussian rows with l <= max_ell, n <= max_n; one check per violation plus the worst ratio'''
    settings = settings or get_settings()
    rng = np.random.default_rng(seed)
    worst = 0.0
    failures: List[Check] = []
    for _ in range(trials):
        n = int(rng.integers(2, max_n + 1))
        ell = int(rng.integers(1, min(max_ell, n) + 1))
        a = rng.standard_normal((ell, n))
        a -= a.mean(axis=1, keepdims=True)
        result = hadamard_check(a, settings)
        if result.rhs > 0:
            worst = max(worst, result.lhs / result.rhs)
        if not result.check.passed:
            failures.append(result.check)
    return failures + [check_leq('hadamard_worst_ratio', worst, 1.0, rel=1e-8)]


def newton_checks(x: CenteredVector) -> List[Check]:
    '''e_2 = -n/2 and e_3 = (1/3) sum x_i^3 for real centered normalized x'''
    e = esp_all(x).e
    n = x.n
    checks = [check_leq('e1_zero', abs(complex(e[1])), 0.0, abs_tol=1e-10 * n)]
    if n >= 2:
        checks.append(check_leq('e2_newton', abs(complex(e[2]) + n / 2), 0.0, abs_tol=1e-8 * n))
    if n >= 3:
        checks.append(check_leq('e3_newton', abs(complex(e[3]) - complex(np.sum(x.values ** 3)) / 3), 0.0, abs_tol=1e-8 * n))
    return checks
