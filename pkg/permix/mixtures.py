#!/usr/bin/env python3
# -*- coding: utf-8 -*-
'''
Finite distributions, divergences and the two mixtures built from a component list.

For components P1..Pn on a shared alphabet {0..K-1}:
  the permutation mixture assigns a uniformly random permutation of the components
  to the n coordinates, the i.i.d. counterpart draws every coordinate from the
  marginal Pbar = (1/n) sum_i Pi.
'''

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .default.config import Settings, get_settings
from .default.exceptions import (CapExceeded, DimensionMismatch, InvalidDistribution,
                                 UnsupportedSupport)
from .report import Check, check_close, check_leq, require_all
from .sharedutils import log_factorial

FloatArray = NDArray[np.float64]

SUM_TOL = 1e-12
DIVERGENCES = ('chi2', 'hellinger2', 'tv', 'kl', 'lecam')


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    probs: FloatArray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise InvalidDistribution(f'Expected a non-empty probability vector, got shape {probs.shape}')
        if not np.all(np.isfinite(probs)):
            raise InvalidDistribution('Probability vector has non-finite entries')
        if np.any(probs < 0):
            raise InvalidDistribution(f'Negative probability at symbol {int(np.argmin(probs))}')
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise InvalidDistribution(f'Probabilities sum to {probs.sum()!r}, not 1')
        probs.setflags(write=False)
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def from_weights(cls, weights: Sequence[float] | FloatArray) -> 'FiniteDistribution':
        '''Normalize non-negative weights'''
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise InvalidDistribution('Weights must be non-negative with positive total')
        return cls(w / w.sum())

    @classmethod
    def bernoulli(cls, p: float) -> 'FiniteDistribution':
        '''Law on {0, 1} with mass p on symbol 1'''
        return cls(np.array([1.0 - p, p]))

    @classmethod
    def point_mass(cls, symbol: int, size: int) -> 'FiniteDistribution':
        probs = np.zeros(size)
        probs[symbol] = 1.0
        return cls(probs)

    @property
    def size(self) -> int:
        return int(self.probs.size)


@dataclass(frozen=True, eq=False)
class SignedMeasureVector:
    '''Signed weights over the alphabet that integrate to zero'''
    weights: FloatArray

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise DimensionMismatch(f'Expected a non-empty weight vector, got shape {weights.shape}')
        if abs(weights.sum()) > SUM_TOL:
            raise InvalidDistribution(f'Signed measure has total mass {weights.sum()!r}, not 0')
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    @property
    def size(self) -> int:
        return int(self.weights.size)


@dataclass(frozen=True, eq=False)
class ComponentList:
    components: Tuple[FiniteDistribution, ...]
    tol: float = 1e-10
    matrix: FloatArray = field(init=False, repr=False)
    marginal: FiniteDistribution = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.components) < 1:
            raise DimensionMismatch('A component list needs at least one component')
        sizes = {c.size for c in self.components}
        if len(sizes) != 1:
            raise DimensionMismatch(f'Components live on alphabets of different sizes {sorted(sizes)}')
        matrix = np.vstack([c.probs for c in self.components])
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        object.__setattr__(self, 'marginal', FiniteDistribution.from_weights(matrix.mean(axis=0)))
        psi = self.psi
        if np.max(np.abs(psi.sum(axis=1)), initial=0.0) > self.tol or np.max(np.abs(psi.sum(axis=0)), initial=0.0) > self.tol:
            raise InvalidDistribution('Centered measures are not doubly centered')

    @classmethod
    def from_probs(cls, rows: Sequence[Sequence[float]] | FloatArray) -> 'ComponentList':
        return cls(tuple(FiniteDistribution(np.asarray(r, dtype=float)) for r in rows))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ComponentList':
        if 'components' not in data:
            raise InvalidDistribution('Component file needs a "components" entry')
        clist = cls.from_probs(data['components'])
        if 'alphabet_size' in data and int(data['alphabet_size']) != clist.alphabet_size:
            raise DimensionMismatch(f"alphabet_size {data['alphabet_size']} does not match components of size {clist.alphabet_size}")
        return clist

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, k: int, floor: float = 0.05) -> 'ComponentList':
        '''n components on k symbols with every entry at least floor'''
        if k * floor > 1:
            raise InvalidDistribution(f'floor {floor} too large for {k} symbols')
        rows = floor + (1 - k * floor) * rng.dirichlet(np.ones(k), size=n)
        return cls.from_probs(rows / rows.sum(axis=1, keepdims=True))

    def to_dict(self) -> Dict[str, Any]:
        return {'alphabet_size': self.alphabet_size, 'components': self.matrix.tolist()}

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def alphabet_size(self) -> int:
        return self.components[0].size

    @property
    def psi(self) -> FloatArray:
        '''Rows Pi - Pbar'''
        return np.asarray(self.matrix - self.marginal.probs, dtype=float)

    @property
    def centered_measures(self) -> Tuple[SignedMeasureVector, ...]:
        return tuple(SignedMeasureVector(row) for row in self.psi)

    def replicate(self, m: int) -> 'ComponentList':
        '''Each component repeated m times, in blocks'''
        return ComponentList(tuple(c for c in self.components for _ in range(m)))


def load_components(path: Union[str, Path]) -> ComponentList:
    with Path(path).open() as f:
        return ComponentList.from_dict(json.load(f))


@dataclass(frozen=True, eq=False)
class MixtureMatrix:
    entries: FloatArray
    eigenvalues: FloatArray
    eigenvectors: FloatArray
    spectral_gap: float
    trace: float

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.n > 1 else 0.0

    @property
    def clipped_eigenvalues(self) -> FloatArray:
        return np.clip(self.eigenvalues, 0.0, 1.0)

    @property
    def centered(self) -> FloatArray:
        '''A - J/n'''
        return np.asarray(self.entries - 1.0 / self.n, dtype=float)

    @classmethod
    def from_entries(cls, entries: FloatArray) -> 'MixtureMatrix':
        '''Spectral data of a symmetric matrix; raw eigenvalues sorted in decreasing order'''
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f'Expected a square matrix, got shape {a.shape}')
        a = (a + a.T) / 2
        values, vectors = linalg.eigh(a)
        order = np.argsort(values)[::-1]
        values = values[order]
        vectors = vectors[:, order]
        lam2 = float(values[1]) if a.shape[0] > 1 else 0.0
        return cls(a, values, vectors, 1.0 - lam2, float(np.trace(a)))

    def validate(self, tol: float = 1e-10, delta_h2: float = math.inf) -> List[Check]:
        '''Double stochasticity, PSD and the top eigenpair; spectral gap against 1/delta when finite'''
        a, n = self.entries, self.n
        ones = np.ones(n)
        checks = [
            check_leq('symmetric', float(np.max(np.abs(a - a.T))), 0.0, abs_tol=1e-12),
            check_leq('row_sums', float(np.max(np.abs(a.sum(axis=1) - 1))), 0.0, abs_tol=tol),
            check_leq('column_sums', float(np.max(np.abs(a.sum(axis=0) - 1))), 0.0, abs_tol=tol),
            check_leq('psd', -float(self.eigenvalues[-1]), tol),
            check_close('top_eigenvalue', float(self.eigenvalues[0]), 1.0, rel=0.0, abs_tol=tol),
            check_leq('ones_eigenvector', float(np.max(np.abs(a @ ones - ones))), 0.0, abs_tol=tol),
        ]
        if math.isfinite(delta_h2):
            checks.append(check_leq('spectral_gap', 1.0 / delta_h2, self.spectral_gap, rel=0.0, abs_tol=1e-8))
        return checks


'''
Divergences
'''
def _divergence_arrays(kind: str, p: FloatArray, q: FloatArray) -> float:
    if p.shape != q.shape:
        raise DimensionMismatch(f'Cannot compare distributions of shapes {p.shape} and {q.shape}')
    if np.any(p < 0) or np.any(q < 0):
        raise InvalidDistribution('Divergences need non-negative inputs')
    if kind == 'tv':
        return float(0.5 * np.abs(p - q).sum())
    if kind == 'hellinger2':
        return float(min(2.0, ((np.sqrt(p) - np.sqrt(q)) ** 2).sum()))
    if kind == 'lecam':
        s = p + q
        mask = s > 0
        return float(0.5 * ((p[mask] - q[mask]) ** 2 / s[mask]).sum())
    if kind in ('chi2', 'kl'):
        outside = q == 0
        if np.any(p[outside] > 0):
            return math.inf
        inside = ~outside
        if kind == 'chi2':
            return float(((p[inside] - q[inside]) ** 2 / q[inside]).sum())
        support = inside & (p > 0)
        return float(max(0.0, (p[support] * np.log(p[support] / q[support])).sum()))
    raise ValueError(f'Unknown divergence {kind}, expected one of {DIVERGENCES}')


def divergence(kind: str, p: FiniteDistribution, q: FiniteDistribution) -> float:
    '''chi2, hellinger2 (in [0, 2]), tv, kl or lecam between p and q; chi2 and kl may be inf'''
    if kind not in DIVERGENCES:
        raise ValueError(f'Unknown divergence {kind}, expected one of {DIVERGENCES}')
    return _divergence_arrays(kind, p.probs, q.probs)


def delta_from_h2(h2: float) -> float:
    '''(1 - H^2/2)^-2, inf for mutually singular pairs'''
    affinity = 1.0 - h2 / 2.0
    if affinity <= 1e-300:
        return math.inf
    return affinity ** -2


def max_pairwise(kind: str, dists: Sequence[FiniteDistribution]) -> float:
    '''Largest divergence over ordered pairs'''
    best = 0.0
    for p, q in itertools.permutations(dists, 2):
        best = max(best, divergence(kind, p, q))
        if best == math.inf:
            break
    return best


def instance_delta_h2(c: ComponentList) -> float:
    return delta_from_h2(max_pairwise('hellinger2', c.components))


def instance_d_chi2(c: ComponentList) -> float:
    return max_pairwise('chi2', c.components)


def instance_capacity(c: ComponentList) -> float:
    '''(1/n) sum_i chi2(Pi || Pbar), the chi2 information of the empirical prior'''
    return float(np.mean([divergence('chi2', p, c.marginal) for p in c.components]))


def build_mixture_matrix(c: ComponentList, validate: bool = True) -> MixtureMatrix:
    '''A_ij = (1/n) sum_x Pi(x) Pj(x) / Pbar(x)'''
    support = support_ratio(c.marginal.probs, c.matrix)
    m = c.matrix[:, support]
    entries = (m / c.marginal.probs[support]) @ m.T / c.n
    mm = MixtureMatrix.from_entries(entries)
    if validate:
        checks = mm.validate(c.tol, instance_delta_h2(c))
        checks.append(check_leq('trace_vs_capacity', mm.trace, 1 + instance_capacity(c), rel=0.0, abs_tol=1e-8))
        require_all(checks)
    return mm


def support_ratio(base: FloatArray, rows: FloatArray) -> NDArray[np.bool_]:
    '''Symbols where base is positive; raises when some row has mass outside'''
    support = base > 0
    stray = np.flatnonzero(np.any(rows[:, ~support] > 0, axis=0)) if np.any(~support) else np.array([], dtype=int)
    if stray.size:
        symbol = int(np.flatnonzero(~support)[stray[0]])
        raise UnsupportedSupport(f'Reference marginal is zero on symbol {symbol} where a component has mass')
    return support


'''
Permutation mixture and i.i.d. counterpart
'''
def _check_tuple(c: ComponentList, x: Sequence[int]) -> None:
    if len(x) != c.n:
        raise DimensionMismatch(f'Expected a tuple of length {c.n}, got {len(x)}')
    if any(s < 0 or s >= c.alphabet_size for s in x):
        raise DimensionMismatch(f'Symbol out of range in {tuple(x)}')


def permutation_mixture_pmf(c: ComponentList, x: Sequence[int], settings: Optional[Settings] = None) -> float:
    '''(1/n!) Perm(M_x) with (M_x)_ij = Pj(x_i)'''
    settings = settings or get_settings()
    if c.n > settings.brute_force_n:
        raise CapExceeded(f'n={c.n} is above the brute-force cap {settings.brute_force_n}, use exact_chi2_permanent')
    _check_tuple(c, x)
    mx = c.matrix[:, list(x)].T
    # dp[mask]: sum over assignments of the first popcount(mask) coordinates to the components in mask
    dp = np.zeros(1 << c.n)
    dp[0] = 1.0
    for mask in range(1, 1 << c.n):
        row = bin(mask).count('1') - 1
        total = 0.0
        for j in range(c.n):
            if mask >> j & 1:
                total += dp[mask ^ (1 << j)] * mx[row, j]
        dp[mask] = total
    return float(dp[-1] * math.exp(-log_factorial(c.n)))


def iid_mixture_pmf(c: ComponentList, x: Sequence[int], settings: Optional[Settings] = None) -> float:
    settings = settings or get_settings()
    if c.n > settings.brute_force_n:
        raise CapExceeded(f'n={c.n} is above the brute-force cap {settings.brute_force_n}, use exact_chi2_permanent')
    _check_tuple(c, x)
    return float(np.prod(c.marginal.probs[list(x)]))


def _check_cells(cells: int, settings: Settings) -> None:
    if cells > settings.enumeration_cells:
        raise CapExceeded(f'{cells} outcomes exceed the enumeration cap {settings.enumeration_cells}, use the permanent path')


def permutation_mixture_table(rows: FloatArray, settings: Optional[Settings] = None) -> FloatArray:
    '''Joint pmf of the permutation mixture of the given rows, flattened in C order over K^n tuples'''
    settings = settings or get_settings()
    n, k = rows.shape
    _check_cells(k ** n, settings)
    layer: Dict[int, FloatArray] = {0: np.ones(1)}
    for _ in range(n):
        nxt: Dict[int, FloatArray] = {}
        for mask, table in layer.items():
            for j in range(n):
                if mask >> j & 1:
                    continue
                grown = np.multiply.outer(table, rows[j]).ravel()
                key = mask | (1 << j)
                if key in nxt:
                    nxt[key] += grown
                else:
                    nxt[key] = grown
        layer = nxt
    return np.asarray(layer[(1 << n) - 1] * math.exp(-log_factorial(n)), dtype=float)


def product_table(probs: FloatArray, n: int, settings: Optional[Settings] = None) -> FloatArray:
    '''probs^{(x) n}, flattened in C order'''
    settings = settings or get_settings()
    _check_cells(probs.size ** n, settings)
    table = np.ones(1)
    for _ in range(n):
        table = np.multiply.outer(table, probs).ravel()
    return table


def joint_divergence(kind: str, p_table: FloatArray, q_table: FloatArray) -> float:
    return _divergence_arrays(kind, p_table, q_table)


def exact_chi2_bruteforce(c: ComponentList, settings: Optional[Settings] = None) -> float:
    '''chi2 between the two mixtures by enumerating all K^n outcomes'''
    settings = settings or get_settings()
    p_table = permutation_mixture_table(c.matrix, settings)
    q_table = product_table(c.marginal.probs, c.n, settings)
    return joint_divergence('chi2', p_table, q_table)


def mixture_divergences(c: ComponentList, settings: Optional[Settings] = None) -> Dict[str, float]:
    '''Every supported divergence between the permutation mixture and its i.i.d. counterpart'''
    settings = settings or get_settings()
    p_table = permutation_mixture_table(c.matrix, settings)
    q_table = product_table(c.marginal.probs, c.n, settings)
    return {kind: joint_divergence(kind, p_table, q_table) for kind in DIVERGENCES}


def coordinate_marginal(table: FloatArray, n: int, k: int, axis: int = 0) -> FloatArray:
    shaped = table.reshape((k,) * n)
    other = tuple(i for i in range(n) if i != axis)
    return np.asarray(shaped.sum(axis=other), dtype=float)


def mixture_checks(c: ComponentList, settings: Optional[Settings] = None) -> List[Check]:
    '''Normalization, one-dimensional marginals and the doubly centered measures Pi - Pbar'''
    settings = settings or get_settings()
    table = permutation_mixture_table(c.matrix, settings)
    checks = [check_close('pmf_total', float(table.sum()), 1.0, rel=0.0, abs_tol=1e-9)]
    for axis in range(c.n):
        gap = float(np.max(np.abs(coordinate_marginal(table, c.n, c.alphabet_size, axis) - c.marginal.probs)))
        checks.append(check_leq(f'marginal_{axis}', gap, 0.0, abs_tol=settings.validation_tol))
    measures = np.vstack([m.weights for m in c.centered_measures])
    checks.append(check_leq('psi_int_zero', float(np.max(np.abs(measures.sum(axis=1)))), 0.0, abs_tol=c.tol))
    checks.append(check_leq('psi_sum_zero', float(np.max(np.abs(measures.sum(axis=0)))), 0.0, abs_tol=c.tol))
    mm = build_mixture_matrix(c)
    checks.append(check_close('capacity_is_trace_minus_one', instance_capacity(c), mm.trace - 1,
                              rel=0.0, abs_tol=settings.validation_tol))
    return checks
