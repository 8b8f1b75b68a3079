#!/usr/bin/env python3
'''
Numerical kernels with no knowledge of caps or configuration.
'''

from __future__ import annotations

import math
from typing import Iterator, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .sharedutils import kahan_sum

Number = Union[float, complex]


def _ryser_terms(a: NDArray[np.generic]) -> Iterator[complex]:
    '''Signed Ryser terms over a Gray code; each step flips one column in or out of the subset'''
    n = a.shape[0]
    rowsums = np.zeros(n, dtype=a.dtype)
    in_subset = np.zeros(n, dtype=bool)
    for k in range(1, 1 << n):
        # Gray code: flip the lowest set bit of k
        j = (k & -k).bit_length() - 1
        if in_subset[j]:
            rowsums -= a[:, j]
        else:
            rowsums += a[:, j]
        in_subset[j] = not in_subset[j]
        term = complex(np.prod(rowsums))
        # (-1)^(n - |S|)
        yield -term if (n - int(in_subset.sum())) & 1 else term


def ryser(matrix: NDArray[np.generic]) -> Number:
    '''Permanent of a square matrix by Ryser's formula, the alternating terms added with compensated summation'''
    a = np.asarray(matrix)
    if a.shape[0] == 0:
        return 1.0
    is_complex = np.iscomplexobj(a)
    a = a.astype(np.complex128 if is_complex else np.float64)
    total = kahan_sum(_ryser_terms(a))
    if is_complex:
        return complex(total)
    return float(total.real)


def ryser_exact(matrix: Sequence[Sequence[int]]) -> int:
    '''Permanent of an integer matrix along the same Gray code walk, in exact arithmetic'''
    n = len(matrix)
    if n == 0:
        return 1
    rowsums = [0] * n
    in_subset = [False] * n
    size = 0
    total = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        sign = -1 if in_subset[j] else 1
        rowsums = [s + sign * row[j] for s, row in zip(rowsums, matrix)]
        size += sign
        in_subset[j] = not in_subset[j]
        term = math.prod(rowsums)
        total += -term if (n - size) & 1 else term
    return total


def rectangular_sum(matrix: NDArray[np.generic]) -> Number:
    '''Sum over all l-column subsets T of Perm(A_T) for an l x n matrix A.

    Sweeps the columns once; dp[mask] holds the sum over partial matchings of the
    rows in mask into the columns seen so far.
    '''
    a = np.asarray(matrix)
    ell, n = a.shape
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64
    dp = np.zeros(1 << ell, dtype=dtype)
    dp[0] = 1
    masks = np.arange(1 << ell)
    free = [masks[(masks >> r) & 1 == 0] for r in range(ell)]
    for j in range(n):
        nxt = dp.copy()
        for r in range(ell):
            idx = free[r]
            nxt[idx | (1 << r)] += dp[idx] * a[r, j]
        dp = nxt
    if dtype is np.complex128:
        return complex(dp[-1])
    return float(dp[-1].real)


def esp_batch(values: NDArray[np.generic]) -> NDArray[np.generic]:
    '''Coefficients e_0..e_n of prod_i (1 + x_i z) along the last axis'''
    x = np.asarray(values)
    n = x.shape[-1]
    dtype = np.complex128 if np.iscomplexobj(x) else np.float64
    e = np.zeros(x.shape[:-1] + (n + 1,), dtype=dtype)
    e[..., 0] = 1
    for i in range(n):
        xi = x[..., i:i + 1]
        e[..., 1:i + 2] = e[..., 1:i + 2] + xi * e[..., 0:i + 1]
    return e


def complete_homogeneous(values: NDArray[np.float64], ell_max: int) -> NDArray[np.float64]:
    '''h_0..h_ell_max of the given values'''
    h = np.zeros(ell_max + 1)
    h[0] = 1.0
    for x in np.asarray(values, dtype=float):
        for ell in range(1, ell_max + 1):
            h[ell] += x * h[ell - 1]
    return h
