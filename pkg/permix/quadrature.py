'''
Gauss-Hermite rules for expectations under the standard normal.

numpy's probabilists' rule integrates against exp(-x^2/2); dividing the weights
by sqrt(2 pi) gives E f(Z) ~ sum_i w_i f(z_i) with sum_i w_i = 1.
'''
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class GHQuadrature:
    '''Nodes/weights for standard-normal expectation.'''
    z: NDArray[np.float64]
    w: NDArray[np.float64]

    def expect(self, f: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> float:
        return float(np.dot(self.w, f(self.z)))

    def expect_2d(self, f: Callable[[NDArray[np.float64], NDArray[np.float64]], NDArray[np.float64]]) -> float:
        '''E f(Z1, Z2) for independent standard normals on the tensor grid'''
        x1, x2 = np.meshgrid(self.z, self.z, indexing='ij')
        return float(np.einsum('i,ij,j->', self.w, f(x1, x2), self.w))


@lru_cache(maxsize=16)
def gh_standard_normal(n: int) -> GHQuadrature:
    if n < 2:
        raise ValueError("n must be >= 2")
    z, w = hermegauss(n)
    return GHQuadrature(z=z, w=w / math.sqrt(2 * math.pi))


def gaussian_affinity(theta: float, theta2: float, nodes: int = 200) -> float:
    '''int sqrt(phi_theta phi_theta2) by quadrature; the closed form is exp(-(theta-theta2)^2/8)'''
    rule = gh_standard_normal(nodes)
    return rule.expect(lambda x: np.exp(0.5 * (theta + theta2) * x - 0.25 * (theta ** 2 + theta2 ** 2)))
