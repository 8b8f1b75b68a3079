import math

import pytest

from permix.sharedutils import kahan_sum, leq, safe_exp, xlogx


def test_kahan_sum_keeps_small_terms():
    values = [1.0] + [1e-16] * 10_000
    assert sum(values) == 1.0
    assert abs(kahan_sum(values) - (1.0 + 1e-12)) < 1e-15
    assert kahan_sum([1j, 2 + 0j, -1j]) == pytest.approx(2.0)
    assert kahan_sum([]) == 0


def test_xlogx():
    assert xlogx(0) == 0.0
    assert xlogx(1) == 0.0
    assert xlogx(math.e) == pytest.approx(math.e)


def test_infinity_handling():
    assert safe_exp(1e4) == math.inf
    assert safe_exp(-math.inf) == 0.0
    assert leq(5.0, math.inf)
    assert not leq(math.inf, 5.0)
    assert leq(1.0 + 1e-10, 1.0)
