#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import math
from typing import Any, Iterable

from scipy.special import gammaln

logging.basicConfig(
    format='%(asctime)s,%(msecs)d %(levelname)-8s %(message)s',
    datefmt='%Y-%m-%d:%H:%M:%S',
    level=logging.INFO
    )

def stdlog(msg: Any) -> None :
    '''standard infologging'''
    logging.info(msg)

def dbglog(msg: Any) -> None :
    '''standard debug logging'''
    logging.debug(msg)

def errlog(msg: Any) -> None :
    '''standard error logging'''
    logging.error(msg)

'''
Log-space helpers
'''
def log_factorial(n: int) -> float:
    return float(gammaln(n + 1))

def log_binom(n: int, k: int) -> float:
    '''log C(n, k), -inf outside 0 <= k <= n'''
    if k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))

def binom(n: int, k: int) -> float:
    return safe_exp(log_binom(n, k))

def xlogx(x: float) -> float:
    '''x log x with the 0 log 0 = 0 convention'''
    return 0.0 if x == 0 else x * math.log(x)

def safe_exp(value: float) -> float:
    '''exp that saturates to inf instead of raising'''
    if value == -math.inf:
        return 0.0
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf

def safe_expm1(value: float) -> float:
    try:
        return math.expm1(value)
    except OverflowError:
        return math.inf

def safe_log(value: float) -> float:
    if value <= 0:
        return -math.inf
    return math.log(value)

def leq(lhs: float, rhs: float, rel: float = 1e-8, abs_tol: float = 0.0) -> bool:
    '''lhs <= rhs up to a relative slack on rhs, inf aware'''
    if math.isnan(lhs) or math.isnan(rhs):
        return False
    if rhs == math.inf or lhs == -math.inf:
        return True
    if lhs == math.inf:
        return False
    return lhs <= rhs + rel * abs(rhs) + abs_tol

def log_leq(log_lhs: float, log_rhs: float, rel: float = 1e-8) -> bool:
    '''Same comparison on magnitudes given by their logs'''
    return log_lhs <= log_rhs + math.log1p(rel)

def kahan_sum(values: Iterable[complex]) -> complex:
    '''Compensated summation, complex safe'''
    total: complex = 0.0
    carry: complex = 0.0
    for value in values:
        y = value - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total
