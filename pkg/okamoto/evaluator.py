"""Evaluation of F_a(x) and of its a-derivatives M_{k,a}(x).

The value is the series

    M_{k,a}(x) = sum_{n>=0} d^k/da^k [ a^{n-l_n} (1-2a)^{l_n} q(x_{n+1}) ],
    q(0) = 0, q(1) = a, q(2) = 1 - a,

expanded with the Leibniz rule. Truncation is bounded with the per-term
majorant K * b^n * (c*n + 1)^k summed by a ratio test, so every result
carries an explicit error bound.
"""
from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from okamoto.config import MAX_GRID_DEPTH
from okamoto.errors import ToleranceError, require
from okamoto.spectral import holder_exponent
from okamoto.ternary import DigitSource, FiniteSource

logger = logging.getLogger(__name__)

NEAR_HALF = 1e-3
DEFAULT_TOL = 1e-12
MAX_TERMS = 200_000


class EvalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    err_bound: float
    terms: int
    exact: bool


class SeriesWeights(BaseModel):
    model_config = ConfigDict(frozen=True)

    q0: float
    q1: float
    q2: float
    b: float
    gamma: float


def series_weights(a: float) -> SeriesWeights:
    check_a(a)
    return SeriesWeights(q0=0.0, q1=a, q2=1.0 - a, b=max(a, abs(1.0 - 2.0 * a)), gamma=holder_exponent(a))


def check_a(a: float):
    require(0.0 < a < 1.0, "a_out_of_range", f"a must lie in (0, 1), got {a}")


def check_k(k: int, least: int = 0):
    require(int(k) == k and k >= least, "k_out_of_range", f"k must be an integer >= {least}, got {k}")


def _falling(m: np.ndarray, i: int) -> np.ndarray:
    out = np.ones_like(m, dtype=np.float64)
    for t in range(i):
        out = out * (m - t)
    return out


def power_derivative(k: int, a: float, m, l) -> np.ndarray:
    """d^k/da^k [a^m (1-2a)^l] at a, elementwise over integer arrays m, l >= 0."""
    m = np.asarray(m, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    b = 1.0 - 2.0 * a
    if b != 0.0 and abs(b) < NEAR_HALF:
        return _power_derivative_log(k, a, m, l)
    total = np.zeros(np.broadcast(m, l).shape, dtype=np.float64)
    for i in range(k + 1):
        coef = math.comb(k, i) * (-2.0) ** (k - i) * _falling(m, i) * _falling(l, k - i)
        live = coef != 0.0
        em = np.where(live, m - i, 0.0)
        el = np.where(live, l - k + i, 0.0)
        pb = np.where(el == 0.0, 1.0, 0.0) if b == 0.0 else b ** el
        total += np.where(live, coef * a ** em * pb, 0.0)
    return total


def _power_derivative_log(k, a, m, l):
    b = 1.0 - 2.0 * a
    shape = np.broadcast(m, l).shape
    logs, signs = [], []
    for i in range(k + 1):
        coef = math.comb(k, i) * (-2.0) ** (k - i) * _falling(m, i) * _falling(l, k - i)
        live = coef != 0.0
        el = np.where(live, l - k + i, 0.0)
        with np.errstate(divide="ignore"):
            mag = np.log(np.abs(coef)) + np.where(live, m - i, 0.0) * math.log(a) + el * math.log(abs(b))
        sign = np.sign(coef) * np.where((b < 0) & (el % 2 == 1), -1.0, 1.0)
        logs.append(np.where(live, mag, -np.inf))
        signs.append(np.where(live, sign, 0.0))
    logs, signs = np.array(logs).reshape(k + 1, *shape), np.array(signs).reshape(k + 1, *shape)
    top = np.max(logs, axis=0)
    safe_top = np.where(np.isfinite(top), top, 0.0)
    scaled = np.sum(signs * np.exp(logs - safe_top), axis=0)
    return np.where(np.isfinite(top), scaled * np.exp(safe_top), 0.0)


def leibniz_derivative(k: int, a: float, m: int, l: int) -> float:
    return float(power_derivative(k, a, np.array([m]), np.array([l]))[0])


def series_terms(k: int, a: float, digits: np.ndarray) -> np.ndarray:
    """Terms n = 0..len(digits)-1 of the M_k series for the given digits x_1, x_2, ..."""
    digits = np.asarray(digits)
    n = np.arange(digits.size, dtype=np.int64)
    l = np.concatenate([[0], np.cumsum(digits == 1)[:-1]]).astype(np.int64) if digits.size else n
    lower = power_derivative(k, a, n - l, l)
    upper = power_derivative(k, a, n - l + 1, l)
    return np.where(digits == 1, upper, np.where(digits == 2, lower - upper, 0.0))


def majorant(k: int, a: float) -> Tuple[float, float, float]:
    """(log K, b, c) with |term n| <= K b^n (c n + 1)^k."""
    if a == 0.5:
        return math.lgamma(k + 1) + k * math.log(4.0), 0.5, 2.0
    gap = abs(1.0 - 2.0 * a)
    return 0.0, max(a, gap), 1.0 / a + 2.0 / gap


def _log_term(k, log_k, b, c, n):
    return log_k + n * math.log(b) + k * math.log(c * n + 1.0)


def _ratio(k, b, c, n):
    return b * (1.0 + c / (c * n + 1.0)) ** k


def log_tail(k: int, a: float, m: int) -> float:
    """log of an upper bound for sum_{n>=m} |term n| of the M_k series."""
    log_k, b, c = majorant(k, a)
    start = m
    if k > 0:
        beta = b ** (-1.0 / k) - 1.0
        start = max(m, int(math.floor((c / beta - 1.0) / c)) + 1)
    while _ratio(k, b, c, start) >= 1.0:
        start += 1
    head = -math.inf
    if start > m:
        ns = np.arange(m, start, dtype=np.float64)
        logs = log_k + ns * math.log(b) + k * np.log(c * ns + 1.0)
        head = float(np.logaddexp.reduce(logs))
    geometric = _log_term(k, log_k, b, c, start) - math.log1p(-_ratio(k, b, c, start))
    return float(np.logaddexp(head, geometric))


def tail_bound(k: int, a: float, m: int) -> float:
    check_k(k)
    check_a(a)
    require(m >= 1, "m_out_of_range", f"m must be >= 1, got {m}")
    return math.exp(log_tail(k, a, m))


def sup_norm_bound(k: int, a: float) -> float:
    """Bound on sup_x |M_{k,a}(x)|; F_a takes values in [0, 1]."""
    return 1.0 if k == 0 else math.exp(log_tail(k, a, 0))


def terms_needed(k: int, a: float, tol: float, max_terms: int = MAX_TERMS) -> int:
    log_tol = math.log(tol)
    if log_tail(k, a, max_terms) > log_tol:
        raise ToleranceError(best_bound=math.exp(log_tail(k, a, max_terms)), terms=max_terms, tol=tol)
    lo, hi = 0, 1
    while log_tail(k, a, hi) > log_tol:
        lo, hi = hi, min(2 * hi, max_terms)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if log_tail(k, a, mid) > log_tol:
            lo = mid
        else:
            hi = mid
    return hi


def _evaluate(k: int, a: float, x: DigitSource, tol: float, max_terms: int) -> EvalResult:
    check_a(a)
    require(tol > 0.0, "tol_out_of_range", f"tol must be > 0, got {tol}")
    if isinstance(x, FiniteSource):
        terms = series_terms(k, a, np.array(x.prefix, dtype=np.int8))
        return EvalResult(value=math.fsum(terms), err_bound=0.0, terms=len(x.prefix), exact=True)
    m = terms_needed(k, a, tol, max_terms)
    logger.debug(f"M_{k} at a={a}: {m} terms for tol={tol:g}")
    terms = series_terms(k, a, x.digits(m))
    return EvalResult(value=math.fsum(terms), err_bound=math.exp(log_tail(k, a, m)), terms=m, exact=False)


def okamoto_F(a: float, x: DigitSource, tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS) -> EvalResult:
    return _evaluate(0, a, x, tol, max_terms)


def partial_M(k: int, a: float, x: DigitSource, tol: float = DEFAULT_TOL, max_terms: int = MAX_TERMS) -> EvalResult:
    check_k(k, 1)
    return _evaluate(k, a, x, tol, max_terms)


def evaluate(k: int, a: float, x: DigitSource, tol: float = DEFAULT_TOL) -> EvalResult:
    """F_a for k = 0, M_{k,a} otherwise."""
    check_k(k)
    return _evaluate(k, a, x, tol, MAX_TERMS)


def exact_at_rational(k: int, a: float, n: int, j: int) -> float:
    """M_{k,a}(j / 3^n) as a finite sum."""
    check_k(k)
    check_a(a)
    require(n >= 0, "n_out_of_range", f"n must be >= 0, got {n}")
    require(0 <= j <= 3 ** n, "j_out_of_range", f"j must lie in [0, 3^{n}], got {j}")
    if j == 3 ** n:
        return 1.0 if k == 0 else 0.0
    digits = np.array([(j // 3 ** (n - 1 - i)) % 3 for i in range(n)], dtype=np.int8)
    return math.fsum(series_terms(k, a, digits))


def grid_values(k: int, a: float, n: int) -> np.ndarray:
    """M_{k,a}(j / 3^n) for j = 0..3^n, vectorized over j."""
    check_k(k)
    check_a(a)
    require(0 <= n <= MAX_GRID_DEPTH, "budget_exceeded", f"grid depth {n} exceeds budget {MAX_GRID_DEPTH}")
    size = 3 ** n
    j = np.arange(size, dtype=np.int64)
    values = np.zeros(size, dtype=np.float64)
    ones = np.zeros(size, dtype=np.int64)
    for i in range(n):
        digit = (j // 3 ** (n - 1 - i)) % 3
        ls = np.arange(i + 1, dtype=np.int64)
        lower = power_derivative(k, a, i - ls, ls)
        upper = power_derivative(k, a, i - ls + 1, ls)
        table = np.column_stack([np.zeros(i + 1), upper, lower - upper])
        values += table[ones, digit]
        ones += digit == 1
    return np.append(values, 1.0 if k == 0 else 0.0)


def _step_matrix(k: int, a: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Affine map V(x) = A V(sigma x) + c for V = (M_0, ..., M_k) and first digit d."""
    w, dw = (1.0 - 2.0 * a, -2.0) if d == 1 else (a, 1.0)
    A = np.diag(np.full(k + 1, w))
    for j in range(1, k + 1):
        A[j, j - 1] = j * dw
    c = np.zeros(k + 1)
    if d == 1:
        c[0] = a
        if k >= 1:
            c[1] = 1.0
    elif d == 2:
        c[0] = 1.0 - a
        if k >= 1:
            c[1] = -1.0
    return A, c


def eval_via_FE(k: int, a: float, x: DigitSource, depth: int) -> EvalResult:
    """Unroll the functional equations `depth` levels; bound the unknown remainder by sup norms."""
    check_k(k)
    check_a(a)
    require(depth >= 1, "depth_out_of_range", f"depth must be >= 1, got {depth}")
    steps = {d: _step_matrix(k, a, d) for d in (0, 1, 2)}
    product = np.eye(k + 1)
    offset = np.zeros(k + 1)
    for d in x.digits(depth):
        A, c = steps[int(d)]
        offset = offset + product @ c
        product = product @ A
    if isinstance(x, FiniteSource) and depth >= len(x.prefix):
        return EvalResult(value=float(offset[k]), err_bound=0.0, terms=depth, exact=True)
    guess = np.zeros(k + 1)
    guess[0] = 0.5
    radius = np.array([0.5] + [sup_norm_bound(j, a) for j in range(1, k + 1)])
    value = float(product[k] @ guess + offset[k])
    err = float(np.abs(product[k]) @ radius)
    return EvalResult(value=value, err_bound=err, terms=depth, exact=False)
