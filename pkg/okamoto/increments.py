"""Increments of M_{k,a} over ternary intervals I_{n,j} = [j 3^-n, (j+1) 3^-n].

For a != 1/2,

    Delta_{k,a}(I_{n,j}) = a^{n-l-k} (1-2a)^{l-k} P_k(n, l),   l = l(j),

with P_k a polynomial in (n, l) whose leading part is ((1-2a)n - l)^k.
Magnitudes are carried as (sign, log|.|) since the prefactor under- and
overflows long before P_k does.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, model_validator

from okamoto.errors import ValidationError, require
from okamoto.evaluator import check_a, check_k, exact_at_rational, log_tail, majorant
from okamoto.ternary import ones_in_base3

logger = logging.getLogger(__name__)

EXP_LIMIT = 709.0
RECURSION_STEP = 1e-6


class TernaryInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    j: int

    @model_validator(mode="after")
    def _in_range(self):
        if self.n < 1:
            raise ValidationError("n_out_of_range", f"interval depth must be >= 1, got {self.n}")
        if not 0 <= self.j < 3 ** self.n:
            raise ValidationError("j_out_of_range", f"j must lie in [0, 3^{self.n}), got {self.j}")
        return self

    @computed_field
    @property
    def l_of_j(self) -> int:
        return int(ones_in_base3(np.array([self.j]), self.n)[0])

    @property
    def left(self) -> float:
        return self.j / 3 ** self.n


class IncrementValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: Optional[float]
    magnitude_log: float
    sign: int
    p_value: float


class RecursionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    residual_n: float
    residual_l: float
    residual_a: float
    scale_a: float
    max_residual: float
    derivative_ok: bool


def _falling(m: int, i: int) -> int:
    return math.perm(m, i) if 0 <= i <= m else 0


def _exact_p(k: int, a: float, n: int, l: int) -> Fraction:
    A = Fraction(a)
    B = 1 - 2 * A
    return sum(
        (math.comb(k, i) * _falling(n - l, i) * _falling(l, k - i) * (-2 * A) ** (k - i) * B ** i
         for i in range(k + 1)),
        Fraction(0),
    )


def p_value(k: int, a: float, n: int, l: int) -> float:
    """P_k(n, l): the Leibniz sum for the increment with the prefactor divided out.

    Evaluated in exact rational arithmetic on the binary value of a.
    """
    check_k(k)
    require(0 <= l <= n, "l_out_of_range", f"need 0 <= l <= n, got l={l}, n={n}")
    return float(_exact_p(k, a, n, l))


def p_value_by_recursion(k: int, a: float, n: int, l: int) -> float:
    """P_k(n, l) rebuilt from P(0, 0) along the diagonal then horizontally."""
    check_k(k)
    require(0 <= l <= n, "l_out_of_range", f"need 0 <= l <= n, got l={l}, n={n}")
    b = 1.0 - 2.0 * a
    P = [1.0] + [0.0] * k
    for _ in range(l):
        P = [P[0]] + [P[i] - 2 * i * a * P[i - 1] for i in range(1, k + 1)]
    for _ in range(n - l):
        P = [P[0]] + [P[i] + i * b * P[i - 1] for i in range(1, k + 1)]
    return P[k]


def r_value(k: int, a: float, n: int, l: int) -> float:
    check_k(k)
    require(0 <= l <= n, "l_out_of_range", f"need 0 <= l <= n, got l={l}, n={n}")
    return float(_exact_p(k, a, n, l) - ((1 - 2 * Fraction(a)) * n - l) ** k)


def _log_delta(k: int, a: float, n: int, l: int):
    P = p_value(k, a, n, l)
    if P == 0.0:
        return 0, -math.inf, P
    b = 1.0 - 2.0 * a
    log_mag = (n - l - k) * math.log(a) + (l - k) * math.log(abs(b)) + math.log(abs(P))
    sign = (1 if P > 0 else -1) * (-1 if b < 0 and (l - k) % 2 else 1)
    return sign, log_mag, P


def delta_nl(k: int, a: float, n: int, l: int) -> IncrementValue:
    """Increment over any depth-n interval whose index has l ones (a != 1/2)."""
    check_k(k)
    check_a(a)
    require(a != 0.5, "use_delta_half", "a = 1/2 has its own closed form; use delta_half")
    sign, log_mag, P = _log_delta(k, a, n, l)
    delta = sign * math.exp(log_mag) if log_mag < EXP_LIMIT else None
    return IncrementValue(delta=delta, magnitude_log=log_mag, sign=sign, p_value=P)


def delta_general(k: int, a: float, iv: TernaryInterval) -> IncrementValue:
    return delta_nl(k, a, iv.n, iv.l_of_j)


def check_recursions(k: int, a: float, n: int, l: int) -> RecursionReport:
    """Residuals of the two difference equations and of the a-derivative recursion."""
    check_k(k, 1)
    check_a(a)
    require(0 <= l <= n, "l_out_of_range", f"need 0 <= l <= n, got l={l}, n={n}")
    b = 1.0 - 2.0 * a
    base, lower = p_value(k, a, n, l), p_value(k - 1, a, n, l)
    residual_n = abs(p_value(k, a, n + 1, l) - base - k * b * lower)
    residual_l = abs(p_value(k, a, n + 1, l + 1) - base + 2 * k * a * lower)
    h = RECURSION_STEP
    dP = (p_value(k, a + h, n, l) - p_value(k, a - h, n, l)) / (2.0 * h)
    upper = p_value(k + 1, a, n, l)
    drift = (b * n - l - (1.0 - 4.0 * a) * k) * base
    residual_a = abs(upper - a * b * dP - drift)
    scale_a = max(1.0, abs(upper), abs(a * b * dP), abs(drift))
    return RecursionReport(
        residual_n=residual_n,
        residual_l=residual_l,
        residual_a=residual_a,
        scale_a=scale_a,
        max_residual=max(residual_n, residual_l),
        derivative_ok=residual_a <= 1e-6 * scale_a,
    )


def delta_half(k: int, n: int, j: int) -> float:
    """Increment of M_{k,1/2} over I_{n,j}; zero when l(j) > k."""
    check_k(k)
    iv = TernaryInterval(n=n, j=j)
    require(n >= k, "n_less_than_k", f"the a = 1/2 closed form needs n >= k, got n={n}, k={k}")
    return delta_half_by_count(k, n, iv.l_of_j)


def delta_half_by_count(k: int, n: int, l: int) -> float:
    if l > k:
        return 0.0
    return float(math.perm(k, l) * math.perm(n - l, k - l) * (-2) ** l) * math.ldexp(1.0, -(n - k))


def osc_bound(k: int, a: float, iv: TernaryInterval) -> float:
    """Upper bound for the oscillation of M_{k,a} on I_{n,j}, a != 1/2."""
    return math.exp(log_osc_bound(k, a, iv.n, iv.l_of_j))


def log_osc_bound(k: int, a: float, n: int, l: int) -> float:
    check_k(k)
    check_a(a)
    require(a != 0.5, "use_delta_half", "at a = 1/2 the oscillation equals |delta_half| once n >= 2k-1")
    _, b_max, _ = majorant(k, a)
    return (
        math.log(2.0)
        + (n - l) * math.log(a)
        + l * math.log(abs(1.0 - 2.0 * a))
        - n * math.log(b_max)
        + log_tail(k, a, n)
    )


def box_containment_check(k: int, n: int, j: int) -> bool:
    """Whether M_{k,1/2} on I_{n,j} stays between its endpoint values (sampled at depth n+3)."""
    check_k(k)
    require(n >= 2 * k - 1, "n_below_containment_depth", f"box containment needs n >= 2k-1 = {2 * k - 1}, got n={n}")
    TernaryInterval(n=n, j=j)
    values = [exact_at_rational(k, 0.5, n + 3, 27 * j + t) for t in range(28)]
    lo, hi = sorted((values[0], values[-1]))
    slack = 1e-12 * max(1.0, max(abs(v) for v in values))
    return all(lo - slack <= v <= hi + slack for v in values)


def delta_table(k: int, a: float, n: int) -> np.ndarray:
    """Increment over a depth-n interval as a function of l = 0..n (NaN where unrepresentable)."""
    if a == 0.5:
        require(n >= k, "n_less_than_k", f"the a = 1/2 closed form needs n >= k, got n={n}, k={k}")
        return np.array([delta_half_by_count(k, n, l) for l in range(n + 1)])
    out = []
    for l in range(n + 1):
        value = delta_nl(k, a, n, l).delta
        out.append(math.nan if value is None else value)
    return np.array(out)


def _exact_delta(k: int, a: float, n: int, l: int) -> Fraction:
    if a == 0.5:
        if l > k:
            return Fraction(0)
        return Fraction(math.perm(k, l) * math.perm(n - l, k - l) * (-2) ** l, 2 ** (n - k))
    A = Fraction(a)
    return A ** (n - l - k) * (1 - 2 * A) ** (l - k) * _exact_p(k, a, n, l)


def telescoping_sum(k: int, a: float, n: int) -> float:
    """Sum of the increments over j = 0..3^n - 1, grouped by l(j) and added exactly."""
    check_k(k)
    check_a(a)
    require(n >= 1, "n_out_of_range", f"n must be >= 1, got {n}")
    if a == 0.5:
        require(n >= k, "n_less_than_k", f"the a = 1/2 closed form needs n >= k, got n={n}, k={k}")
    total = sum((math.comb(n, l) * 2 ** (n - l) * _exact_delta(k, a, n, l) for l in range(n + 1)), Fraction(0))
    return float(total)


def _alternates(k: int, a: float, n: int) -> bool:
    signs = {_log_delta(k, a, n, l)[2] > 0 for l in range(n + 1)}
    if len(signs) != 1 or any(p_value(k, a, n, l) == 0.0 for l in range(n + 1)):
        return False
    logs = [_log_delta(k, a, n, l)[1] for l in range(n + 1)]
    return all(logs[l + 1] < logs[l] for l in range(n))


def alternation_depth(k: int, a: float, n_max: int) -> Optional[int]:
    """Smallest n0 with sign alternation and the zigzag inequality at every depth n0 < n <= n_max."""
    check_k(k)
    require(0.5 < a < 1.0, "a_out_of_range", f"sign alternation needs a in (1/2, 1), got {a}")
    good: List[bool] = [_alternates(k, a, n) for n in range(1, n_max + 1)]
    if not good or not good[-1]:
        return None
    n0 = n_max
    while n0 > 0 and good[n0 - 1]:
        n0 -= 1
    logger.debug(f"alternation for k={k}, a={a} from depth {n0 + 1}")
    return n0
