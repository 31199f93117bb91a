"""The q_k polynomials: q_1 = t, q_{k+1} = t q_k - q_k'.

Their roots, scaled by sqrt(2a(1-2a)), separate the +inf and -inf bands of
the centered 1-count statistic.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict

from okamoto.errors import RootBracketError, require

ROOT_TOL = 1e-13
MAX_ITER = 400


class QPolynomial(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    coeffs: Tuple[int, ...]

    def __call__(self, t: float) -> float:
        value = 0.0
        for c in reversed(self.coeffs):
            value = value * t + c
        return value

    def derivative(self) -> Tuple[int, ...]:
        return tuple(i * c for i, c in enumerate(self.coeffs))[1:]

    def derivative_at(self, t: float) -> float:
        value = 0.0
        for c in reversed(self.derivative()):
            value = value * t + c
        return value

    def to_text(self) -> str:
        parts = []
        for power in range(self.k, -1, -1):
            c = self.coeffs[power]
            if c == 0:
                continue
            mag = abs(c)
            body = "" if mag == 1 and power else str(mag)
            if power:
                body += "t" if power == 1 else f"t^{power}"
            parts.append(("-" if c < 0 else "+") + body)
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text


class ThresholdSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    a: float
    roots: Tuple[float, ...]
    scaled: Tuple[float, ...]


@lru_cache(maxsize=None)
def _coeffs(k: int) -> Tuple[int, ...]:
    if k == 1:
        return (0, 1)
    prev = list(_coeffs(k - 1))
    shifted = [0] + prev
    deriv = [i * c for i, c in enumerate(prev)][1:] + [0, 0]
    return tuple(s - d for s, d in zip(shifted, deriv))


def q_poly(k: int) -> QPolynomial:
    require(int(k) == k and k >= 1, "k_out_of_range", f"k must be an integer >= 1, got {k}")
    return QPolynomial(k=k, coeffs=_coeffs(k))


def _root_bound(q: QPolynomial) -> float:
    """Fujiwara bound on the modulus of the roots of a monic polynomial."""
    c = q.coeffs
    k = q.k
    terms = [abs(c[k - i]) ** (1.0 / i) for i in range(1, k)]
    terms.append(abs(c[0] / 2.0) ** (1.0 / k))
    return 2.0 * max(terms + [0.0]) + 1.0


def _refine(q: QPolynomial, lo: float, hi: float) -> float:
    f_lo, f_hi = q(lo), q(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise RootBracketError(f"q_{q.k} has no sign change on [{lo}, {hi}]")
    t = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        f_t = q(t)
        if f_t == 0.0 or hi - lo < ROOT_TOL:
            return t
        if (f_t > 0) == (f_lo > 0):
            lo, f_lo = t, f_t
        else:
            hi = t
        slope = q.derivative_at(t)
        step = t - f_t / slope if slope != 0.0 else math.nan
        t = step if lo < step < hi else 0.5 * (lo + hi)
    return t


@lru_cache(maxsize=None)
def _roots(k: int) -> Tuple[float, ...]:
    if k == 1:
        return (0.0,)
    q = q_poly(k)
    inner = _roots(k - 1)
    bound = _root_bound(q)
    edges = [-bound, *inner, bound]
    return tuple(_refine(q, edges[i], edges[i + 1]) for i in range(k))


def q_roots(k: int) -> List[float]:
    """The k distinct real roots of q_k, ascending, each bracketed by roots of q_{k-1}."""
    require(int(k) == k and k >= 1, "k_out_of_range", f"k must be an integer >= 1, got {k}")
    return list(_roots(k))


def thresholds(k: int, a: float) -> ThresholdSet:
    require(0.0 < a < 0.5, "a_out_of_range", f"thresholds need a in (0, 1/2), got {a}")
    roots = q_roots(k)
    scale = math.sqrt(2.0 * a * (1.0 - 2.0 * a))
    return ThresholdSet(k=k, a=a, roots=tuple(roots), scaled=tuple(t * scale for t in roots))
