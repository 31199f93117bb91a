"""Characteristic values, special constants and derivative verdicts for M_{k,a}.

Verdicts are honest: where the available criteria are only sufficient or
only necessary and the statistics fall in between, the answer is
Inconclusive. Verdicts on generated sources rest on finite windows and
carry exactness=False.
"""
from __future__ import annotations

import logging
import math
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from okamoto.errors import require
from okamoto.evaluator import check_a, check_k
from okamoto.hermite_q import thresholds
from okamoto.increments import delta_half_by_count, delta_nl
from okamoto.spectral import LOG3, THIRD, c0, entropy_h, holder_exponent, phi
from okamoto.ternary import (
    DigitSource,
    FiniteSource,
    FrequencyLimits,
    GeneratedSource,
    PeriodicSource,
    canonical,
    frequency_limits,
    ones_prefix,
)

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 100_000
EXACT_TOL = 1e-12
SLOPE_EPS = 0.1
CRITICAL_WIDTH = 10.0
A0_POLY_TOL = 1e-12
TAIL_TOL = 1e-14
EIDSWICK_C = math.log2(3.0) - 1.0


class Verdict(str, Enum):
    FINITE_ZERO = "FiniteZero"
    PLUS_INFINITY = "PlusInfinity"
    MINUS_INFINITY = "MinusInfinity"
    NOT_DIFFERENTIABLE = "NotDifferentiable"
    INCONCLUSIVE = "Inconclusive"


class Regime(str, Enum):
    EMPTY = "Empty"
    COUNTABLE_RATIONAL = "CountableRational"
    DIMENSION_ZERO = "DimensionZero"
    POSITIVE_DIMENSION = "PositiveDimension"


class PointClass(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    reason: str
    exactness: bool
    stats: Optional[FrequencyLimits] = None


class CharacteristicValues(BaseModel):
    """None marks a value that is undefined at this a."""
    model_config = ConfigDict(frozen=True)

    a: float
    phi: Optional[float]
    c0: Optional[float]
    gamma: Optional[float]
    d: Optional[float]
    d_tilde: Optional[float]


class SpecialConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    a0: float
    a_hat: float
    inv_golden: float
    thue_morse_terms: int


class LimsupValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    exact: bool


class SecantSlope(BaseModel):
    """3^n times the increment over the depth-n ternary interval containing x."""
    model_config = ConfigDict(frozen=True)

    n: int
    sign: int
    log_magnitude: float


def characteristic_values(a: float) -> CharacteristicValues:
    require(0.0 <= a < 1.0, "a_out_of_range", f"a must lie in [0, 1), got {a}")
    crit = phi(a)
    gap = 1.0 - 2.0 * a
    return CharacteristicValues(
        a=a,
        phi=crit,
        c0=c0(a),
        gamma=holder_exponent(a) if a > 0.0 else None,
        d=None if crit is None else entropy_h(crit),
        d_tilde=entropy_h(gap) if 0.0 <= gap <= 1.0 else None,
    )


def thue_morse(n: int) -> List[int]:
    """First n terms t_0, t_1, ... of the Thue-Morse sequence."""
    require(n >= 0, "n_out_of_range", f"n must be >= 0, got {n}")
    return [bin(j).count("1") % 2 for j in range(n)]


def _bisect(f, lo: float, hi: float, tol: float = 1e-16) -> float:
    f_lo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = f(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=None)
def special_constants() -> SpecialConstants:
    lo, hi = 0.5, 0.6
    a0 = _bisect(lambda t: 54.0 * t ** 3 - 27.0 * t ** 2 - 1.0, lo, hi)
    if abs(54.0 * a0 ** 3 - 27.0 * a0 ** 2 - 1.0) > A0_POLY_TOL:
        logger.warning(f"a0 residual above {A0_POLY_TOL:g}")
    # a^J / (1 - a) < TAIL_TOL across the whole bracket
    J = math.ceil(math.log(TAIL_TOL * (1.0 - hi)) / math.log(hi))
    t = np.array(thue_morse(J + 1)[1:], dtype=np.float64)
    powers = np.arange(1, J + 1, dtype=np.float64)
    a_hat = _bisect(lambda s: math.fsum(t * s ** powers) - 1.0, lo, hi)
    return SpecialConstants(a0=a0, a_hat=a_hat, inv_golden=2.0 / (1.0 + math.sqrt(5.0)), thue_morse_terms=J)


def univoque_regime(a: float) -> Regime:
    require(0.5 < a < 1.0, "a_out_of_range", f"regime labels need a in (1/2, 1), got {a}")
    consts = special_constants()
    if a >= consts.inv_golden:
        return Regime.EMPTY
    if abs(a - consts.a_hat) <= EXACT_TOL:
        return Regime.DIMENSION_ZERO
    if a > consts.a_hat:
        return Regime.COUNTABLE_RATIONAL
    return Regime.POSITIVE_DIMENSION


def boundary_point(k: int, a: float, delta: float, seed: int = 0) -> GeneratedSource:
    """A point where M_{k,a} has derivative 0 but M_{k+1,a} does not."""
    check_k(k, 1)
    require(0.0 < a < THIRD, "a_out_of_range", f"boundary_point needs a in (0, 1/3), got {a}")
    require(0.0 < delta < 1.0, "delta_out_of_range", f"delta must lie in (0, 1), got {delta}")
    return GeneratedSource(family="bn_ones", params={"k": k, "a": a, "delta": delta}, seed=seed)


def not_going_to_zero(a: float, limits: FrequencyLimits) -> bool:
    """Whether 3^n a^{n-l_n} (1-2a)^{l_n} >= 1 eventually, by the frequency of 1s."""
    if abs(a - THIRD) <= EXACT_TOL:
        return True
    crit = phi(a)
    if crit is None or a >= 0.5:
        return False
    if a < THIRD:
        return limits.lambda_lo > crit
    return limits.lambda_hi < crit


def _sign_power(power: int) -> Verdict:
    return Verdict.PLUS_INFINITY if power % 2 == 0 else Verdict.MINUS_INFINITY


# -- finite derivative ------------------------------------------------------

def _finite_half(k: int, x: DigitSource, horizon: int) -> PointClass:
    x = canonical(x)
    reason_yes = f"l_n = {k + 1} at some n with 3^n x not an integer"
    reason_no = f"no n with l_n = {k + 1} and 3^n x not an integer"
    if isinstance(x, FiniteSource):
        ones = [i + 1 for i, d in enumerate(x.prefix) if d == 1]
        ok = len(ones) > k and ones[k] < len(x.prefix)
        return PointClass(verdict=Verdict.FINITE_ZERO if ok else Verdict.NOT_DIFFERENTIABLE,
                          reason=reason_yes if ok else reason_no, exactness=True)
    if isinstance(x, PeriodicSource):
        ok = 1 in x.period or x.preperiod.count(1) > k
        return PointClass(verdict=Verdict.FINITE_ZERO if ok else Verdict.NOT_DIFFERENTIABLE,
                          reason=reason_yes if ok else reason_no, exactness=True)
    digits = x.digits(horizon)
    ones = np.flatnonzero(digits == 1)
    if ones.size > k:
        after = digits[ones[k] + 1:]
        if np.any(after != 0):
            return PointClass(verdict=Verdict.FINITE_ZERO, reason=reason_yes, exactness=False)
        return PointClass(verdict=Verdict.INCONCLUSIVE,
                          reason=f"{k + 1}th one found but only zeros follow it up to the horizon", exactness=False)
    return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason=reason_no + " up to the horizon", exactness=False)


def _drift_slope(k: int, a: float, x: DigitSource, horizon: int) -> float:
    """Least-squares slope in log n of r_n corrected by the k C0 log n term."""
    crit, c = phi(a), c0(a)
    ls = ones_prefix(x, horizon)
    n = np.unique(np.geomspace(max(2, horizon // 100), horizon, 200).astype(np.int64))
    r = ls[n] - n * crit
    s = r + k * abs(c) * np.log(n) if a < THIRD else r - k * c * np.log(n)
    slope, _ = np.polyfit(np.log(n), s, 1)
    return float(slope)


def classify_finite(k: int, a: float, x: DigitSource, horizon: int = DEFAULT_HORIZON) -> PointClass:
    """Whether M_{k,a} has a finite derivative (necessarily 0) at x."""
    check_k(k, 1)
    check_a(a)
    if a >= 2.0 / 3.0 or abs(a - THIRD) <= EXACT_TOL:
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE,
                          reason="nowhere differentiable for a >= 2/3 and for a = 1/3", exactness=True)
    if a == 0.5:
        return _finite_half(k, x, horizon)
    crit = phi(a)
    below = a < THIRD
    zero_reason = ("r_n + k|C0| log n -> -inf" if below else "r_n - k C0 log n -> +inf")
    if x.is_exact:
        limits = frequency_limits(x, a=a)
        lam = limits.lambda_lo
        if abs(lam - crit) <= EXACT_TOL:
            return PointClass(verdict=Verdict.INCONCLUSIVE, reason="frequency of 1s equals phi(a); linear drift vanishes",
                              exactness=True, stats=limits)
        zero = lam < crit if below else lam > crit
        return PointClass(
            verdict=Verdict.FINITE_ZERO if zero else Verdict.NOT_DIFFERENTIABLE,
            reason=f"{zero_reason} (frequency {lam:.6g} vs phi(a) = {crit:.6g})" if zero
            else f"frequency {lam:.6g} on the wrong side of phi(a) = {crit:.6g}",
            exactness=True,
            stats=limits,
        )
    slope = _drift_slope(k, a, x, horizon)
    logger.debug(f"drift slope {slope:.4f} for k={k}, a={a}")
    limits = frequency_limits(x, window=horizon, a=a)
    signed = -slope if below else slope
    if signed > SLOPE_EPS:
        return PointClass(verdict=Verdict.FINITE_ZERO, reason=f"{zero_reason} (log-slope {slope:.3f})",
                          exactness=False, stats=limits)
    if signed < -SLOPE_EPS:
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason=f"corrected drift diverges the wrong way (log-slope {slope:.3f})",
                          exactness=False, stats=limits)
    return PointClass(verdict=Verdict.INCONCLUSIVE, reason=f"log-slope {slope:.3f} too close to 0",
                      exactness=False, stats=limits)


# -- infinite derivative ----------------------------------------------------

def _critical_bands(k: int, a: float, limits: FrequencyLimits) -> PointClass:
    """Sign of the infinite derivative from the centered 1-count at frequency 1 - 2a."""
    exact = limits.exact
    t = thresholds(k, a).scaled
    lo, hi = limits.delta_lo, limits.delta_hi
    if any(abs(d - ti) <= EXACT_TOL for d in (lo, hi) for ti in t):
        return PointClass(verdict=Verdict.INCONCLUSIVE, reason="centered 1-count sits on a threshold",
                          exactness=exact, stats=limits)
    if hi < t[0]:
        return PointClass(verdict=_sign_power(k), reason="centered 1-count below the lowest threshold",
                          exactness=exact, stats=limits)
    if lo > t[-1]:
        return PointClass(verdict=Verdict.PLUS_INFINITY, reason="centered 1-count above the highest threshold",
                          exactness=exact, stats=limits)
    for i in range(1, k):
        if t[i - 1] < lo and hi < t[i]:
            return PointClass(verdict=_sign_power(k - i), reason=f"centered 1-count between thresholds {i} and {i + 1}",
                              exactness=exact, stats=limits)
    return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="centered 1-count straddles a threshold",
                      exactness=exact, stats=limits)


def _is_critical(limits: FrequencyLimits, gap: float, horizon: int) -> bool:
    width = EXACT_TOL if limits.exact else CRITICAL_WIDTH / math.sqrt(horizon)
    return abs(limits.lambda_lo - gap) <= width and abs(limits.lambda_hi - gap) <= width


def _infinite_below_half(k: int, a: float, x: DigitSource, horizon: int) -> PointClass:
    limits = frequency_limits(x, window=horizon, a=a)
    exact = limits.exact
    lo, hi = limits.lambda_lo, limits.lambda_hi
    gap, crit = 1.0 - 2.0 * a, phi(a)

    def verdict(v: Verdict, reason: str) -> PointClass:
        return PointClass(verdict=v, reason=reason, exactness=exact, stats=limits)

    if _is_critical(limits, gap, horizon):
        return _critical_bands(k, a, limits)
    if lo < gap < hi:
        return verdict(Verdict.NOT_DIFFERENTIABLE, "frequency of 1s oscillates across 1-2a")
    if abs(a - THIRD) <= EXACT_TOL:
        if hi < gap:
            return verdict(Verdict.PLUS_INFINITY, "upper frequency of 1s below 1/3")
        if lo > gap:
            return verdict(_sign_power(k), "lower frequency of 1s above 1/3")
    elif a < THIRD:
        if lo > gap:
            return verdict(_sign_power(k), "lower frequency of 1s above 1-2a")
        if lo < crit:
            return verdict(Verdict.NOT_DIFFERENTIABLE, "lower frequency of 1s below phi(a)")
        if crit < lo and hi < gap:
            return verdict(Verdict.PLUS_INFINITY, "frequency of 1s between phi(a) and 1-2a")
    else:
        if hi < gap:
            return verdict(Verdict.PLUS_INFINITY, "upper frequency of 1s below 1-2a")
        if hi > crit:
            return verdict(Verdict.NOT_DIFFERENTIABLE, "upper frequency of 1s above phi(a)")
        if gap < lo and hi < crit:
            return verdict(_sign_power(k), "frequency of 1s between 1-2a and phi(a)")
    return verdict(Verdict.INCONCLUSIVE, "frequency of 1s falls between the sufficient conditions")


def _run_lengths(digits: np.ndarray) -> np.ndarray:
    """r[i] = length of the constant run starting at index i (truncated at the end)."""
    size = digits.size
    change = np.flatnonzero(np.diff(digits) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [size]])
    i = np.arange(size)
    return ends[np.searchsorted(starts, i, side="right") - 1] - i


def _infinite_half(k: int, x: DigitSource, horizon: int) -> PointClass:
    if x.is_exact:
        if isinstance(x, PeriodicSource) and 1 in x.period:
            return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="infinitely many 1s", exactness=True)
        if isinstance(x, FiniteSource):
            l, bounded = x.prefix.count(1), False
        else:
            l, bounded = x.preperiod.count(1), len(set(x.period)) > 1
        if l > k:
            return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason=f"{l} ones exceed k = {k}", exactness=True)
        if not bounded:
            return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="an infinite run of 0s or 2s", exactness=True)
        power = k if l == k else l
        reason = "Eidswick's condition holds" if l == k else f"{l} ones and bounded runs of 0s and 2s"
        return PointClass(verdict=_sign_power(power), reason=reason, exactness=True)

    digits = x.digits(2 * horizon)
    half = horizon // 2
    if np.any(digits[half:horizon] == 1):
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="1s persist up to the horizon", exactness=False)
    l = int(np.count_nonzero(digits[:horizon] == 1))
    if l > k:
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason=f"{l} ones exceed k = {k}", exactness=False)
    n = np.arange(half, horizon)
    runs = _run_lengths(digits)[n].astype(np.float64)
    if l == k:
        if np.all(EIDSWICK_C * n - runs > 0.5 * EIDSWICK_C * n):
            return PointClass(verdict=_sign_power(k), reason="Eidswick's condition holds up to the horizon", exactness=False)
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="runs of 0s or 2s grow linearly", exactness=False)
    logs = np.log2(n) - math.log2(k - l)
    if np.all(runs <= logs - 2.0):
        return PointClass(verdict=_sign_power(l), reason="runs of 0s and 2s below log2 n - log2(k-l) - 2",
                          exactness=False)
    if np.any(runs > logs):
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="a run of 0s or 2s exceeds log2 n - log2(k-l)",
                          exactness=False)
    return PointClass(verdict=Verdict.INCONCLUSIVE, reason="run lengths fall in the gap between the run-length bounds",
                      exactness=False)


def _period_window_max(a: float, period: Tuple[int, ...], digit: int) -> float:
    size = len(period)
    hits = np.array([1.0 if d == digit else 0.0 for d in period])
    weights = a ** np.arange(1, size + 1, dtype=np.float64)
    best = max(float(np.dot(weights, np.roll(hits, -r))) for r in range(size))
    return best / (1.0 - a ** size)


def limsup_L(a: float, x: DigitSource, sign: str = "+", horizon: int = DEFAULT_HORIZON) -> LimsupValue:
    """limsup_n sum_j a^j [x_{n+j} = 2] for sign '+', with 0 in place of 2 for '-'."""
    require(0.5 < a < 1.0, "a_out_of_range", f"limsup_L needs a in (1/2, 1), got {a}")
    require(sign in ("+", "-"), "bad_sign", f"sign must be '+' or '-', got {sign!r}")
    digit = 2 if sign == "+" else 0
    if isinstance(x, FiniteSource):
        return LimsupValue(value=_period_window_max(a, (0,), digit), exact=True)
    if isinstance(x, PeriodicSource):
        require(1 not in x.period, "infinitely_many_ones", "L is undefined when 1s recur in the period")
        return LimsupValue(value=_period_window_max(a, x.period, digit), exact=True)
    span = min(horizon // 2, math.ceil(math.log(1e-16) / math.log(a)))
    digits = x.digits(horizon + span)
    require(not np.any(digits[horizon // 2:horizon] == 1), "infinitely_many_ones",
            "1s persist past half the horizon; L is undefined")
    hits = (digits == digit).astype(np.float64)
    weights = a ** np.arange(1, span + 1, dtype=np.float64)
    window = np.lib.stride_tricks.sliding_window_view(hits[horizon // 2:], span)
    return LimsupValue(value=float((window @ weights).max()), exact=False)


def _infinite_above_half(k: int, a: float, x: DigitSource, horizon: int) -> PointClass:
    exact = x.is_exact
    if isinstance(x, PeriodicSource) and 1 in x.period:
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="infinitely many 1s", exactness=True)
    if not exact and np.any(x.digits(horizon)[horizon // 2:] == 1):
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason="1s persist up to the horizon", exactness=False)
    plus = limsup_L(a, x, "+", horizon).value
    minus = limsup_L(a, x, "-", horizon).value
    l = int(np.count_nonzero(x.digits(horizon) == 1))
    detail = f"L+ = {plus:.6g}, L- = {minus:.6g}"
    if plus > 1.0 + EXACT_TOL or minus > 1.0 + EXACT_TOL:
        return PointClass(verdict=Verdict.NOT_DIFFERENTIABLE, reason=f"{detail}; one side exceeds 1", exactness=exact)
    if plus < 1.0 - EXACT_TOL and minus < 1.0 - EXACT_TOL:
        return PointClass(verdict=_sign_power(l), reason=f"{detail}; both below 1 with {l} ones", exactness=exact)
    return PointClass(verdict=Verdict.INCONCLUSIVE, reason=f"{detail}; boundary value 1", exactness=exact)


def classify_infinite(k: int, a: float, x: DigitSource, horizon: int = DEFAULT_HORIZON) -> PointClass:
    """Whether M_{k,a} has an infinite derivative at x, and its sign."""
    check_k(k, 1)
    check_a(a)
    if a == 0.5:
        return _infinite_half(k, x, horizon)
    if a < 0.5:
        return _infinite_below_half(k, a, x, horizon)
    return _infinite_above_half(k, a, x, horizon)


def classify(k: int, a: float, x: DigitSource, horizon: int = DEFAULT_HORIZON) -> PointClass:
    finite = classify_finite(k, a, x, horizon)
    if finite.verdict == Verdict.FINITE_ZERO:
        return finite
    return classify_infinite(k, a, x, horizon)


def secant_slopes(k: int, a: float, x: DigitSource, n_max: int) -> List[SecantSlope]:
    check_k(k)
    check_a(a)
    require(n_max >= 1, "n_out_of_range", f"n_max must be >= 1, got {n_max}")
    ls = ones_prefix(x, n_max)
    out = []
    for n in range(max(1, k if a == 0.5 else 1), n_max + 1):
        l = int(ls[n])
        if a == 0.5:
            value = delta_half_by_count(k, n, l)
            sign = int(np.sign(value))
            log_mag = n * LOG3 + math.log(abs(value)) if value else -math.inf
        else:
            inc = delta_nl(k, a, n, l)
            sign, log_mag = inc.sign, n * LOG3 + inc.magnitude_log
        out.append(SecantSlope(n=n, sign=sign, log_magnitude=log_mag))
    return out


def verdict_text(point: PointClass) -> str:
    prefix = "proved" if point.exactness else "consistent with"
    return f"{prefix} {point.verdict.value}: {point.reason}"

