from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from okamoto.errors import require
from okamoto.spectral import phi
from okamoto.ternary.sources import DigitSource, FiniteSource, PeriodicSource

logger = logging.getLogger(__name__)

RUN_SCAN_CAP = 1 << 22
_DRIFT_TOL = 1e-12


class DigitStats(BaseModel):
    """Digit statistics at index n. Run lengths are math.inf when a run never ends."""
    model_config = ConfigDict(frozen=True)

    n: int
    l_n: int
    rho_n_0: float
    rho_n_2: float
    r_n: Optional[float]
    centered: float


class FrequencyLimits(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_lo: float
    lambda_hi: float
    delta_lo: Optional[float] = None
    delta_hi: Optional[float] = None
    exact: bool


def ones_count(x: DigitSource, n: int) -> int:
    return int(np.count_nonzero(x.digits(n) == 1))


def ones_prefix(x: DigitSource, n: int) -> np.ndarray:
    """Array L with L[i] = l_i(x) for i = 0..n."""
    return np.concatenate([[0], np.cumsum(x.digits(n) == 1)]).astype(np.int64)


def ones_in_base3(j: np.ndarray, n: int) -> np.ndarray:
    """l(j): number of digit 1 among the n base-3 digits of each j."""
    j = np.asarray(j, dtype=np.int64).copy()
    count = np.zeros(j.shape, dtype=np.int64)
    for _ in range(n):
        count += (j % 3 == 1)
        j //= 3
    return count


def index_digits(j: np.ndarray, n: int) -> np.ndarray:
    """Base-3 digits of each j as columns, most significant first: shape (len(j), n)."""
    j = np.asarray(j, dtype=np.int64)
    powers = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((j[:, None] // powers[None, :]) % 3).astype(np.int8)


def _never_ends(x: DigitSource, start: int, d: int) -> Optional[bool]:
    """Whether the run of d starting at position `start` is infinite, for exact sources."""
    if isinstance(x, FiniteSource):
        return d == 0 and all(v == 0 for v in x.prefix[start - 1:])
    if isinstance(x, PeriodicSource):
        if set(x.period) != {d}:
            return False
        return all(v == d for v in x.preperiod[start - 1:])
    return None


def run_length(x: DigitSource, start: int, d: int) -> float:
    """Length of the run of digit d beginning at position `start` (1-based)."""
    if _never_ends(x, start, d):
        return math.inf
    chunk = 256
    length = 0
    while True:
        block = x.digits(start - 1 + length + chunk)[start - 1 + length:]
        mismatch = np.flatnonzero(block != d)
        if mismatch.size:
            return float(length + mismatch[0])
        length += chunk
        if length >= RUN_SCAN_CAP:
            logger.warning(f"run of {d}s at position {start} exceeds scan cap {RUN_SCAN_CAP}")
            return float(length)
        chunk *= 2


def stats_at(x: DigitSource, n: int, a: float) -> DigitStats:
    require(n >= 1, "n_out_of_range", f"n must be >= 1, got {n}")
    require(0.0 < a < 1.0, "a_out_of_range", f"a must lie in (0, 1), got {a}")
    l_n = ones_count(x, n)
    crit = phi(a)
    return DigitStats(
        n=n,
        l_n=l_n,
        rho_n_0=run_length(x, n + 1, 0),
        rho_n_2=run_length(x, n + 1, 2),
        r_n=None if crit is None else l_n - n * crit,
        centered=((1.0 - 2.0 * a) * n - l_n) / math.sqrt(n),
    )


def _drift_limit(slope: float) -> float:
    if abs(slope) <= _DRIFT_TOL:
        return 0.0
    return math.inf if slope > 0 else -math.inf


def frequency_limits(x: DigitSource, window: int = 100_000, a: Optional[float] = None) -> FrequencyLimits:
    """Limits of l_n/n and, given a, of ((1-2a)n - l_n)/sqrt(n).

    Terminating and eventually periodic sources are handled symbolically.
    Generated sources use min/max over n in [window/2, window].
    """
    if isinstance(x, (FiniteSource, PeriodicSource)):
        freq = 0.0 if isinstance(x, FiniteSource) else x.period.count(1) / len(x.period)
        delta = None if a is None else _drift_limit((1.0 - 2.0 * a) - freq)
        return FrequencyLimits(lambda_lo=freq, lambda_hi=freq, delta_lo=delta, delta_hi=delta, exact=True)
    require(window >= 1, "window_out_of_range", f"window must be >= 1, got {window}")
    ls = ones_prefix(x, window)
    n = np.arange(max(1, window // 2), window + 1)
    ratio = ls[n] / n
    delta_lo = delta_hi = None
    if a is not None:
        centered = ((1.0 - 2.0 * a) * n - ls[n]) / np.sqrt(n)
        delta_lo, delta_hi = float(centered.min()), float(centered.max())
    return FrequencyLimits(
        lambda_lo=float(ratio.min()),
        lambda_hi=float(ratio.max()),
        delta_lo=delta_lo,
        delta_hi=delta_hi,
        exact=False,
    )
