"""Rule-generated digit streams.

Each family is a small state holder built from (params, seed). Free digits
come from per-block seeds derived with ``numpy.random.SeedSequence`` so any
block can be regenerated on its own; the Markov family is inherently
sequential and caches what it has produced.
"""
from __future__ import annotations

import logging
import math
import threading
from typing import Dict, Type

import numpy as np

from okamoto.errors import ValidationError, require
from okamoto.spectral import phi

logger = logging.getLogger(__name__)

BLOCK = 4096
FREE_STREAM = 1
RUN_STREAM = 0


def _block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stream, block)))


def free_digits(seed: int, start: int, stop: int, stream: int = FREE_STREAM) -> np.ndarray:
    """Pseudorandom digits in {0, 2} for 0-based positions [start, stop)."""
    if stop <= start:
        return np.zeros(0, dtype=np.int8)
    first, last = start // BLOCK, (stop - 1) // BLOCK
    chunks = [_block_rng(seed, stream, b).integers(0, 2, BLOCK, dtype=np.int8) * 2 for b in range(first, last + 1)]
    joined = np.concatenate(chunks)
    offset = first * BLOCK
    return joined[start - offset:stop - offset]


class DigitFamily:
    """Base for generated families. `params` is validated by the subclass."""

    name = "family"

    def __init__(self, params: Dict[str, float], seed: int):
        self.params = self.validate(params)
        self.seed = int(seed)

    @classmethod
    def validate(cls, params: Dict[str, float]) -> Dict[str, float]:
        return dict(params)

    def digits(self, n: int) -> np.ndarray:
        raise NotImplementedError("Subclasses must implement digits")


def _need(params: Dict[str, float], family: str, *names: str):
    for name in names:
        require(name in params, "missing_parameter", f"family '{family}' requires parameter '{name}'")


class BnOnes(DigitFamily):
    """1s exactly at b_n = floor(n/phi(a) - (k+delta)/log(3a) * log n), 0/2 elsewhere."""

    name = "bn_ones"

    @classmethod
    def validate(cls, params):
        _need(params, cls.name, "k", "a", "delta")
        k, a, delta = params["k"], params["a"], params["delta"]
        require(float(k).is_integer() and k >= 1, "k_out_of_range", f"bn_ones requires integer k >= 1, got {k}")
        require(0.0 < a < 1.0 / 3.0, "a_out_of_range", f"bn_ones requires a in (0, 1/3), got {a}")
        require(0.0 < delta < 1.0, "delta_out_of_range", f"bn_ones requires delta in (0, 1), got {delta}")
        return {"k": int(k), "a": float(a), "delta": float(delta)}

    def positions(self, n: int) -> np.ndarray:
        """Positions b_1 < b_2 < ... that are <= n (b_m >= m, so m <= n suffices)."""
        k, a, delta = self.params["k"], self.params["a"], self.params["delta"]
        m = np.arange(1, n + 1, dtype=np.float64)
        b = np.floor(m / phi(a) - (k + delta) / math.log(3.0 * a) * np.log(m)).astype(np.int64)
        return b[b <= n]

    def digits(self, n):
        out = free_digits(self.seed, 0, n)
        pos = self.positions(n)
        out[pos - 1] = 1
        return out


class BoundedRun(DigitFamily):
    """Digits in {0, 2}: position i = -1 (mod m) is 0, i = 0 (mod m) is 2.

    `fill` selects the free digits: -1 pseudorandom, 0 or 2 constant.
    """

    name = "bounded_run"

    @classmethod
    def validate(cls, params):
        _need(params, cls.name, "m")
        m = params["m"]
        fill = params.get("fill", -1)
        require(float(m).is_integer() and m >= 2, "m_out_of_range", f"bounded_run requires integer m >= 2, got {m}")
        require(fill in (-1, 0, 2), "fill_out_of_range", f"bounded_run fill must be -1, 0 or 2, got {fill}")
        return {"m": int(m), "fill": int(fill)}

    def digits(self, n):
        m, fill = self.params["m"], self.params["fill"]
        out = free_digits(self.seed, 0, n) if fill < 0 else np.full(n, fill, dtype=np.int8)
        i = np.arange(1, n + 1)
        out[i % m == m - 1] = 0
        out[i % m == 0] = 2
        return out


class Centered(DigitFamily):
    """1s placed so that l_n = round((1-2a)n - c*sqrt(n)), clipped to [0, n]."""

    name = "centered"

    @classmethod
    def validate(cls, params):
        _need(params, cls.name, "a", "c")
        a = params["a"]
        require(0.0 < a < 0.5, "a_out_of_range", f"centered requires a in (0, 1/2), got {a}")
        return {"a": float(a), "c": float(params["c"])}

    def ones_count(self, n: int) -> np.ndarray:
        a, c = self.params["a"], self.params["c"]
        idx = np.arange(1, n + 1, dtype=np.float64)
        target = np.rint((1.0 - 2.0 * a) * idx - c * np.sqrt(idx))
        target = np.minimum(np.maximum(target, 0.0), idx)
        return np.maximum.accumulate(target).astype(np.int64)

    def digits(self, n):
        out = free_digits(self.seed, 0, n)
        steps = np.diff(self.ones_count(n), prepend=0)
        out[steps > 0] = 1
        return out


class Markov(DigitFamily):
    """Stationary chain with rows [(1-r)/2, r, (1-r)/2], [(1-p)/2, p, (1-p)/2], [(1-r)/2, r, (1-r)/2].

    The 1-indicator alternates geometric runs: runs of 1s end with
    probability 1-p, runs of non-1s end with probability r. The 0/2 choice
    off the 1s is a fair coin.
    """

    name = "markov"
    RUNS_PER_BATCH = 2048

    def __init__(self, params, seed):
        super().__init__(params, seed)
        self._lock = threading.Lock()
        self._cache = np.zeros(0, dtype=np.int8)
        self._batch = 0
        self._next_is_one = None

    @staticmethod
    def transition_r(a: float, p: float) -> float:
        return (1.0 - 2.0 * a) * (1.0 - p) / (2.0 * a)

    @classmethod
    def validate(cls, params):
        _need(params, cls.name, "a", "p")
        a, p = float(params["a"]), float(params["p"])
        require(0.0 < a < 0.5, "a_out_of_range", f"markov requires a in (0, 1/2), got {a}")
        require(0.0 <= p < 1.0, "p_out_of_range", f"markov requires p in [0, 1), got {p}")
        r = cls.transition_r(a, p)
        require(0.0 < r <= 1.0, "markov_r_out_of_range", f"markov requires r=(1-2a)(1-p)/(2a) in (0, 1], got r={r}")
        return {"a": a, "p": p}

    def _extend(self):
        a, p = self.params["a"], self.params["p"]
        r = self.transition_r(a, p)
        rng = _block_rng(self.seed, RUN_STREAM, self._batch)
        if self._next_is_one is None:
            self._next_is_one = bool(rng.random() < 1.0 - 2.0 * a)
        half = self.RUNS_PER_BATCH // 2
        ones = rng.geometric(1.0 - p, half)
        others = rng.geometric(r, half)
        if self._next_is_one:
            lengths = np.column_stack([ones, others]).ravel()
            flags = np.tile(np.array([True, False]), half)
        else:
            lengths = np.column_stack([others, ones]).ravel()
            flags = np.tile(np.array([False, True]), half)
        indicator = np.repeat(flags, lengths)
        start = self._cache.size
        coins = free_digits(self.seed, start, start + indicator.size)
        block = np.where(indicator, 1, coins).astype(np.int8)
        self._cache = np.concatenate([self._cache, block])
        self._batch += 1

    def digits(self, n):
        with self._lock:
            while self._cache.size < n:
                self._extend()
            return self._cache[:n].copy()


_FAMILIES: Dict[str, Type[DigitFamily]] = {}


def register_family(name: str, cls: Type[DigitFamily]):
    _FAMILIES[name] = cls


def get_family(name: str) -> Type[DigitFamily]:
    if name not in _FAMILIES:
        raise ValidationError("unknown_family", f"unknown generated family '{name}'; known: {sorted(_FAMILIES)}")
    return _FAMILIES[name]


def list_families():
    return sorted(_FAMILIES)


register_family(BnOnes.name, BnOnes)
register_family(BoundedRun.name, BoundedRun)
register_family(Centered.name, Centered)
register_family(Markov.name, Markov)
