"""Ternary digit sources naming points of [0, 1].

Text forms: ``F:1020`` (terminating), ``P:10|02`` (preperiod|period),
``G:markov:a=0.333,p=0.111,seed=7`` (generated) and ``R:p/q`` (rational,
parsed into one of the first two).
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, Dict, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator

from okamoto.errors import ValidationError, require
from okamoto.ternary.generated_sources import get_family

Digits = Tuple[int, ...]


def _check_digits(value: Digits) -> Digits:
    value = tuple(int(d) for d in value)
    for d in value:
        if d not in (0, 1, 2):
            raise ValueError(f"ternary digit must be 0, 1 or 2, got {d}")
    return value


class DigitSource(BaseModel):
    model_config = ConfigDict(frozen=True)

    @property
    def is_exact(self) -> bool:
        return True

    def digits(self, n: int) -> np.ndarray:
        """First n digits (positions 1..n) as an int8 array."""
        raise NotImplementedError

    def digit_at(self, i: int) -> int:
        require(i >= 1, "index_out_of_range", f"digit positions start at 1, got {i}")
        return int(self.digits(i)[i - 1])

    def shift(self, m: int = 1) -> "DigitSource":
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError


class FiniteSource(DigitSource):
    """Terminating expansion 0.d_1...d_L000..., stored without trailing zeros."""

    prefix: Digits = ()

    @field_validator("prefix")
    @classmethod
    def _strip(cls, value):
        value = _check_digits(value)
        end = len(value)
        while end and value[end - 1] == 0:
            end -= 1
        return value[:end]

    def digits(self, n):
        out = np.zeros(n, dtype=np.int8)
        take = min(n, len(self.prefix))
        out[:take] = self.prefix[:take]
        return out

    def shift(self, m=1):
        return FiniteSource(prefix=self.prefix[m:])

    def to_text(self):
        return "F:" + "".join(map(str, self.prefix))


class PeriodicSource(DigitSource):
    preperiod: Digits = ()
    period: Digits

    @field_validator("preperiod")
    @classmethod
    def _pre(cls, value):
        return _check_digits(value)

    @field_validator("period")
    @classmethod
    def _per(cls, value):
        value = _check_digits(value)
        if not value:
            raise ValueError("period must be nonempty")
        return value

    def digits(self, n):
        pre = np.array(self.preperiod[:n], dtype=np.int8)
        rest = max(0, n - len(self.preperiod))
        tail = np.resize(np.array(self.period, dtype=np.int8), rest)
        return np.concatenate([pre, tail]).astype(np.int8)

    def shift(self, m=1):
        if m <= len(self.preperiod):
            return PeriodicSource(preperiod=self.preperiod[m:], period=self.period)
        turn = (m - len(self.preperiod)) % len(self.period)
        return PeriodicSource(preperiod=(), period=self.period[turn:] + self.period[:turn])

    def to_text(self):
        return "P:" + "".join(map(str, self.preperiod)) + "|" + "".join(map(str, self.period))


class GeneratedSource(DigitSource):
    family: str
    params: Dict[str, float] = {}
    seed: int = 0
    offset: int = 0
    flip: bool = False

    _stream: Any = PrivateAttr(default=None)

    def model_post_init(self, __context):
        require(self.offset >= 0, "offset_out_of_range", f"offset must be >= 0, got {self.offset}")
        self._stream = get_family(self.family)(self.params, self.seed)

    @property
    def is_exact(self):
        return False

    @property
    def stream(self):
        return self._stream

    def digits(self, n):
        out = self._stream.digits(self.offset + n)[self.offset:]
        if self.flip:
            out = np.where(out == 1, 1, 2 - out).astype(np.int8)
        return out

    def shift(self, m=1):
        return self.model_copy(update={"offset": self.offset + m})

    def to_text(self):
        items = [f"{key}={_fmt(value)}" for key, value in sorted(self.params.items())]
        items.append(f"seed={self.seed}")
        if self.offset:
            items.append(f"offset={self.offset}")
        if self.flip:
            items.append("flip=1")
        return f"G:{self.family}:" + ",".join(items)


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


ExactSource = Union[FiniteSource, PeriodicSource]


def from_rational(p: int, q: int) -> ExactSource:
    """Ternary expansion of p/q; ternary rationals terminate, 1 is 0.(2)."""
    require(q != 0, "zero_denominator", "q must be nonzero")
    require(q >= 1, "negative_denominator", f"q must be >= 1, got {q}")
    require(0 <= p, "p_negative", f"p must be >= 0, got {p}")
    require(p <= q, "p_greater_than_q", f"p must be <= q, got {p}/{q}")
    value = Fraction(p, q)
    if value == 1:
        return PeriodicSource(preperiod=(), period=(2,))
    num, den = value.numerator, value.denominator
    e, rest = 0, den
    while rest % 3 == 0:
        rest //= 3
        e += 1
    if rest == 1:
        digits = []
        for _ in range(e):
            num *= 3
            digits.append(num // den)
            num %= den
        return FiniteSource(prefix=tuple(digits))
    digits, seen = [], {}
    rem = num
    while rem not in seen:
        seen[rem] = len(digits)
        rem *= 3
        digits.append(rem // den)
        rem %= den
    start = seen[rem]
    return PeriodicSource(preperiod=tuple(digits[:start]), period=tuple(digits[start:]))


def to_value(x: DigitSource) -> Fraction:
    if isinstance(x, FiniteSource):
        return sum((Fraction(d, 3 ** (i + 1)) for i, d in enumerate(x.prefix)), Fraction(0))
    if isinstance(x, PeriodicSource):
        head = sum((Fraction(d, 3 ** (i + 1)) for i, d in enumerate(x.preperiod)), Fraction(0))
        length = len(x.period)
        block = int("".join(map(str, x.period)), 3)
        return head + Fraction(block, (3 ** length - 1) * 3 ** len(x.preperiod))
    raise ValidationError("not_exact", "only terminating and eventually periodic sources have an exact value")


def approx_value(x: DigitSource, n: int = 40) -> float:
    d = x.digits(n).astype(np.float64)
    return float(math.fsum(d * 3.0 ** -np.arange(1, n + 1)))


def canonical(x: DigitSource) -> DigitSource:
    """Minimal exact form (terminating where possible); generated sources unchanged."""
    if not x.is_exact:
        return x
    value = to_value(x)
    return from_rational(value.numerator, value.denominator)


def complement(x: DigitSource) -> DigitSource:
    """The point 1 - x."""
    if x.is_exact:
        value = 1 - to_value(x)
        return from_rational(value.numerator, value.denominator)
    return x.model_copy(update={"flip": not x.flip})


def make_generated(family: str, params: Dict[str, float], seed: int = 0) -> GeneratedSource:
    get_family(family).validate(params)
    return GeneratedSource(family=family, params=dict(params), seed=int(seed))


def _parse_digits(text: str, spec: str) -> Digits:
    require(all(ch in "012" for ch in text), "bad_x_spec", f"digits must be 0, 1 or 2 in '{spec}'")
    return tuple(int(ch) for ch in text)


def parse_source(spec: str) -> DigitSource:
    """Parse an x-spec (F:, P:, G:, R:). Exact sources come back canonical."""
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    if kind == "F":
        return canonical(FiniteSource(prefix=_parse_digits(body, spec)))
    if kind == "P":
        require("|" in body, "bad_x_spec", f"periodic spec needs 'pre|period', got '{spec}'")
        pre, period = body.split("|", 1)
        require(len(period) > 0, "bad_x_spec", f"empty period in '{spec}'")
        return canonical(PeriodicSource(preperiod=_parse_digits(pre, spec), period=_parse_digits(period, spec)))
    if kind == "R":
        num, slash, den = body.partition("/")
        require(slash == "/", "bad_x_spec", f"rational spec needs 'p/q', got '{spec}'")
        try:
            return from_rational(int(num), int(den))
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError("bad_x_spec", f"rational spec needs integers, got '{spec}'")
    if kind == "G":
        family, _, rest = body.partition(":")
        params, seed, offset, flip = {}, 0, 0, False
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            require(eq == "=", "bad_x_spec", f"generated parameters need key=value, got '{item}'")
            try:
                number = float(value)
            except ValueError:
                raise ValidationError("bad_x_spec", f"parameter '{key}' is not a number in '{spec}'")
            if key == "seed":
                seed = int(number)
            elif key == "offset":
                offset = int(number)
            elif key == "flip":
                flip = bool(number)
            else:
                params[key] = number
        get_family(family).validate(params)
        return GeneratedSource(family=family, params=params, seed=seed, offset=offset, flip=flip)
    raise ValidationError("bad_x_spec", f"unknown x-spec kind in '{spec}'; use F:, P:, G: or R:")
