"""Closed-form characteristic values of the Okamoto family as functions of a."""
import math
from typing import Optional

THIRD = 1.0 / 3.0
LOG3 = math.log(3.0)
_EDGE_TOL = 1e-15


def _is(a: float, target: float) -> bool:
    return abs(a - target) <= _EDGE_TOL


def phi(a: float) -> Optional[float]:
    """Critical frequency of 1s, extended continuously to 0, 1/3 and 1/2.

    Defined on [0, 2/3]; returns None outside.
    """
    if a < 0.0 or a > 2.0 / 3.0 + _EDGE_TOL:
        return None
    if _is(a, 0.0):
        return 1.0
    if _is(a, THIRD):
        return THIRD
    if _is(a, 0.5):
        return 0.0
    return math.log(3.0 * a) / (math.log(a) - math.log(abs(1.0 - 2.0 * a)))


def c0(a: float) -> Optional[float]:
    """1/(log a - log|1-2a|); None where undefined (a in {1/3, 1/2} or outside (0,1))."""
    if a <= 0.0 or a >= 1.0 or _is(a, THIRD) or _is(a, 0.5):
        return None
    return 1.0 / (math.log(a) - math.log(abs(1.0 - 2.0 * a)))


def xlogx(p: float) -> float:
    return 0.0 if p <= 0.0 else p * math.log(p)


def entropy_h(p: float) -> float:
    """Dimension of the set of points whose ternary 1-frequency is p."""
    return (-xlogx(p) - xlogx(1.0 - p) + (1.0 - p) * math.log(2.0)) / LOG3


def holder_exponent(a: float) -> float:
    return -math.log(max(a, abs(1.0 - 2.0 * a))) / LOG3
