import math

import numpy as np
import pytest
from numpy.polynomial import hermite_e

from okamoto.errors import RootBracketError, ValidationError
from okamoto.hermite_q import _refine, q_poly, q_roots, thresholds


def _hermite_coeffs(k):
    coeffs = [0] * (k + 1)
    for m in range(k // 2 + 1):
        coeffs[k - 2 * m] = (-1) ** m * math.factorial(k) // (math.factorial(m) * math.factorial(k - 2 * m) * 2 ** m)
    return tuple(coeffs)


def test_low_order_polynomials():
    assert q_poly(1).coeffs == (0, 1)
    assert q_poly(2).coeffs == (-1, 0, 1)
    assert q_poly(3).coeffs == (0, -3, 0, 1)
    assert q_poly(4).coeffs == (3, 0, -6, 0, 1)


@pytest.mark.parametrize("k", range(1, 9))
def test_coefficients_match_closed_form(k):
    assert q_poly(k).coeffs == _hermite_coeffs(k)


def test_to_text():
    assert q_poly(1).to_text() == "t"
    assert q_poly(2).to_text() == "t^2-1"
    assert q_poly(4).to_text() == "t^4-6t^2+3"


def test_horner_evaluation():
    q = q_poly(4)
    assert q(2.0) == pytest.approx(16 - 24 + 3)
    assert q.derivative() == (0, -12, 0, 4)
    assert q.derivative_at(1.0) == pytest.approx(-8.0)


def test_known_roots():
    assert q_roots(2) == pytest.approx([-1.0, 1.0], abs=1e-12)
    assert q_roots(3) == pytest.approx([-math.sqrt(3), 0.0, math.sqrt(3)], abs=1e-12)
    s = math.sqrt(6)
    expected = [-math.sqrt(3 + s), -math.sqrt(3 - s), math.sqrt(3 - s), math.sqrt(3 + s)]
    assert q_roots(4) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("k", range(2, 21))
def test_roots_interlace_and_are_symmetric(k):
    roots = q_roots(k)
    inner = q_roots(k - 1)
    assert len(roots) == k
    assert all(r0 < r1 for r0, r1 in zip(roots, roots[1:]))
    for i, r in enumerate(inner):
        assert roots[i] < r < roots[i + 1]
    assert np.allclose(roots, [-r for r in reversed(roots)], atol=1e-10)


@pytest.mark.parametrize("k", [5, 10, 15, 20])
def test_roots_agree_with_numpy(k):
    reference = np.sort(hermite_e.hermeroots([0] * k + [1]).real)
    assert np.allclose(q_roots(k), reference, atol=1e-7)


def test_thresholds_scaling():
    t = thresholds(2, 0.25)
    assert t.scaled == pytest.approx((-0.5, 0.5), abs=1e-12)
    t = thresholds(1, 0.1)
    assert t.scaled == (0.0,)


@pytest.mark.parametrize("a", [0.0, 0.5, 0.7])
def test_thresholds_need_a_below_half(a):
    with pytest.raises(ValidationError) as err:
        thresholds(2, a)
    assert err.value.code == "a_out_of_range"


def test_rejects_k_below_one():
    with pytest.raises(ValidationError) as err:
        q_poly(0)
    assert err.value.code == "k_out_of_range"


def test_lost_bracket_raises():
    with pytest.raises(RootBracketError):
        _refine(q_poly(2), 2.0, 3.0)
