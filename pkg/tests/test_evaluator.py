import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from okamoto.config import MAX_GRID_DEPTH
from okamoto.errors import ToleranceError, ValidationError
from okamoto.evaluator import (
    eval_via_FE,
    evaluate,
    exact_at_rational,
    grid_values,
    leibniz_derivative,
    okamoto_F,
    partial_M,
    series_weights,
    tail_bound,
    terms_needed,
)
from okamoto.spectral import holder_exponent
from okamoto.ternary import approx_value, from_rational, parse_source

rationals = st.integers(min_value=1, max_value=1000).flatmap(
    lambda q: st.tuples(st.integers(min_value=0, max_value=q), st.just(q)))


def _richardson(f, a, h=1e-3):
    return (8.0 * (f(a + h) - f(a - h)) - (f(a + 2 * h) - f(a - 2 * h))) / (12.0 * h)


@given(rationals)
@settings(max_examples=200)
def test_identity_at_one_third(pq):
    p, q = pq
    x = from_rational(p, q)
    assert abs(okamoto_F(1 / 3, x).value - p / q) <= 1e-10


@pytest.mark.parametrize("spec, value", [
    ("R:1/4", 1 / 3),
    ("R:3/4", 2 / 3),
    ("F:1", 0.5),
    ("R:1/1", 1.0),
    ("F:", 0.0),
])
def test_cantor_function_at_one_half(spec, value):
    assert okamoto_F(0.5, parse_source(spec)).value == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("a", [0.2, 0.3, 0.4, 0.6, 0.7])
@pytest.mark.parametrize("spec", ["R:1/4", "R:2/7", "R:5/13", "F:1021", "R:9/10"])
def test_first_derivative_matches_difference_quotient(a, spec):
    x = parse_source(spec)
    fd = _richardson(lambda t: okamoto_F(t, x, tol=1e-14).value, a)
    assert partial_M(1, a, x, tol=1e-13).value == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("a", [0.25, 0.65])
def test_higher_derivatives_match_difference_quotient(k, a):
    x = parse_source("R:3/11")
    fd = _richardson(lambda t: partial_M(k - 1, t, x, tol=1e-14).value, a)
    assert partial_M(k, a, x, tol=1e-13).value == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivatives_vanish_at_endpoints(k):
    for spec in ("F:", "R:1/1"):
        result = evaluate(k, 0.3, parse_source(spec))
        assert abs(result.value) <= result.err_bound + 1e-12


def test_result_carries_bound():
    x = parse_source("R:2/7")
    result = evaluate(1, 0.3, x, tol=1e-9)
    assert not result.exact
    assert result.err_bound <= 1e-9
    assert result.terms == terms_needed(1, 0.3, 1e-9)
    finite = evaluate(1, 0.3, parse_source("F:1021"))
    assert finite.exact and finite.err_bound == 0.0 and finite.terms == 4


def test_tail_bound_geometric_for_k0():
    assert tail_bound(0, 0.3, 10) == pytest.approx(0.4 ** 10 / 0.6, rel=1e-12)
    assert tail_bound(0, 0.8, 5) == pytest.approx(0.8 ** 5 / 0.2, rel=1e-12)


@pytest.mark.parametrize("k", [0, 1, 3])
@pytest.mark.parametrize("a", [0.1, 0.45, 0.5, 0.9])
def test_tail_bound_dominates_terms(k, a):
    terms = [leibniz_derivative(k, a, n, 0) - leibniz_derivative(k, a, n + 1, 0) for n in range(20, 200)]
    assert math.fsum(abs(t) for t in terms) <= tail_bound(k, a, 20) * (1 + 1e-9)


def test_terms_needed_raises_when_capped():
    with pytest.raises(ToleranceError) as err:
        terms_needed(3, 0.49, 1e-15, max_terms=10)
    assert err.value.terms == 10
    assert err.value.best_bound > 1e-15


def test_series_weights():
    w = series_weights(0.3)
    assert (w.q0, w.q1, w.q2, w.b) == pytest.approx((0.0, 0.3, 0.7, 0.4))
    assert w.gamma == pytest.approx(-math.log(0.4) / math.log(3.0))


@pytest.mark.parametrize("a", [0.0, 1.0, -0.5, 1.5])
def test_rejects_a_out_of_range(a):
    with pytest.raises(ValidationError) as err:
        evaluate(0, a, parse_source("F:1"))
    assert err.value.code == "a_out_of_range"


def test_exact_at_rational_endpoints():
    assert exact_at_rational(0, 0.7, 3, 27) == 1.0
    assert exact_at_rational(2, 0.7, 3, 27) == 0.0
    assert exact_at_rational(0, 1 / 3, 3, 11) == pytest.approx(11 / 27, abs=1e-15)
    with pytest.raises(ValidationError):
        exact_at_rational(0, 0.3, 2, 10)


@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
def test_grid_matches_pointwise(k, a):
    grid = grid_values(k, a, 4)
    assert grid.shape == (82,)
    for j in (0, 1, 13, 40, 57, 80, 81):
        assert grid[j] == pytest.approx(exact_at_rational(k, a, 4, j), abs=1e-13)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("a", [0.2, 1 / 3, 0.6, 5 / 6])
def test_graph_symmetry(k, a):
    grid = grid_values(k, a, 6)
    mirror = 1.0 - grid[::-1] if k == 0 else -grid[::-1]
    scale = max(1.0, float(np.abs(grid).max()))
    assert np.max(np.abs(grid - mirror)) <= 1e-10 * scale


def test_grid_budget():
    with pytest.raises(ValidationError) as err:
        grid_values(0, 0.3, MAX_GRID_DEPTH + 1)
    assert err.value.code == "budget_exceeded"


@pytest.mark.parametrize("k", [0, 1, 2])
def test_functional_equation_unrolling(k):
    finite = parse_source("F:10212")
    assert eval_via_FE(k, 0.35, finite, 5).value == pytest.approx(evaluate(k, 0.35, finite).value, abs=1e-12)
    x = parse_source("R:5/13")
    fe = eval_via_FE(k, 0.35, x, 40)
    series = evaluate(k, 0.35, x, tol=1e-13)
    assert abs(fe.value - series.value) <= fe.err_bound + series.err_bound + 1e-12


def _leibniz_direct(k, a, m, l):
    b = 1.0 - 2.0 * a
    return math.fsum(
        math.comb(k, i) * (-2.0) ** (k - i) * math.perm(m, i) * math.perm(l, k - i) * a ** (m - i) * b ** (l - k + i)
        for i in range(k + 1) if i <= m and k - i <= l
    )


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("m, l", [(5, 0), (7, 3), (2, 6), (12, 4)])
def test_near_half_log_path_matches_direct_sum(k, m, l):
    a = 0.5 - 4e-4
    expected = _leibniz_direct(k, a, m, l)
    assert leibniz_derivative(k, a, m, l) == pytest.approx(expected, rel=1e-9, abs=1e-300)
    assert approx_value(parse_source("R:2/7")) == pytest.approx(2 / 7)


_rng = np.random.default_rng(2024)
ORACLE_A = [float(a) for a in _rng.uniform(0.05, 0.95, 40) if abs(a - 0.5) > 1e-3][:20]
ORACLE_X = [(int(p), int(q)) for q in _rng.integers(2, 61, 50) for p in _rng.integers(0, q + 1, 1)]


@pytest.mark.parametrize("a", ORACLE_A)
def test_derivatives_match_richardson_oracle(a):
    h = 1e-3 * min(a, 1.0 - a, abs(1.0 - 2.0 * a))
    for p, q in ORACLE_X:
        x = from_rational(p, q)
        for k in (1, 2, 3):
            fd = _richardson(lambda t: evaluate(k - 1, t, x, tol=1e-14).value, a, h)
            pm = partial_M(k, a, x, tol=1e-13).value
            assert abs(pm - fd) <= 1e-6 * max(1.0, abs(pm)), (k, p, q)


def test_oracle_grid_size():
    assert len(ORACLE_A) == 20 and len(ORACLE_X) == 50


@given(
    st.floats(min_value=0.05, max_value=0.95),
    st.integers(min_value=0, max_value=3 ** 7),
    st.integers(min_value=0, max_value=3 ** 7),
)
def test_holder_continuity(a, i, j):
    gamma = holder_exponent(a)
    gap = abs(i - j) / 3 ** 7
    diff = abs(exact_at_rational(0, a, 7, i) - exact_at_rational(0, a, 7, j))
    assert diff <= 2.0 * 3.0 ** gamma * gap ** gamma * (1 + 1e-9) + 1e-12
