from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from okamoto.errors import ValidationError
from okamoto.ternary import (
    FiniteSource,
    GeneratedSource,
    PeriodicSource,
    canonical,
    complement,
    frequency_limits,
    from_rational,
    index_digits,
    make_generated,
    ones_count,
    ones_in_base3,
    ones_prefix,
    parse_source,
    run_length,
    stats_at,
    to_value,
)
from okamoto.ternary.generated_sources import Centered, free_digits, get_family, list_families


@pytest.mark.parametrize("p, q, expected", [
    (1, 3, FiniteSource(prefix=(1,))),
    (1, 2, PeriodicSource(preperiod=(), period=(1,))),
    (1, 4, PeriodicSource(preperiod=(), period=(0, 2))),
    (1, 1, PeriodicSource(preperiod=(), period=(2,))),
    (0, 5, FiniteSource(prefix=())),
    (11, 27, FiniteSource(prefix=(1, 0, 2))),
])
def test_from_rational_known_expansions(p, q, expected):
    assert from_rational(p, q) == expected


@pytest.mark.parametrize("p, q, code", [
    (1, 0, "zero_denominator"),
    (3, 2, "p_greater_than_q"),
    (-1, 2, "p_negative"),
])
def test_from_rational_rejects(p, q, code):
    with pytest.raises(ValidationError) as err:
        from_rational(p, q)
    assert err.value.code == code


@given(st.integers(min_value=1, max_value=500).flatmap(
    lambda q: st.tuples(st.integers(min_value=0, max_value=q), st.just(q))))
@settings(max_examples=200)
def test_from_rational_value_roundtrip(pq):
    p, q = pq
    assert to_value(from_rational(p, q)) == Fraction(p, q)


@pytest.mark.parametrize("spec, text", [
    ("F:1020", "F:102"),
    ("P:0|22", "F:1"),
    ("P:|2", "P:|2"),
    ("R:1/4", "P:|02"),
    ("P:10|02", "P:10|02"),
])
def test_parse_source_canonical_text(spec, text):
    assert parse_source(spec).to_text() == text


@pytest.mark.parametrize("spec", ["X:12", "F:13", "P:12", "P:1|", "R:1/x", "G:nope:seed=1", "G:markov:a"])
def test_parse_source_rejects(spec):
    with pytest.raises(ValidationError):
        parse_source(spec)


def test_generated_text_roundtrip():
    x = make_generated("markov", {"a": 1 / 3, "p": 1 / 9}, seed=7).shift(5)
    y = parse_source(x.to_text())
    assert isinstance(y, GeneratedSource)
    assert np.array_equal(x.digits(300), y.digits(300))


def test_complement_of_exact_and_generated():
    assert complement(parse_source("R:1/4")).to_text() == "P:|20"
    assert complement(parse_source("F:1")) == from_rational(2, 3)
    x = make_generated("bounded_run", {"m": 3}, seed=2)
    flipped = complement(x).digits(60)
    assert np.array_equal(flipped, np.where(x.digits(60) == 1, 1, 2 - x.digits(60)))


@given(st.integers(min_value=1, max_value=300).flatmap(
    lambda q: st.tuples(st.integers(min_value=0, max_value=q), st.just(q))),
    st.integers(min_value=0, max_value=40), st.integers(min_value=1, max_value=40))
@settings(max_examples=100)
def test_shift_and_count_additivity(pq, m, n):
    x = from_rational(*pq)
    assert np.array_equal(x.shift(m).digits(n), x.digits(n + m)[m:])
    assert ones_count(x, n + m) == ones_count(x, m) + ones_count(x.shift(m), n)


def test_generated_shift_matches_digits():
    x = make_generated("centered", {"a": 0.2, "c": 1.0}, seed=3)
    assert np.array_equal(x.shift(17).digits(100), x.digits(117)[17:])


def test_canonical_leaves_generated_alone():
    x = make_generated("bn_ones", {"k": 1, "a": 0.2, "delta": 0.5})
    assert canonical(x) is x


def test_generated_digits_deterministic():
    a = make_generated("markov", {"a": 0.3, "p": 0.2}, seed=11).digits(5000)
    b = make_generated("markov", {"a": 0.3, "p": 0.2}, seed=11).digits(5000)
    c = make_generated("markov", {"a": 0.3, "p": 0.2}, seed=12).digits(5000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert set(np.unique(a)) <= {0, 1, 2}


def test_free_digits_block_independent():
    whole = free_digits(5, 0, 10000)
    assert np.array_equal(free_digits(5, 4090, 4200), whole[4090:4200])
    assert set(np.unique(whole)) == {0, 2}


def test_bounded_run_pattern():
    x = make_generated("bounded_run", {"m": 4, "fill": 2}, seed=0)
    assert x.digits(8).tolist() == [2, 2, 0, 2, 2, 2, 0, 2]


def test_centered_family_hits_target_counts():
    fam = Centered({"a": 0.2, "c": 1.5}, seed=4)
    n = 2000
    ls = ones_prefix(make_generated("centered", {"a": 0.2, "c": 1.5}, seed=4), n)
    assert np.array_equal(ls[1:], fam.ones_count(n))


def test_family_registry():
    assert list_families() == ["bn_ones", "bounded_run", "centered", "markov"]
    with pytest.raises(ValidationError) as err:
        get_family("takagi")
    assert err.value.code == "unknown_family"


def test_markov_family_rejects_r_above_one():
    with pytest.raises(ValueError):
        make_generated("markov", {"a": 0.1, "p": 0.0})


def test_ones_in_base3_and_index_digits():
    j = np.array([0, 1, 4, 13, 26])
    assert ones_in_base3(j, 3).tolist() == [0, 1, 2, 3, 0]
    assert index_digits(np.array([5]), 3).tolist() == [[0, 1, 2]]


def test_run_length_exact_sources():
    assert run_length(parse_source("F:1"), 2, 0) == float("inf")
    assert run_length(parse_source("R:1/4"), 1, 0) == 1.0
    assert run_length(parse_source("P:|2"), 3, 2) == float("inf")
    assert run_length(parse_source("P:0001|2"), 1, 0) == 3.0


def test_stats_at():
    s = stats_at(parse_source("P:|1"), 10, 0.2)
    assert s.l_n == 10
    assert s.rho_n_0 == 0.0
    assert s.r_n == pytest.approx(10 - 10 * 0.46497, abs=1e-3)
    assert s.centered == pytest.approx((0.6 * 10 - 10) / np.sqrt(10))


def test_frequency_limits_exact():
    lim = frequency_limits(parse_source("P:|1"), a=0.2)
    assert lim.exact and lim.lambda_lo == lim.lambda_hi == 1.0
    assert lim.delta_lo == -float("inf")
    crit = frequency_limits(parse_source("P:|1111111020"), a=0.15)
    assert crit.delta_lo == crit.delta_hi == 0.0
    assert frequency_limits(parse_source("F:12")).lambda_hi == 0.0


def test_frequency_limits_generated_window():
    x = make_generated("centered", {"a": 0.2, "c": 1.0}, seed=1)
    lim = frequency_limits(x, window=20000, a=0.2)
    assert not lim.exact
    assert lim.lambda_lo == pytest.approx(0.6, abs=0.02)
    assert lim.delta_lo == pytest.approx(1.0, abs=0.05)
    assert lim.delta_hi == pytest.approx(1.0, abs=0.05)


def test_frequency_limits_single_digit_window():
    x = make_generated("centered", {"a": 0.2, "c": 1.0}, seed=1)
    lim = frequency_limits(x, window=1)
    assert lim.lambda_lo == lim.lambda_hi
    assert lim.lambda_lo == float(x.digits(1)[0] == 1)
    with pytest.raises(ValidationError) as err:
        frequency_limits(x, window=0)
    assert err.value.code == "window_out_of_range"
