"""Box-counting dimension of graph(M_{k,a}) and the Markov-measure machinery
behind the lower bound for the set of -inf derivatives at k = 2.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from okamoto.config import MAX_GRID_DEPTH
from okamoto.errors import require
from okamoto.evaluator import check_a, check_k, grid_values, power_derivative
from okamoto.increments import log_osc_bound
from okamoto.spectral import LOG3, entropy_h, xlogx
from okamoto.ternary import ones_in_base3
from okamoto.ternary.generated_sources import Markov

logger = logging.getLogger(__name__)

CURVE_LO = 1.0 / 8.0
CURVE_HI = 3.0 / 8.0
LIL_BURN_IN = 1000
DEEP_MIN = 40
DEEP_MAX = 80
DEEP_LIMIT = 120


class DimensionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    a: float
    m: int
    order: float
    scales: List[int]
    counts: List[int]
    upper_counts: List[int]
    deep_scales: List[int]
    deep_counts: List[float]
    slope: float
    slope_corrected: float
    slope_deep: float
    formula: float
    residual: float
    residual_corrected: float
    residual_deep: float


class MarkovModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    p: float
    r: float
    matrix: List[List[float]]
    stationary: List[float]
    entropy: float
    p_crit: Optional[float]
    dim_lower: Optional[float]
    lil_constant: Optional[float]


class LilReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    p: float
    steps: int
    trials: int
    seed: int
    constant: Optional[float]
    c0: float
    maxima: List[float]
    overall_max: float
    median: float
    q10: float
    q90: float
    fraction_below_c0: float


class CycleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    p: float
    cycles: int
    mean_u: float
    se_mean_u: float
    expected_mean_u: float
    var_z: float
    se_var_z: float
    expected_var_z: float


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float
    h_tilde: float
    h_upper: float


def box_dim_formula(a: float) -> float:
    check_a(a)
    return 1.0 + math.log(4.0 * a - 1.0) / LOG3 if a >= 0.5 else 1.0


def polynomial_order(k: int, a: float) -> float:
    """Power of n multiplying the geometric growth of the box counts."""
    return k / 2.0 if a < 0.5 else float(k)


def _column_ranges(values: np.ndarray, n: int, m: int) -> np.ndarray:
    width = 3 ** m
    cols = values[:-1].reshape(3 ** n, width)
    right = values[width::width]
    hi = np.maximum(cols.max(axis=1), right)
    lo = np.minimum(cols.min(axis=1), right)
    return hi - lo


def _subcell_band(k: int, a: float, n: int, m: int) -> np.ndarray:
    """Per column, the largest oscillation bound over its depth n+m subcells."""
    if a == 0.5:
        return np.zeros(3 ** n)
    depth = n + m
    table = np.exp([log_osc_bound(k, a, depth, l) for l in range(depth + 1)])
    ls = ones_in_base3(np.arange(3 ** depth), depth)
    return table[ls].reshape(3 ** n, 3 ** m).max(axis=1)


def _count(ranges: np.ndarray, n: int) -> int:
    return int(np.maximum(1.0, np.ceil(3.0 ** n * ranges - 1e-9)).sum())


def box_count(k: int, a: float, n: int, m: int, values: Optional[np.ndarray] = None) -> int:
    """Number of 3^-n mesh squares met by the graph, from the depth n+m endpoint values."""
    check_k(k)
    check_a(a)
    require(n >= 1 and m >= 0, "n_out_of_range", f"need n >= 1 and m >= 0, got n={n}, m={m}")
    require(n + m <= MAX_GRID_DEPTH, "budget_exceeded", f"depth n+m = {n + m} exceeds budget {MAX_GRID_DEPTH}")
    if values is None:
        values = grid_values(k, a, n + m)
    return _count(_column_ranges(values, n, m), n)


def _unit_graphs(k: int, a: float, m: int) -> np.ndarray:
    """Rows M_{i,a}(t / 3^m), t = 0..3^m, for i = 0..k."""
    return np.stack([grid_values(i, a, m) for i in range(k + 1)])


def class_ranges(k: int, a: float, n: int, m: int, graphs: Optional[np.ndarray] = None) -> np.ndarray:
    """Sampled range of M_{k,a} on a depth-n column, for each number l = 0..n of 1s in its index.

    On I_{n,j} the graph is M_k(j 3^-n) + sum_i C(k, i) D_{k-i} M_i(y), where
    D_r is the r-th a-derivative of a^(n-l) (1-2a)^l, so the range depends on l only.
    """
    if graphs is None:
        graphs = _unit_graphs(k, a, m)
    ls = np.arange(n + 1)
    factors = np.stack([math.comb(k, i) * power_derivative(k - i, a, n - ls, ls) for i in range(k + 1)], axis=1)
    shapes = factors @ graphs
    return shapes.max(axis=1) - shapes.min(axis=1)


def class_count(k: int, a: float, n: int, m: int, graphs: Optional[np.ndarray] = None) -> float:
    """The box count of box_count, summed over classes of columns sharing l(j).

    Needs only the depth-m graphs, so n is not limited by the grid budget.
    """
    check_k(k)
    check_a(a)
    require(1 <= n <= DEEP_LIMIT and m >= 0, "n_out_of_range",
            f"need 1 <= n <= {DEEP_LIMIT} and m >= 0, got n={n}, m={m}")
    ranges = class_ranges(k, a, n, m, graphs)
    columns = np.array([float(math.comb(n, l) * 2 ** (n - l)) for l in range(n + 1)])
    return float(np.dot(columns, np.maximum(1.0, np.ceil(3.0 ** n * ranges - 1e-9))))


def _fit(scales: Sequence[int], counts: Sequence[float], order: float) -> float:
    ns = np.array(scales, dtype=np.float64)
    logs = (np.log(np.array(counts, dtype=np.float64)) - order * np.log(ns)) / LOG3
    return float(np.polyfit(ns, logs, 1)[0])


def box_dimension(k: int, a: float, n_min: int = 4, n_max: int = 9, m: int = 3,
                  deep_min: int = DEEP_MIN, deep_max: int = DEEP_MAX) -> DimensionReport:
    check_k(k)
    check_a(a)
    require(1 <= n_min < n_max, "n_out_of_range", f"need 1 <= n_min < n_max, got {n_min}, {n_max}")
    require(1 <= deep_min < deep_max <= DEEP_LIMIT, "n_out_of_range",
            f"need 1 <= deep_min < deep_max <= {DEEP_LIMIT}, got {deep_min}, {deep_max}")
    require(n_max + m <= MAX_GRID_DEPTH, "budget_exceeded", f"depth {n_max + m} exceeds budget {MAX_GRID_DEPTH}")
    top = grid_values(k, a, n_max + m)
    scales = list(range(n_min, n_max + 1))
    counts, upper = [], []
    for n in scales:
        values = top[:: 3 ** (n_max - n)]
        ranges = _column_ranges(values, n, m)
        counts.append(_count(ranges, n))
        upper.append(_count(ranges + 2.0 * _subcell_band(k, a, n, m), n))
        logger.info(f"k={k} a={a} n={n}: N={counts[-1]} (upper {upper[-1]})")
    graphs = _unit_graphs(k, a, m)
    deep_scales = list(range(deep_min, deep_max + 1))
    deep_counts = [class_count(k, a, n, m, graphs) for n in deep_scales]
    logger.debug(f"k={k} a={a}: N={deep_counts[0]:.4g} at n={deep_min}, {deep_counts[-1]:.4g} at n={deep_max}")
    order = polynomial_order(k, a)
    slope = _fit(scales, counts, 0.0)
    slope_corrected = _fit(scales, counts, order)
    slope_deep = _fit(deep_scales, deep_counts, order)
    formula = box_dim_formula(a)
    logger.info(f"k={k} a={a}: slope {slope:.4f}, corrected {slope_corrected:.4f}, deep {slope_deep:.4f}, "
                f"formula {formula:.4f}")
    return DimensionReport(
        k=k, a=a, m=m, order=order, scales=scales, counts=counts, upper_counts=upper,
        deep_scales=deep_scales, deep_counts=deep_counts,
        slope=slope, slope_corrected=slope_corrected, slope_deep=slope_deep, formula=formula,
        residual=abs(slope - formula), residual_corrected=abs(slope_corrected - formula),
        residual_deep=abs(slope_deep - formula),
    )


def transition_matrix(a: float, p: float) -> np.ndarray:
    r = Markov.transition_r(a, p)
    edge = [(1.0 - r) / 2.0, r, (1.0 - r) / 2.0]
    return np.array([edge, [(1.0 - p) / 2.0, p, (1.0 - p) / 2.0], edge])


def markov_entropy(a: float, p: float) -> float:
    """H(a, p) = -sum_i pi_i sum_j P_ij log P_ij, in natural log."""
    P = transition_matrix(a, p)
    pi = np.array([a, 1.0 - 2.0 * a, a])
    return float(-sum(pi[i] * sum(xlogx(v) for v in P[i]) for i in range(3)))


def p_crit(a: float) -> float:
    return 1.0 - 8.0 * a / 3.0


def _check_markov(a: float, p: float):
    require(0.0 < a < 0.5, "a_out_of_range", f"the Markov model needs a in (0, 1/2), got {a}")
    require(0.0 <= p < 1.0, "p_out_of_range", f"p must lie in [0, 1), got {p}")
    r = Markov.transition_r(a, p)
    require(r >= 0.0, "markov_r_out_of_range", f"r = (1-2a)(1-p)/(2a) = {r} violates r >= 0")
    require(r <= 1.0 + 1e-12, "markov_r_out_of_range", f"r = (1-2a)(1-p)/(2a) = {r} violates r <= 1")


def lil_constant(a: float, p: float) -> Optional[float]:
    inner = 2.0 * a * (1.0 - 2.0 * a) * (4.0 * a - 1.0 + p) / (1.0 - p)
    return math.sqrt(inner) if inner >= 0.0 else None


def markov_model(a: float, p: float) -> MarkovModel:
    _check_markov(a, p)
    in_range = CURVE_LO <= a <= CURVE_HI
    crit = p_crit(a) if in_range else None
    return MarkovModel(
        a=a,
        p=p,
        r=Markov.transition_r(a, p),
        matrix=transition_matrix(a, p).tolist(),
        stationary=[a, 1.0 - 2.0 * a, a],
        entropy=markov_entropy(a, p),
        p_crit=crit,
        dim_lower=None if crit is None else markov_entropy(a, crit) / LOG3,
        lil_constant=lil_constant(a, p),
    )


def _trial_seeds(seed: int, trials: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(child.generate_state(1)[0]) for child in children]


def _lil_trial(a: float, p: float, steps: int, seed: int) -> float:
    digits = Markov({"a": a, "p": p}, seed).digits(steps)
    ls = np.cumsum(digits == 1)
    n = np.arange(LIL_BURN_IN, steps + 1, dtype=np.float64)
    centered = ls[LIL_BURN_IN - 1:] - (1.0 - 2.0 * a) * n
    return float((centered / np.sqrt(2.0 * n * np.log(np.log(n)))).max())


def lil_simulate(a: float, p: float, steps: int, trials: int, seed: int = 0,
                 workers: Optional[int] = None) -> LilReport:
    """Max over n >= 1000 of (l_n - (1-2a)n) / sqrt(2n log log n), per trial."""
    _check_markov(a, p)
    require(steps >= 10_000, "steps_out_of_range", f"steps must be >= 10000, got {steps}")
    require(trials >= 1, "trials_out_of_range", f"trials must be >= 1, got {trials}")
    seeds = _trial_seeds(seed, trials)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        maxima = list(pool.map(lambda s: _lil_trial(a, p, steps, s), seeds))
    for i, value in enumerate(maxima):
        logger.info(f"trial {i}: max {value:.4f}")
    limit = math.sqrt(2.0 * a * (1.0 - 2.0 * a))
    values = np.array(maxima)
    return LilReport(
        a=a, p=p, steps=steps, trials=trials, seed=seed,
        constant=lil_constant(a, p), c0=limit, maxima=maxima,
        overall_max=float(values.max()),
        median=float(np.median(values)),
        q10=float(np.quantile(values, 0.1)),
        q90=float(np.quantile(values, 0.9)),
        fraction_below_c0=float(np.mean(values < limit)),
    )


def _cycle_lengths(indicator: np.ndarray):
    """(non-1 run, following 1-run) pairs, dropping the partial runs at both ends."""
    change = np.flatnonzero(np.diff(indicator.astype(np.int8)) != 0) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [indicator.size]]))
    is_one = indicator[starts]
    lengths, is_one = lengths[1:-1], is_one[1:-1]
    first = int(np.argmax(~is_one))
    lengths, is_one = lengths[first:], is_one[first:]
    pairs = lengths.size // 2
    return lengths[0:2 * pairs:2], lengths[1:2 * pairs:2]


def cycle_statistics(a: float, p: float, cycles: int, seed: int = 0) -> CycleReport:
    """Empirical mean of U = T_odd + T_even and variance of Z = 2a T_even - (1-2a) T_odd."""
    _check_markov(a, p)
    require(cycles >= 10, "cycles_out_of_range", f"cycles must be >= 10, got {cycles}")
    expected_u = 1.0 / ((1.0 - 2.0 * a) * (1.0 - p))
    chain = Markov({"a": a, "p": p}, seed)
    size = int(1.2 * cycles * expected_u) + 64
    while True:
        odd, even = _cycle_lengths(chain.digits(size) == 1)
        if odd.size >= cycles:
            break
        size *= 2
    odd, even = odd[:cycles].astype(np.float64), even[:cycles].astype(np.float64)
    u = odd + even
    z = 2.0 * a * even - (1.0 - 2.0 * a) * odd
    var_z = float(z.var(ddof=1))
    fourth = float(np.mean((z - z.mean()) ** 4))
    return CycleReport(
        a=a, p=p, cycles=cycles,
        mean_u=float(u.mean()),
        se_mean_u=float(u.std(ddof=1) / math.sqrt(cycles)),
        expected_mean_u=expected_u,
        var_z=var_z,
        se_var_z=math.sqrt(max(fourth - var_z ** 2, 0.0) / cycles),
        expected_var_z=2.0 * a * (4.0 * a - 1.0 + p) / (1.0 - p) ** 2,
    )


def dim_lower_curve(a_grid: Sequence[float]) -> List[CurvePoint]:
    """Rows (a, H(a, p_crit(a)) / log 3, h(1 - 2a)) over a grid in [1/8, 3/8]."""
    out = []
    for a in a_grid:
        require(CURVE_LO - 1e-12 <= a <= CURVE_HI + 1e-12, "a_out_of_range",
                f"curve points need a in [1/8, 3/8], got {a}")
        a = min(max(float(a), CURVE_LO), CURVE_HI)
        out.append(CurvePoint(a=a, h_tilde=markov_entropy(a, p_crit(a)) / LOG3, h_upper=entropy_h(1.0 - 2.0 * a)))
    return out


def curve_grid(points: int) -> np.ndarray:
    require(points >= 2, "points_out_of_range", f"points must be >= 2, got {points}")
    return np.linspace(CURVE_LO, CURVE_HI, points)
