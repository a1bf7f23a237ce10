"""Closed-form test counts for two-stage group testing.

Three strategies are covered: random (Dorfman) pooling, pooling by
community (network grouping) and the perfect-grouping lower bound.  All
functions are pure and take a :class:`~netgroup.params.ModelParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DivisibilityError, EmptyRange, ParameterError
from .params import ModelParams, _alpha, check, validate

STRATEGIES = ("dorfman", "network", "lower-bound")


@dataclass(frozen=True)
class TestCountDistribution:
    support: tuple
    probabilities: tuple
    mean: float
    variance: float

    __test__ = False  # not a pytest class

    def pmf(self, t: int) -> float:
        try:
            return self.probabilities[self.support.index(t)]
        except ValueError:
            return 0.0

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probabilities))


def positive_part(x: float) -> float:
    return x if x > 0 else 0.0


def is_exact(params: ModelParams) -> bool:
    return validate(params).exact


def _pool_positive_prob(rate: float, n: int) -> float:
    # 1 - (1 - rate)^n without cancellation for tiny rates
    if rate >= 1.0:
        return 1.0
    return -math.expm1(n * math.log1p(-rate))


def expected_tests_dorfman(params: ModelParams) -> float:
    """Expected tests with random pools of size ``n``.

    Uses the real-valued ratio ``N/n`` when ``n`` does not divide ``N``
    (approximate regime, see :func:`is_exact`).
    """
    check(params)
    N, n, v = params.N, params.n, params.v
    v_pool = _pool_positive_prob(v, n)
    return N / n + n * (1 + (N / n - 1) * v_pool)


def lower_bound(params: ModelParams) -> float:
    """Two-stage lower bound attained by perfect grouping.

    Returns the real value, e.g. 150.95 for N=1000, n=10, v=0.05; rounding to
    an integer count is left to presentation code.
    """
    check(params)
    N, n, v = params.N, params.n, params.v
    return N / n + max(n, 1 + (N - 1) * v)


def expected_tests_network(params: ModelParams) -> float:
    check(params)
    N, n, m = params.N, params.n, params.m
    alpha = _alpha(params)
    p_pool = _pool_positive_prob(params.p * alpha, n)
    q_pool = _pool_positive_prob(params.q * alpha, n)
    same = positive_part(m / n - 1)
    return N / n + n * (1 + same * p_pool + (N / n - 1 - same) * q_pool)


def expected_tests(params: ModelParams, strategy: str) -> float:
    if strategy == "dorfman":
        return expected_tests_dorfman(params)
    if strategy == "network":
        return expected_tests_network(params)
    if strategy == "lower-bound":
        return lower_bound(params)
    raise ValueError(f"unknown strategy {strategy!r}")


def binomial_pmf(k: int, prob: float) -> np.ndarray:
    """Binomial(k, prob) masses for 0..k, evaluated in log space."""
    if k < 0:
        raise ValueError("negative trial count")
    if prob <= 0.0:
        out = np.zeros(k + 1)
        out[0] = 1.0
        return out
    if prob >= 1.0:
        out = np.zeros(k + 1)
        out[k] = 1.0
        return out
    lp, lq = math.log(prob), math.log1p(-prob)
    lg = math.lgamma
    masses = [
        math.exp(lg(k + 1) - lg(j + 1) - lg(k - j + 1) + j * lp + (k - j) * lq)
        for j in range(k + 1)
    ]
    return np.array(masses)


def _make_distribution(N: int, n: int, extra_pmf: np.ndarray) -> TestCountDistribution:
    # extra_pmf[g] = P(g positive groups beyond the seed's own)
    groups = N // n
    support = tuple(groups + n * (1 + g) for g in range(len(extra_pmf)))
    probs = tuple(float(x) for x in extra_pmf)
    mean = math.fsum(t * w for t, w in zip(support, probs))
    var = math.fsum(w * (t - mean) ** 2 for t, w in zip(support, probs))
    return TestCountDistribution(support, probs, mean, var)


def dorfman_distribution(params: ModelParams) -> TestCountDistribution:
    check(params)
    N, n = params.N, params.n
    if N % n:
        raise DivisibilityError(f"n={n} does not divide N={N}")
    pmf = binomial_pmf(N // n - 1, _pool_positive_prob(params.v, n))
    return _make_distribution(N, n, pmf)


def network_distribution(params: ModelParams) -> TestCountDistribution:
    """Exact law of the test count under community pooling.

    Only defined when ``n | N`` and either ``n | m`` or ``m | n``; the two
    binomials (groups made of the seed's community mates, and all the other
    groups) are convolved exactly.
    """
    check(params)
    N, n, m = params.N, params.n, params.m
    if not validate(params).exact:
        raise DivisibilityError(f"need n | N and (n | m or m | n); got N={N}, n={n}, m={m}")
    alpha = _alpha(params)
    same = max(m // n - 1, 0)
    other = N // n - 1 - same
    x = binomial_pmf(same, _pool_positive_prob(params.p * alpha, n))
    y = binomial_pmf(other, _pool_positive_prob(params.q * alpha, n))
    return _make_distribution(N, n, _convolve(x, y))


def _convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # fixed summation order, ascending k
    out = np.zeros(len(x) + len(y) - 1)
    for i, xi in enumerate(x):
        for j, yj in enumerate(y):
            out[i + j] += xi * yj
    return out


# -- theorem checks -----------------------------------------------------------


@dataclass
class GridPointResult:
    params: ModelParams
    lower: float
    network: float
    dorfman: float
    status: str  # "ok", "equal-dorfman", "equal-lower", or "violation: ..."

    @property
    def violated(self) -> bool:
        return self.status.startswith("violation")


@dataclass
class PropertyReport:
    points: list
    monotonicity_violations: list

    @property
    def violations(self) -> list:
        out = [pt for pt in self.points if pt.violated]
        return out + list(self.monotonicity_violations)

    @property
    def ok(self) -> bool:
        return not self.violations


def _classify(params: ModelParams, slack: float, eq_tol: float) -> GridPointResult:
    lb = lower_bound(params)
    ng = expected_tests_network(params)
    d = expected_tests_dorfman(params)
    problems = []
    if lb > ng + slack:
        problems.append("T_LB > E[T_NG]")
    if ng > d + slack:
        problems.append("E[T_NG] > E[T_D]")
    if problems:
        status = "violation: " + ", ".join(problems)
    elif params.q == params.p and abs(ng - d) <= eq_tol:
        status = "equal-dorfman"
    elif params.q == 0 and params.n >= params.m and abs(ng - lb) <= eq_tol:
        status = "equal-lower"
    else:
        status = "ok"
    if params.q == params.p and abs(ng - d) > eq_tol:
        status = "violation: q=p but E[T_NG] != E[T_D]"
    if params.q == 0 and params.n >= params.m and abs(ng - lb) > eq_tol:
        status = "violation: q=0, n>=m but E[T_NG] != T_LB"
    return GridPointResult(params, lb, ng, d, status)


def verify_theorem1(
    points: Iterable[ModelParams] = (),
    sweeps: Iterable[Sequence[ModelParams]] = (),
    slack: float = 1e-9,
    mono_slack: float = 1e-12,
    eq_tol: float = 1e-10,
) -> PropertyReport:
    """Check the sandwich ``T_LB <= E[T_NG] <= E[T_D]`` and monotonicity in q.

    ``points`` are checked individually.  Each element of ``sweeps`` is a
    sequence of params ordered by increasing ``q`` (other fields fixed,
    ``alpha`` recalibrated); every point of a sweep is also sandwich-checked.
    Violations are collected, never raised.
    """
    results = [_classify(p, slack, eq_tol) for p in points]
    mono = []
    for sweep in sweeps:
        prev = None
        for params in sweep:
            res = _classify(params, slack, eq_tol)
            results.append(res)
            if prev is not None:
                if params.q < prev.params.q:
                    raise ParameterError("sweep must be ordered by increasing q")
                if res.network < prev.network - mono_slack * max(1.0, abs(prev.network)):
                    mono.append((prev.params, params, prev.network, res.network))
            prev = res
    return PropertyReport(results, mono)


def q_sweep(N: int, n: int, m: int, p: float, v: float, points: int = 50) -> list:
    """Params with ``q`` evenly spaced over ``[0, p]``, alpha calibrated per point.

    Points where calibration would need ``alpha > 1`` are dropped.
    """
    out = []
    for q in np.linspace(0.0, p, points):
        q = float(q)
        if q > p:
            q = p
        try:
            out.append(ModelParams(N, n, m, p, q, v).calibrated())
        except ParameterError:
            continue
    return out


def random_valid_params(rng: np.random.Generator, max_N: int = 2000) -> ModelParams:
    """Draw one admissible parameter tuple with a calibrated ``alpha``."""
    while True:
        N = int(rng.integers(3, max_N + 1))
        m = int(rng.integers(2, N))
        n = int(rng.integers(1, N + 1))
        p = float(rng.uniform(0.0, 1.0))
        q = float(rng.uniform(0.0, p))
        alpha = float(rng.uniform(0.0, 1.0))
        v = min(1.0, alpha * ((m - 1) * p + (N - m) * q) / (N - 1))
        try:
            return ModelParams(N, n, m, p, q, v).calibrated()
        except ParameterError:
            continue


def theorem_grid(points: int, sweeps: int, sweep_points: int, boundary: int, seed: int):
    """Random points, q-sweeps and forced boundary points for theorem checks."""
    rng = np.random.default_rng(seed)
    pts = [random_valid_params(rng) for _ in range(points)]
    sweep_list = []
    while len(sweep_list) < sweeps:
        base = random_valid_params(rng)
        # v small enough that alpha <= 1 holds along the whole sweep (q = 0 is worst)
        v = float(rng.uniform(0.0, 1.0)) * (base.m - 1) * base.p / (base.N - 1)
        sw = q_sweep(base.N, base.n, base.m, base.p, v, sweep_points)
        if len(sw) == sweep_points:
            sweep_list.append(sw)
    for i in range(boundary):
        base = random_valid_params(rng)
        if i % 2 == 0:
            p = base.p if base.p > 0 else 0.5
            v = float(rng.uniform(0.0, p))
            pts.append(ModelParams(base.N, base.n, base.m, p, p, v).calibrated())
        else:
            n = int(rng.integers(base.m, base.N + 1))
            v = float(rng.uniform(0.0, 1.0)) * (base.m - 1) * base.p / (base.N - 1)
            pts.append(ModelParams(base.N, n, base.m, base.p, 0.0, v).calibrated())
    return pts, sweep_list


# -- group size optimisation ---------------------------------------------------


def optimal_group_size(
    params: ModelParams,
    strategy: str,
    n_range: Optional[tuple] = None,
) -> tuple:
    """Group size minimising the strategy's expected tests over an inclusive range.

    ``params.n`` is ignored.  Ties go to the smaller ``n``.  Returns
    ``(n_star, expected_tests)``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    lo, hi = n_range if n_range is not None else (1, params.N)
    lo, hi = max(int(lo), 1), min(int(hi), params.N)
    if lo > hi:
        raise EmptyRange(f"no group size in [{n_range[0]}, {n_range[1]}] within [1, {params.N}]")
    best = None
    for n in range(lo, hi + 1):
        candidate = params.with_n(n)
        if strategy == "network" and params.alpha is None:
            candidate = candidate.calibrated()
        value = expected_tests(candidate, strategy)
        if best is None or value < best[1]:
            best = (n, value)
    return best


def sweep(params: ModelParams, strategies: Sequence[str], ns: Iterable[int]) -> list:
    """Rows ``(strategy, n, value, exact)`` over a range of group sizes."""
    rows = []
    for n in ns:
        p_n = params.with_n(n)
        exact = validate(p_n).N_divisible_by_n
        for strategy in strategies:
            value = expected_tests(p_n, strategy)
            flag = is_exact(p_n) if strategy == "network" else exact
            rows.append((strategy, n, value, flag))
    return rows


__all__ = [
    "STRATEGIES",
    "TestCountDistribution",
    "GridPointResult",
    "PropertyReport",
    "binomial_pmf",
    "dorfman_distribution",
    "expected_tests",
    "expected_tests_dorfman",
    "expected_tests_network",
    "is_exact",
    "lower_bound",
    "network_distribution",
    "optimal_group_size",
    "positive_part",
    "q_sweep",
    "random_valid_params",
    "sweep",
    "theorem_grid",
    "verify_theorem1",
]
