"""Model parameters, their validation and the expected-infection formulas.

Symbols follow the usual group-testing notation:

* ``N`` population size, ``n`` group (pool) size
* ``m`` community size, ``p``/``q`` within/between community edge probability
* ``v`` prevalence of the independent-infection (Dorfman) model
* ``alpha`` per-edge transmission probability of the seed node
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import AlphaOutOfRange, DegenerateModel, ParameterError


@dataclass(frozen=True)
class ModelParams:
    N: int
    n: int
    m: int
    p: float
    q: float
    v: float
    alpha: Optional[float] = None

    def with_n(self, n: int) -> "ModelParams":
        return replace(self, n=n)

    def calibrated(self) -> "ModelParams":
        """Copy with ``alpha`` set so both epidemic models infect equally many."""
        return replace(self, alpha=calibrate_alpha(self.N, self.m, self.p, self.q, self.v))

    @classmethod
    def from_alpha(cls, N: int, n: int, m: int, p: float, q: float, alpha: float) -> "ModelParams":
        """Build params from a transmission probability, deriving the prevalence."""
        return cls(N=N, n=n, m=m, p=p, q=q, v=implied_prevalence(N, m, p, q, alpha), alpha=alpha)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    N_divisible_by_n: bool = False
    m_divisible_by_n: bool = False
    n_divisible_by_m: bool = False
    implied_v: Optional[float] = None
    calibrated_alpha: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def exact(self) -> bool:
        """True when the network-grouping closed forms hold exactly."""
        return self.N_divisible_by_n and (self.m_divisible_by_n or self.n_divisible_by_m)


def _is_integer(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate(params: ModelParams) -> ValidationReport:
    """Check the admissibility constraints and report divisibility status.

    Never raises; every violated constraint is listed in ``violations``.
    """
    N, n, m, p, q, v, alpha = (params.N, params.n, params.m, params.p, params.q,
                               params.v, params.alpha)
    bad = []
    if not (_is_integer(N) and N >= 1):
        bad.append("N >= 1 integer")
    if not (_is_integer(n) and _is_integer(N) and 1 <= n <= N):
        bad.append("1 <= n <= N")
    if not (_is_integer(m) and _is_integer(N) and 1 < m < N):
        bad.append("1 < m < N")
    if not (0.0 <= q <= p <= 1.0):
        if not 0.0 <= q:
            bad.append("q >= 0")
        if not q <= p:
            bad.append("q <= p")
        if not p <= 1.0:
            bad.append("p <= 1")
    if not 0.0 <= v <= 1.0:
        bad.append("v in [0, 1]")
    if alpha is not None and not 0.0 <= alpha <= 1.0:
        bad.append("alpha in [0, 1]")

    report = ValidationReport(violations=bad)
    if _is_integer(N) and _is_integer(n) and n >= 1:
        report.N_divisible_by_n = N % n == 0
        if _is_integer(m) and m >= 1:
            report.m_divisible_by_n = m % n == 0
            report.n_divisible_by_m = n % m == 0

    structural_ok = not any(c in bad for c in ("N >= 1 integer", "1 < m < N", "q >= 0",
                                               "q <= p", "p <= 1"))
    if structural_ok:
        denom = (m - 1) * p + (N - m) * q
        if alpha is not None:
            report.implied_v = implied_prevalence(N, m, p, q, alpha)
        if denom > 0 and 0.0 <= v <= 1.0:
            a = (N - 1) * v / denom
            report.calibrated_alpha = a
            if alpha is None and a > 1.0:
                bad.append("calibrated alpha <= 1")
    return report


def check(params: ModelParams) -> ModelParams:
    """Raise ParameterError unless ``params`` passes :func:`validate`."""
    report = validate(params)
    if not report.ok:
        raise ParameterError("invalid parameters: " + "; ".join(report.violations))
    return params


def calibrate_alpha(N: int, m: int, p: float, q: float, v: float) -> float:
    """Transmission probability equating the expected infected counts of both models.

    >>> calibrate_alpha(1000, 10, 0.2, 0.2, 0.01)
    0.05
    """
    if not 1 < m < N:
        raise ParameterError(f"need 1 < m < N, got m={m}, N={N}")
    if not 0.0 <= q <= p <= 1.0:
        raise ParameterError(f"need 0 <= q <= p <= 1, got p={p}, q={q}")
    if not 0.0 <= v <= 1.0:
        raise ParameterError(f"need v in [0, 1], got {v}")
    denom = (m - 1) * p + (N - m) * q
    if denom == 0:
        if v == 0:
            return 0.0
        raise DegenerateModel("p = q = 0 leaves the seed without neighbours")
    if q == p:
        # exact: keeps alpha * p == v to the last bit
        alpha = v / p
    else:
        alpha = (N - 1) * v / denom
    if alpha > 1.0:
        raise AlphaOutOfRange(
            f"prevalence v={v} needs alpha={alpha:.6g} > 1 on this network"
        )
    return alpha


def implied_prevalence(N: int, m: int, p: float, q: float, alpha: float) -> float:
    """Inverse of :func:`calibrate_alpha`."""
    return alpha * ((m - 1) * p + (N - m) * q) / (N - 1)


def expected_infected_dorfman(params: ModelParams) -> float:
    check(params)
    return 1 + (params.N - 1) * params.v


def expected_infected_network(params: ModelParams) -> float:
    check(params)
    alpha = _alpha(params)
    return 1 + (params.m - 1) * params.p * alpha + (params.N - params.m) * params.q * alpha


def _alpha(params: ModelParams) -> float:
    if params.alpha is not None:
        return params.alpha
    return calibrate_alpha(params.N, params.m, params.p, params.q, params.v)


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


__all__ = [
    "ModelParams",
    "ValidationReport",
    "validate",
    "check",
    "calibrate_alpha",
    "implied_prevalence",
    "expected_infected_dorfman",
    "expected_infected_network",
    "ceil_div",
]
