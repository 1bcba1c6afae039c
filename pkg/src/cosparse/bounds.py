"""Closed-form measurement counts and recovery error radii.

Every measurement bound has the form ``m^2 / (m + 1) >= R`` for a right-hand
side ``R`` depending on the frame bounds, sparsity and failure probability;
the functions below return the smallest integer ``m`` satisfying it. ``m`` is
never clipped at the ambient dimension here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "BoundQuery",
    "NoisyBound",
    "RobustBound",
    "e_m",
    "rhs_nonuniform",
    "rhs_nonuniform_noisy",
    "rhs_uniform",
    "rhs_uniform_robust",
    "min_measurements",
    "satisfies",
    "m_nonuniform",
    "m_nonuniform_noisy",
    "m_uniform",
    "m_uniform_robust",
    "error_bounds",
]


@dataclass(frozen=True)
class BoundQuery:
    A: float
    B: float
    s: int
    p: int
    eps: float
    rho: float | None = None
    tau: float | None = None
    eta: float = 0.0

    def __post_init__(self):
        if not 0 < self.A <= self.B:
            raise ValueError(f"need 0 < A <= B, got A={self.A}, B={self.B}")
        if not 1 <= self.s <= self.p:
            raise ValueError(f"need 1 <= s <= p, got s={self.s}, p={self.p}")
        if not 0 < self.eps < 1:
            raise ValueError(f"need 0 < eps < 1, got {self.eps}")
        if self.rho is not None and not 0 < self.rho < 1:
            raise ValueError(f"need 0 < rho < 1, got {self.rho}")
        if self.tau is not None and self.tau <= 0:
            raise ValueError(f"need tau > 0, got {self.tau}")
        if self.eta < 0:
            raise ValueError(f"need eta >= 0, got {self.eta}")

    @property
    def log_term(self) -> float:
        return math.log(math.e * self.p / self.s)


class NoisyBound(NamedTuple):
    m: int
    error_radius: float


class RobustBound(NamedTuple):
    m: int
    sigma_coef: float
    noise_coef: float


def e_m(m: int) -> float:
    """Expected Euclidean norm of a standard Gaussian vector in R^m."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    return math.exp(0.5 * math.log(2.0) + math.lgamma((m + 1) / 2) - math.lgamma(m / 2))


def _need(q, name):
    val = getattr(q, name)
    if val is None:
        raise ValueError(f"query needs {name}")
    return val


def _nsp_factor(rho):
    return 1.0 + (1.0 + 1.0 / rho) ** 2


def rhs_nonuniform(q: BoundQuery) -> float:
    A, B, s = q.A, q.B, q.s
    inner = math.fsum([math.sqrt(q.log_term), math.sqrt(A * math.log(1 / q.eps) / (B * s))])
    return 2 * B * s / A * inner ** 2


def rhs_nonuniform_noisy(q: BoundQuery) -> float:
    A, B, s = q.A, q.B, q.s
    tau = _need(q, "tau")
    inner = math.fsum([
        math.sqrt(q.log_term),
        math.sqrt(A * math.log(1 / q.eps) / (B * s)),
        tau * math.sqrt(A / (2 * s * B)),
    ])
    return 2 * B * s / A * inner ** 2


def rhs_uniform(q: BoundQuery) -> float:
    A, B, s = q.A, q.B, q.s
    f = _nsp_factor(_need(q, "rho"))
    inner = math.fsum([
        math.sqrt(q.log_term),
        1 / math.sqrt(2),
        math.sqrt(A * math.log(1 / q.eps) / (B * s * f)),
    ])
    return 2 * B * s * f / A * inner ** 2


def rhs_uniform_robust(q: BoundQuery) -> float:
    tau = _need(q, "tau")
    if tau <= 1:
        raise ValueError(f"robust uniform bound needs tau > 1, got {tau}")
    return tau ** 2 / (tau - 1) ** 2 * rhs_uniform(q)


def satisfies(m: int, rhs: float) -> bool:
    """Whether ``m^2 / (m + 1) >= rhs``, evaluated without division."""
    return m >= 1 and math.fsum([m * m, -rhs * m, -rhs]) >= 0


def min_measurements(rhs: float) -> int:
    """Smallest integer ``m >= 1`` with ``m^2 / (m + 1) >= rhs``.

    Starts from the positive root of ``m^2 - rhs m - rhs`` and scans around it.
    """
    if rhs <= 0:
        return 1
    root = (rhs + math.sqrt(rhs * rhs + 4 * rhs)) / 2
    m = max(1, math.ceil(root) - 2)
    while not satisfies(m, rhs):
        m += 1
    while m > 1 and satisfies(m - 1, rhs):
        m -= 1
    return m


def m_nonuniform(q: BoundQuery) -> int:
    """Measurements for recovering one fixed s-sparse analysis vector."""
    return min_measurements(rhs_nonuniform(q))


def m_nonuniform_noisy(q: BoundQuery) -> NoisyBound:
    """Measurements for noisy nonuniform recovery; radius is ``2 eta / tau``."""
    tau = _need(q, "tau")
    return NoisyBound(min_measurements(rhs_nonuniform_noisy(q)), 2 * q.eta / tau)


def m_uniform(q: BoundQuery) -> int:
    return min_measurements(rhs_uniform(q))


def m_uniform_robust(q: BoundQuery) -> RobustBound:
    """Measurements for robust uniform recovery and its error coefficients.

    The error of the resulting guarantee is
    ``sigma_coef * sigma_s(Omega x)_1 + noise_coef * eta``.
    """
    m = min_measurements(rhs_uniform_robust(q))
    rho, tau = q.rho, q.tau
    sigma_coef = 2 * (1 + rho) ** 2 / (math.sqrt(q.A) * (1 - rho) * math.sqrt(q.s))
    noise_coef = (2 * tau * math.sqrt(2 * q.B) * (3 + rho)
                  / (math.sqrt(m) * math.sqrt(q.A) * (1 - rho)))
    return RobustBound(m, sigma_coef, noise_coef)


def error_bounds(q: BoundQuery, sigma_s_value: float, m: int | None = None,
                 gaussian_tau: bool = False) -> dict:
    """Right-hand sides of the stability and robustness guarantees.

    Returns a dict with

    ``l1``
        ``2(1+rho)/(1-rho) * sigma``, the analysis-domain l1 error.
    ``l2``
        ``2(1+rho)^2 / (sqrt(A)(1-rho)) * sigma / sqrt(s)``.
    ``l2_robust``
        ``l2`` plus the noise term ``2 tau (3+rho) / (sqrt(A)(1-rho)) * eta``; with
        `gaussian_tau` the robust null space constant is ``tau sqrt(2B)/sqrt(m)``.
    ``cone``
        ``2 eta / tau`` from the tangent-cone condition.
    """
    rho = _need(q, "rho")
    if sigma_s_value < 0:
        raise ValueError("sigma_s must be non-negative")
    eta, A, s = q.eta, q.A, q.s
    l1 = 2 * (1 + rho) / (1 - rho) * sigma_s_value
    l2 = 2 * (1 + rho) ** 2 / (math.sqrt(A) * (1 - rho)) * sigma_s_value / math.sqrt(s)
    if eta == 0:
        noise, cone = 0.0, 0.0
    else:
        tau = _need(q, "tau")
        if gaussian_tau:
            if m is None:
                raise ValueError("gaussian_tau needs m")
            tau_nsp = tau * math.sqrt(2 * q.B) / math.sqrt(m)
        else:
            tau_nsp = tau
        noise = 2 * tau_nsp * (3 + rho) / (math.sqrt(A) * (1 - rho)) * eta
        cone = 2 * eta / tau
    return {"l1": l1, "l2": l2, "l2_robust": l2 + noise, "cone": cone}
