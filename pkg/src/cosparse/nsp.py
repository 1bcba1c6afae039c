"""Sampling falsifiers for the three analysis null space properties.

For a matrix ``M``, frame ``Omega``, order ``s`` and constant ``rho`` the
properties ask, for every ``Lambda`` with ``#Lambda >= p - s``:

``plain``      ``||Omega_{Lc} v||_1 <= rho ||Omega_L v||_1``                 for v in ker M
``l2_stable``  ``||Omega_{Lc} v||_2 <= rho / sqrt(s) ||Omega_L v||_1``      for v in ker M
``robust``     ``... <= rho / sqrt(s) ||Omega_L v||_1 + tau ||M v||_2``     for all v

Exact verification is intractable in general, so :func:`nsp_check` tests
random vectors and reports the most violating one. ``NotFalsified`` means no
violation was *found*; it is not a proof.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bounds import BoundQuery, error_bounds
from .frames import Frame
from .model import null_space

__all__ = [
    "Variant",
    "Verdict",
    "NspReport",
    "worst_cosupport",
    "nsp_margin",
    "nsp_check",
    "implied_errors",
]


class Variant(str, enum.Enum):
    PLAIN = "plain"
    L2_STABLE = "l2_stable"
    ROBUST = "robust"

    def __str__(self):
        return self.value


class Verdict(str, enum.Enum):
    FALSIFIED = "Falsified"
    NOT_FALSIFIED = "NotFalsified"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class NspReport:
    variant: Variant
    status: Verdict
    worst_margin: float
    witness_v: np.ndarray | None
    witness_cosupport: np.ndarray | None
    n_tested: int

    @property
    def falsified(self) -> bool:
        return self.status is Verdict.FALSIFIED

    def as_dict(self):
        finite = math.isfinite(self.worst_margin)
        return {
            "variant": str(self.variant),
            "status": str(self.status),
            "worst_margin": self.worst_margin if finite else None,
            "witness": None if self.witness_v is None else {
                "v": self.witness_v.tolist(),
                "cosupport": self.witness_cosupport.tolist(),
            },
            "n_tested": self.n_tested,
        }


def worst_cosupport(v_analysis, s: int) -> np.ndarray:
    """Cosupport that is hardest for the inequality at this vector.

    Its complement holds the `s` largest magnitudes (ties go to the lower
    index), which maximizes the left-hand sides and minimizes the right-hand
    sides at once. Returned sorted, 0-based.
    """
    a = np.abs(np.asarray(v_analysis, dtype=float))
    if not 1 <= s <= a.size:
        raise ValueError(f"need 1 <= s <= p, got s={s}")
    order = np.lexsort((np.arange(a.size), -a))
    return np.sort(order[s:])


def nsp_margin(v_analysis, cosupport, s: int, rho: float, variant, mv_norm: float = 0.0,
               tau: float = 0.0) -> float:
    """Left-hand side minus right-hand side of the chosen inequality."""
    w = np.asarray(v_analysis, dtype=float)
    on = np.ones(w.size, bool)
    on[np.asarray(cosupport, dtype=int)] = False
    tail = np.abs(w[~on]).sum()
    variant = Variant(variant)
    if variant is Variant.PLAIN:
        return float(np.abs(w[on]).sum() - rho * tail)
    lhs = float(np.linalg.norm(w[on]))
    rhs = rho / math.sqrt(s) * tail
    if variant is Variant.ROBUST:
        rhs += tau * mv_norm
    return lhs - rhs


def nsp_check(M, frame: Frame, s: int, rho: float, variant, n_samples: int,
              rng: np.random.Generator, tau: float | None = None) -> NspReport:
    """Search for a violation of the null space property among random vectors.

    The kernel variants draw unit vectors of ``ker M`` (Gaussian coefficients
    in an orthonormal kernel basis); the robust variant draws unit vectors of
    R^d and needs `tau`. Each vector is checked at its `worst_cosupport`. An
    empty kernel makes the kernel variants vacuously hold (``n_tested = 0``).
    """
    variant = Variant(variant)
    if not 0 < rho < 1:
        raise ValueError(f"need 0 < rho < 1, got {rho}")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    omega = frame.omega
    if variant is Variant.ROBUST:
        if tau is None:
            raise ValueError("robust variant needs tau")
        V = rng.standard_normal((n_samples, frame.d))
    else:
        N = null_space(M)
        if N.shape[1] == 0 or n_samples == 0:
            return NspReport(variant, Verdict.NOT_FALSIFIED, -math.inf, None, None, 0)
        V = rng.standard_normal((n_samples, N.shape[1])) @ N.T
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    W = V @ omega.T
    mv = np.linalg.norm(V @ M.T, axis=1) if variant is Variant.ROBUST else np.zeros(len(V))
    best = (-math.inf, None, None)
    for v, w, r in zip(V, W, mv):
        lam = worst_cosupport(w, s)
        margin = nsp_margin(w, lam, s, rho, variant, r, tau or 0.0)
        if margin > best[0]:
            best = (margin, v, lam)
    status = Verdict.FALSIFIED if best[0] > 0 else Verdict.NOT_FALSIFIED
    return NspReport(variant, status, best[0], best[1], best[2], len(V))


def implied_errors(rho: float, A: float, s: int, sigma_s_value: float,
                   tau: float | None = None, eta: float = 0.0, m: int | None = None,
                   B: float | None = None, gaussian_tau: bool = False) -> dict:
    """Recovery error radii implied by a null space property with constant `rho`.

    Thin wrapper over `cosparse.bounds.error_bounds`.
    """
    q = BoundQuery(A=A, B=A if B is None else B, s=s, p=max(s, 1), eps=0.5,
                   rho=rho, tau=tau, eta=eta)
    return error_bounds(q, sigma_s_value, m, gaussian_tau)
