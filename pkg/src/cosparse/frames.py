"""Analysis operators (frames) and their exact frame bounds.

A frame is stored with its vectors as the *rows* of ``omega`` (p x d), so the
analysis representation of ``x`` is ``omega @ x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDraw, NotAFrame

__all__ = [
    "Frame",
    "frame_bounds",
    "make_frame",
    "tight_frame",
    "scaled_frame",
    "frame_with_ratio",
    "TIGHT_TOL",
    "RANK_TOL",
]

TIGHT_TOL = 1e-8
RANK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Frame:
    """Immutable analysis operator together with its frame bounds."""

    omega: np.ndarray
    lower_bound: float
    upper_bound: float
    seed: int | None = field(default=None)

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    @property
    def d(self) -> int:
        return self.omega.shape[1]

    @property
    def ratio(self) -> float:
        return self.upper_bound / self.lower_bound

    @property
    def is_tight(self) -> bool:
        return abs(self.upper_bound - self.lower_bound) <= TIGHT_TOL * self.upper_bound

    def __repr__(self):
        return (f"Frame(p={self.p}, d={self.d}, A={self.lower_bound:.6g}, "
                f"B={self.upper_bound:.6g})")


def frame_bounds(omega) -> tuple[float, float]:
    """Return the optimal frame bounds ``(A, B)`` of the rows of `omega`.

    These are the squared extreme singular values of `omega`, i.e. the extreme
    eigenvalues of ``omega.T @ omega``.

    Raises
    ------
    NotAFrame
        If ``p < d``, the matrix has non-finite entries, or it is numerically
        rank deficient (``A <= 1e-12 * B``).
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2:
        raise NotAFrame(f"expected a 2-d matrix, got shape {omega.shape}")
    p, d = omega.shape
    if p < d:
        raise NotAFrame(f"need p >= d, got p={p}, d={d}")
    if not np.all(np.isfinite(omega)):
        raise NotAFrame("matrix has non-finite entries")
    sv = np.linalg.svd(omega, compute_uv=False)
    A, B = float(sv[-1] ** 2), float(sv[0] ** 2)
    if B == 0.0 or A <= RANK_TOL * B:
        raise NotAFrame(f"rank deficient analysis operator (A={A:.3g}, B={B:.3g})")
    return A, B


def make_frame(omega, seed=None) -> Frame:
    """Wrap a matrix as a `Frame`, computing its bounds."""
    omega = np.array(omega, dtype=float)
    A, B = frame_bounds(omega)
    omega.setflags(write=False)
    return Frame(omega, A, B, seed)


def tight_frame(p: int, d: int, rng: np.random.Generator, seed=None) -> Frame:
    """Random tight frame with ``omega.T @ omega = I_d``.

    Rows are first drawn uniformly from the unit sphere of R^d; the returned
    operator is the orthonormal Q factor of that p x d matrix, i.e. an
    orthonormal basis of its range.
    """
    if p < d:
        raise NotAFrame(f"need p >= d, got p={p}, d={d}")
    for _ in range(3):
        X = rng.standard_normal((p, d))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        Q, R = np.linalg.qr(X)
        diag = np.abs(np.diag(R))
        if diag.min() > 1e-10 * diag.max():
            return make_frame(Q, seed)
    raise DegenerateDraw("random row matrix was rank deficient in 3 attempts")


def scaled_frame(base: Frame, row_scales) -> Frame:
    """Multiply row ``i`` of `base` by ``row_scales[i]`` and recompute bounds."""
    scales = np.asarray(row_scales, dtype=float)
    if scales.shape != (base.p,):
        raise ValueError(f"need {base.p} row scales, got shape {scales.shape}")
    if np.any(scales <= 0) or not np.all(np.isfinite(scales)):
        raise ValueError("row scales must be finite and positive")
    return make_frame(scales[:, None] * base.omega, base.seed)


def frame_with_ratio(base: Frame, ratio: float, rng: np.random.Generator,
                     rtol: float = 1e-10) -> Frame:
    """Non-tight frame obtained by log-uniform row scaling of `base`.

    Row scales are ``exp(gamma * u_i)`` with ``u_i ~ U(-1/2, 1/2)`` drawn once
    from `rng`; the spread ``gamma`` is found by bisection so that the
    resulting bound ratio ``B/A`` equals `ratio`.
    """
    if ratio < base.ratio * (1 - TIGHT_TOL):
        raise ValueError(f"target ratio {ratio} below the base ratio {base.ratio}")
    u = rng.uniform(-0.5, 0.5, size=base.p)

    def realized(gamma):
        return scaled_frame(base, np.exp(gamma * u)).ratio

    if realized(0.0) >= ratio:
        return base
    hi = 1.0
    while realized(hi) < ratio:
        hi *= 2.0
        if hi > 1e3:
            raise ValueError(f"cannot reach ratio {ratio} by row scaling")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if realized(mid) < ratio:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return scaled_frame(base, np.exp(hi * u))
