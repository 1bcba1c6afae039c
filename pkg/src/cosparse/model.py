"""Cosparse signals, best s-term approximation errors and Gaussian instances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyKernel
from .frames import Frame

__all__ = [
    "CosparseSignal",
    "SensingInstance",
    "cosparsity",
    "null_space",
    "synth_cosparse",
    "sigma_s",
    "gaussian_instance",
]

KERNEL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CosparseSignal:
    x: np.ndarray
    cosupport: np.ndarray
    cosparsity: int

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class SensingInstance:
    M: np.ndarray
    y: np.ndarray
    eta: float = 0.0
    truth: CosparseSignal | None = None

    @property
    def m(self) -> int:
        return self.M.shape[0]


def cosparsity(frame: Frame, x, tol: float = 0.0):
    """Cosparsity ``l`` of `x` and its cosupport (0-based, sorted).

    An index belongs to the cosupport when ``|<omega_i, x>| <= tol``.
    """
    v = frame.omega @ np.asarray(x, dtype=float)
    cosupport = np.flatnonzero(np.abs(v) <= tol)
    return int(cosupport.size), cosupport


def null_space(A, rtol: float = KERNEL_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of ``ker A`` via the SVD.

    Singular values at or below ``rtol * sigma_max`` count as zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(A, full_matrices=True)
    if sv.size == 0 or sv[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(sv > rtol * sv[0]))
    return vt[rank:].T.copy()


def synth_cosparse(frame: Frame, l: int, rng: np.random.Generator) -> CosparseSignal:
    """Random unit-norm signal annihilated by ``l`` randomly chosen frame rows.

    A cosupport of size `l` is drawn uniformly, an orthonormal basis of the
    kernel of those rows is formed, and a standard Gaussian combination of
    the basis is normalized to unit length.

    Raises
    ------
    EmptyKernel
        If the selected rows leave only the zero vector.
    """
    if not 0 <= l <= frame.p:
        raise ValueError(f"cosparsity must lie in [0, {frame.p}], got {l}")
    lam = np.sort(rng.choice(frame.p, size=l, replace=False))
    basis = null_space(frame.omega[lam])
    if basis.shape[1] == 0:
        raise EmptyKernel(
            f"rows of a cosupport of size {l} span R^{frame.d}; "
            f"no nonzero {l}-cosparse signal exists for this frame")
    c = rng.standard_normal(basis.shape[1])
    x = basis @ c
    x /= np.linalg.norm(x)
    achieved, cosupport = cosparsity(frame, x, KERNEL_TOL)
    return CosparseSignal(x, cosupport, achieved)


def sigma_s(v, s: int) -> float:
    """l1 error of the best s-term approximation: sum of the p - s smallest |v_i|."""
    a = np.abs(np.asarray(v, dtype=float))
    if not 0 <= s <= a.size:
        raise ValueError(f"s must lie in [0, {a.size}], got {s}")
    if s == a.size:
        return 0.0
    return float(np.sort(a)[: a.size - s].sum())


def gaussian_instance(frame: Frame, signal: CosparseSignal, m: int, eta: float,
                      rng: np.random.Generator) -> SensingInstance:
    """Draw ``M`` with i.i.d. N(0, 1) entries and observe ``y = M x + w``.

    For ``eta > 0`` the noise ``w`` is uniform on the sphere of radius `eta`.
    """
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if eta < 0:
        raise ValueError(f"need eta >= 0, got {eta}")
    M = rng.standard_normal((m, frame.d))
    y = M @ signal.x
    if eta > 0:
        w = rng.standard_normal(m)
        y = y + eta * w / np.linalg.norm(w)
    return SensingInstance(M, y, float(eta), signal)
