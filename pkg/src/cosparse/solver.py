"""Analysis basis pursuit solvers.

Both problems::

    min ||Omega z||_1  s.t.  M z = y               (equality constrained)
    min ||Omega z||_1  s.t.  ||M z - y||_2 <= eta   (noise constrained)

are solved by a first-order primal-dual (Chambolle-Pock) iteration on the
stacked operator ``K = [Omega; M]`` with ``F(u, v) = ||u||_1 + i_C(v)``, where
``C`` is ``{y}`` or the ball of radius ``eta`` around ``y``, and ``G = 0``.

Stopping is certificate based. Every ``check_every`` iterations the current
primal and dual iterates suggest a cosupport; the iterate is projected onto the
corresponding face of the feasible set and kept only if :func:`certify` (a
dual-certificate check that does not look at the iteration at all) reports a
gap below ``tol_gap``. For the equality problem, when no guessed face
certifies, a simplex crossover started from the iterate pivots along edges of
the feasible polyhedron to an optimal vertex.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from .errors import RankDeficientM
from .frames import Frame
from .model import null_space

__all__ = [
    "Status",
    "SolverOptions",
    "SolveResult",
    "solve_abp",
    "solve_abpdn",
    "certify",
    "oracle_subgradient",
]

log = logging.getLogger(__name__)

SUPPORT_RTOL = 1e-7
RANK_RTOL = 1e-10
TRACE_COLUMNS = ("iter", "objective", "feas_residual", "gap")


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverOptions:
    """Iteration budget, tolerances and step-size parameters.

    ``tol_feas=None`` means ``1e-8 * ||y||_2`` (or ``1e-8`` when ``y = 0``).
    ``step_ratio`` is ``sigma / tau``; the product is fixed by the operator norm.
    ``None`` picks 30 for the equality problem and 100 for the noise
    constrained one, which were the fastest settings on desk-scale instances.
    """

    max_iters: int = 50_000
    tol_feas: float | None = None
    tol_gap: float = 1e-6
    over_relaxation: float = 1.0
    step_ratio: float | None = None
    check_every: int = 50
    trace: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol_feas is not None and self.tol_feas <= 0:
            raise ValueError("tol_feas must be > 0")
        if self.tol_gap <= 0:
            raise ValueError("tol_gap must be > 0")
        if not 0.0 <= self.over_relaxation <= 1.0:
            raise ValueError("over_relaxation must lie in [0, 1]")
        if self.step_ratio is not None and self.step_ratio <= 0:
            raise ValueError("step_ratio must be > 0")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")

    def feas_tol(self, y) -> float:
        if self.tol_feas is not None:
            return self.tol_feas
        ny = float(np.linalg.norm(y))
        return 1e-8 * ny if ny > 0 else 1e-8


@dataclass(frozen=True, eq=False)
class SolveResult:
    z: np.ndarray
    objective: float
    feas_residual: float
    cert_gap: float
    iters: int
    status: Status
    trace: np.ndarray | None = None

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def as_dict(self):
        return {
            "z": self.z.tolist(),
            "objective": self.objective,
            "feas_residual": self.feas_residual,
            "cert_gap": self.cert_gap,
            "iters": self.iters,
            "status": str(self.status),
        }


# ---------------------------------------------------------------------------
# certificate


class _Certifier:
    """Dual-certificate check with the kernel of ``M`` factored once."""

    def __init__(self, omega, M, y, eta):
        self.omega = omega
        self.M = M
        self.y = y
        self.eta = float(eta)
        self.kernel = null_space(M) if self.eta == 0 else None

    def __call__(self, z) -> float:
        omega, eta = self.omega, self.eta
        w = omega @ z
        top = np.abs(w).max(initial=0.0)
        on = np.abs(w) > SUPPORT_RTOL * top if top > 0 else np.zeros(w.size, bool)
        fixed = omega[on].T @ np.sign(w[on])
        free = omega[~on].T
        if eta == 0:
            N = self.kernel
            if N.shape[1] == 0:
                resid, u = 0.0, np.sign(w[~on])
            else:
                resid, u = _box_lsq(N.T @ free, N.T @ fixed, free.shape[1], 0)
        else:
            r = self.M @ z - self.y
            nr = np.linalg.norm(r)
            if nr > 0 and nr >= eta * (1 - 1e-6):
                cols = np.column_stack([free, self.M.T @ (r / nr)])
                resid, u = _box_lsq(cols, fixed, free.shape[1], 1)
            else:
                resid, u = _box_lsq(free, fixed, free.shape[1], 0)
        wc = w[~on]
        defect = float(np.sum(np.abs(wc) - u * wc))
        l1 = float(np.abs(w).sum())
        return float(resid + (defect / l1 if l1 > 0 else 0.0))


def _box_lsq(A, b, n_box, n_pos):
    """min ||A u + b|| with the first n_box variables in [-1, 1], the rest >= 0.

    Returns the residual norm and the box part of the minimizer.
    """
    if A.shape[1] == 0:
        return float(np.linalg.norm(b)), np.zeros(0)
    lb = np.r_[-np.ones(n_box), np.zeros(n_pos)]
    ub = np.r_[np.ones(n_box), np.full(n_pos, np.inf)]
    res = lsq_linear(A, -b, bounds=(lb, ub), method="bvls")
    resid = float(np.linalg.norm(A @ res.x + b))
    return resid, res.x[:n_box]


def certify(frame: Frame, M, z, y, eta: float = 0.0) -> float:
    """Residual of the best dual certificate for `z`.

    A certificate is ``u`` in R^p with ``u_i = sgn((Omega z)_i)`` on the
    numerical support (``|(Omega z)_i| > 1e-7 * ||Omega z||_inf``) and
    ``|u_i| <= 1`` elsewhere, such that ``Omega^T u`` lies in the range of
    ``M^T`` (equality constraint) or in ``-cone(M^T (Mz - y))`` (active noise
    constraint; zero when the constraint is slack). The box-constrained least
    squares problem is solved exactly by BVLS.

    The returned gap is the minimal residual norm plus the complementary
    slackness defect ``sum_{i off support} (|w_i| - u_i w_i)`` divided by
    ``||Omega z||_1``. It is zero exactly when `z` satisfies the first order
    optimality conditions.
    """
    M = np.asarray(M, dtype=float)
    return _Certifier(frame.omega, M, np.asarray(y, float), eta)(np.asarray(z, float))


# ---------------------------------------------------------------------------
# primal-dual iteration


def _operator_norm(K, iters=100):
    v = np.ones(K.shape[1]) / np.sqrt(K.shape[1])
    est = 0.0
    for _ in range(iters):
        u = K.T @ (K @ v)
        nu = np.linalg.norm(u)
        if nu == 0:
            return 0.0
        v = u / nu
        est = nu
    return float(np.sqrt(est))


def _cosupport_guesses(omega, z, a, n_vertex=None):
    # n_vertex: cosupport size of a generic vertex of the feasible set
    w = np.abs(omega @ z)
    top = w.max(initial=0.0)
    guesses = [np.flatnonzero(np.abs(a) < 1 - 1e-9)]
    if top > 0:
        guesses.append(np.flatnonzero(w <= 1e-6 * top))
    else:
        guesses.append(np.arange(w.size))
    if n_vertex:
        guesses.append(np.sort(np.argsort(w, kind="stable")[:n_vertex]))
        guesses.append(np.sort(np.argsort(np.abs(a), kind="stable")[:n_vertex]))
    out = []
    for g in guesses:
        if not any(np.array_equal(g, h) for h in out):
            out.append(g)
    return out


class _Problem:
    """Shared state of one solve: data, scaling and face projection."""

    def __init__(self, frame, M, y, eta, opts):
        self.omega = frame.omega
        self.M = M
        self.y = y
        self.eta = float(eta)
        self.opts = opts
        self.tol_feas = opts.feas_tol(y)
        self.certifier = _Certifier(self.omega, M, y, eta)

    def feas(self, z):
        r = float(np.linalg.norm(self.M @ z - self.y))
        return r if self.eta == 0 else max(0.0, r - self.eta)

    def project_equality(self, z, lam):
        # smallest correction putting z on {W z = c, Omega_lam z = 0}
        A = np.vstack([self.W, self.omega[lam]])
        rhs = np.concatenate([self.c - self.W @ z, -(self.omega[lam] @ z)])
        dz = np.linalg.lstsq(A, rhs, rcond=None)[0]
        return z + dz

    def project_ball(self, z, lam):
        # minimize the sign-fixed l1 objective over {Omega_lam z = 0} and the
        # eta-ball: linear objective over an ellipsoid, closed form
        basis = null_space(self.omega[lam]) if lam.size else np.eye(z.size)
        if basis.shape[1] == 0:
            return np.zeros_like(z)
        on = np.ones(self.omega.shape[0], bool)
        on[lam] = False
        w = self.omega @ z
        g = basis.T @ (self.omega[on].T @ np.sign(w[on]))
        A = self.M @ basis
        u_ls, *_ = np.linalg.lstsq(A, self.y, rcond=None)
        rho0 = float(np.linalg.norm(A @ u_ls - self.y))
        if rho0 > self.eta + self.tol_feas:
            return None
        slack = np.sqrt(max(self.eta ** 2 - rho0 ** 2, 0.0))
        sv = np.linalg.svd(A, compute_uv=False)
        if sv.size < A.shape[1] or sv[-1] <= RANK_RTOL * sv[0]:
            return None
        h = np.linalg.solve(A.T @ A, g)
        gh = float(g @ h)
        u = u_ls if gh <= 0 else u_ls - slack * h / np.sqrt(gh)
        return basis @ u

    def crossover(self, z, max_pivots):
        """Simplex pivots from `z` to an optimal vertex of the equality problem.

        Starts at the vertex whose cosupport holds the ``d - m`` smallest
        entries of ``|Omega z|``. At a vertex with cosupport ``lam`` the
        multipliers ``u`` solve ``(Omega_lam N)^T u = -N^T Omega_on^T sgn``
        (``N`` a kernel basis of ``M``); an entry with ``|u_i| > 1`` names a row
        whose release lowers the objective at rate ``|u_i| - 1`` along an edge,
        which is followed until the next support entry hits zero.
        """
        N = self.certifier.kernel
        k = N.shape[1]
        if k == 0:
            return z, None
        omega = self.omega
        lam = np.argsort(np.abs(omega @ z), kind="stable")[:k]
        z = self.project_equality(z, np.sort(lam))
        stalls = 0
        for _ in range(max_pivots):
            w = omega @ z
            on = np.ones(w.size, bool)
            on[lam] = False
            g = N.T @ (omega[on].T @ np.sign(w[on]))
            B = omega[lam] @ N
            try:
                u = np.linalg.solve(B.T, -g)
            except np.linalg.LinAlgError:
                break
            excess = np.abs(u) - 1.0
            if excess.max() <= 1e-12:
                break
            # Dantzig's rule, Bland's rule after degenerate pivots
            if stalls < 2:
                i = int(np.argmax(excess))
            else:
                cand = np.flatnonzero(excess > 1e-12)
                i = int(cand[np.argmin(lam[cand])])
            e = np.zeros(k)
            e[i] = np.sign(u[i])
            try:
                v = N @ np.linalg.solve(B, e)
            except np.linalg.LinAlgError:
                break
            dv = omega @ v
            idx = np.flatnonzero(on & (w * dv < 0))
            if idx.size == 0:
                break
            steps = -w[idx] / dv[idx]
            j = int(np.argmin(steps))
            step = steps[j]
            stalls = stalls + 1 if step <= 1e-15 else 0
            z = z + step * v
            lam[i] = idx[j]
        return self.project_equality(z, np.sort(lam)), np.sort(lam)

    def polish(self, z, a):
        best = None
        n_vertex = max(self.omega.shape[1] - self.M.shape[0], 0)
        for lam in _cosupport_guesses(self.omega, z, a, n_vertex):
            zp = self.project_equality(z, lam) if self.eta == 0 else self.project_ball(z, lam)
            if zp is None or not np.all(np.isfinite(zp)):
                continue
            if self.feas(zp) > self.tol_feas:
                continue
            gap = self.certifier(zp)
            if best is None or gap < best[1]:
                best = (zp, gap)
            if gap <= self.opts.tol_gap:
                return best
        if self.eta == 0:
            zp, _ = self.crossover(z, self.omega.shape[0])
            if np.all(np.isfinite(zp)) and self.feas(zp) <= self.tol_feas:
                gap = self.certifier(zp)
                if best is None or gap < best[1]:
                    best = (zp, gap)
        return best

    def result(self, z, iters, gap=None, status=Status.MAX_ITERS, trace=None):
        if gap is None:
            gap = self.certifier(z)
        return SolveResult(
            z=z,
            objective=float(np.abs(self.omega @ z).sum()),
            feas_residual=self.feas(z),
            cert_gap=gap,
            iters=iters,
            status=status,
            trace=None if trace is None else np.array(trace, dtype=float).reshape(-1, 4),
        )

    def run(self, W, c, radius, z0, default_ratio):
        """Chambolle-Pock with ``G = 0`` on ``K = [Omega; W]``."""
        self.W, self.c = W, c
        omega, opts = self.omega, self.opts
        theta = opts.over_relaxation
        ratio = opts.step_ratio if opts.step_ratio is not None else default_ratio
        K = np.vstack([omega, W])
        L = 1.01 * _operator_norm(K)
        tau = 1.0 / (L * ratio)
        sigma = ratio / L

        z = z0.copy()
        zbar = z.copy()
        a = np.zeros(omega.shape[0])
        b = np.zeros(W.shape[0])
        trace = [] if opts.trace else None
        best = None
        for k in range(1, opts.max_iters + 1):
            a = np.clip(a + sigma * (omega @ zbar), -1.0, 1.0)
            b = b + sigma * (W @ zbar - c)
            if radius > 0:
                nb = np.linalg.norm(b)
                if nb > 0:
                    b *= max(0.0, 1.0 - sigma * radius / nb)
            step = omega.T @ a + W.T @ b
            z_new = z - tau * step
            zbar = z_new + theta * (z_new - z)
            z = z_new
            if trace is not None:
                trace.append((k, np.abs(omega @ z).sum(), self.feas(z),
                              np.linalg.norm(step)))
            if k % opts.check_every == 0 or k == opts.max_iters:
                cand = self.polish(z, a)
                if cand is not None:
                    if best is None or cand[1] < best[1]:
                        best = cand
                    if cand[1] <= opts.tol_gap:
                        return self.result(cand[0], k, cand[1], Status.CONVERGED, trace)
        log.info("primal-dual iteration hit max_iters=%d", opts.max_iters)
        if best is not None:
            return self.result(best[0], opts.max_iters, best[1], Status.MAX_ITERS, trace)
        return self.result(z, opts.max_iters, None, Status.MAX_ITERS, trace)


def _check_inputs(frame, M, y):
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if M.ndim != 2 or M.shape[1] != frame.d:
        raise ValueError(f"M must have {frame.d} columns, got shape {M.shape}")
    if y.shape[0] != M.shape[0]:
        raise ValueError(f"y has length {y.shape[0]}, M has {M.shape[0]} rows")
    return M, y


def solve_abp(frame: Frame, M, y, opts: SolverOptions | None = None) -> SolveResult:
    """Solve ``min ||Omega z||_1 s.t. M z = y``.

    `M` must have full row rank ``m <= d``. Internally the constraint is
    replaced by the equivalent ``V^T z = Sigma^-1 U^T y`` from the thin SVD of
    `M`, which has orthonormal rows; feasibility is always reported against
    the original ``M`` and ``y``.
    """
    opts = opts or SolverOptions()
    M, y = _check_inputs(frame, M, y)
    m, d = M.shape
    if m > d:
        raise RankDeficientM(f"need m <= d for the equality problem, got m={m}, d={d}")
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    if sv[0] == 0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientM("measurement matrix does not have full row rank")
    c = (U.T @ y) / sv
    prob = _Problem(frame, M, y, 0.0, opts)
    return prob.run(Vt, c, 0.0, Vt.T @ c, 30.0)


def solve_abpdn(frame: Frame, M, y, eta: float,
                opts: SolverOptions | None = None) -> SolveResult:
    """Solve ``min ||Omega z||_1 s.t. ||M z - y||_2 <= eta``.

    The constraint is rescaled by ``||M|| / ||Omega||`` (an exact equivalence)
    so both blocks of the stacked operator have comparable norm. Unlike the
    equality problem, ``m > d`` is accepted as long as ``M`` has full rank.
    """
    opts = opts or SolverOptions()
    if eta < 0:
        raise ValueError(f"need eta >= 0, got {eta}")
    M, y = _check_inputs(frame, M, y)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientM("measurement matrix does not have full rank")
    prob = _Problem(frame, M, y, eta, opts)
    if np.linalg.norm(y) <= eta:
        z = np.zeros(frame.d)
        gap = prob.certifier(z)
        if gap <= opts.tol_gap:
            return prob.result(z, 0, gap, Status.CONVERGED, [] if opts.trace else None)
    scale = sv[0] / np.sqrt(frame.upper_bound)
    W, c = M / scale, y / scale
    z0 = np.linalg.lstsq(M, y, rcond=None)[0]
    return prob.run(W, c, eta / scale, z0, 100.0)


# ---------------------------------------------------------------------------
# slow reference


def oracle_subgradient(frame: Frame, M, y, iters: int = 20_000,
                       epoch: int = 200) -> np.ndarray:
    """Reference minimizer of the equality problem by projected subgradients.

    The iteration runs in coordinates of the affine feasible set
    ``z = z0 + N w`` (``N`` an orthonormal basis of ``ker M``), so the
    projection is exact. Within an epoch the normalized step is ``c / sqrt(k)``;
    each epoch restarts from the best point found with ``c`` halved. Meant
    for small instances only.
    """
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    omega = frame.omega
    z0 = np.linalg.lstsq(M, y, rcond=None)[0]
    N = null_space(M)
    if N.shape[1] == 0:
        return z0
    B = omega @ N
    off = omega @ z0
    w = np.zeros(N.shape[1])
    best, f_best = w.copy(), float(np.abs(off).sum())
    g0 = np.linalg.norm(B.T @ np.sign(off))
    c = f_best / g0 if g0 > 0 else 1.0
    done = 0
    while done < iters:
        for k in range(1, min(epoch, iters - done) + 1):
            g = B.T @ np.sign(B @ w + off)
            ng = np.linalg.norm(g)
            if ng == 0:
                break
            w = w - (c / np.sqrt(k)) * (g / ng)
            f = float(np.abs(B @ w + off).sum())
            if f < f_best:
                f_best, best = f, w.copy()
        done += epoch
        w = best.copy()
        c *= 0.5
    return z0 + N @ best
