"""Slow, independent reference implementations used only by the tests."""
import itertools
import math

import numpy as np
from scipy import integrate, optimize, special, stats


def lp_analysis_bp(omega, M, y):
    """``min ||omega z||_1 s.t. M z = y`` as a linear program in (z, t)."""
    p, d = omega.shape
    c = np.concatenate([np.zeros(d), np.ones(p)])
    A_ub = np.block([[omega, -np.eye(p)], [-omega, -np.eye(p)]])
    b_ub = np.zeros(2 * p)
    A_eq = np.hstack([M, np.zeros((M.shape[0], p))])
    res = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=y,
                           bounds=[(None, None)] * d + [(0, None)] * p, method="highs")
    assert res.status == 0, res.message
    return res.x[:d], res.fun


def min_m_scan(rhs):
    """First m = 1, 2, ... with m^2 / (m + 1) >= rhs, by plain division."""
    m = 1
    while m * m / (m + 1) < rhs:
        m += 1
    return m


def rhs_nonuniform(A, B, s, p, eps):
    return 2 * B * s / A * (math.sqrt(math.log(math.e * p / s))
                            + math.sqrt(A * math.log(1 / eps) / (B * s))) ** 2


def rhs_uniform(A, B, s, p, eps, rho):
    f = 1 + (1 + 1 / rho) ** 2
    return 2 * B * s * f / A * (math.sqrt(math.log(math.e * p / s)) + 1 / math.sqrt(2)
                                + math.sqrt(A * math.log(1 / eps) / (B * s * f))) ** 2


def chi_mean(m):
    return stats.chi(m).mean()


def soft_threshold_moment_exact(t):
    """``E (|g| - t)_+^2`` for standard normal ``g`` by quadrature."""
    val, _ = integrate.quad(lambda x: 2 * (x - t) ** 2 * stats.norm.pdf(x), t, np.inf)
    return val


def polar_sqdist_grid(g, support, signs, n_grid=20001):
    """Squared distance to the polar cone by a fine grid over t plus a bounded refine."""
    g = np.asarray(g, float)
    on = np.zeros(g.size, bool)
    on[support] = True

    def f(t):
        return (np.sum((g[on] - t * np.asarray(signs)) ** 2)
                + np.sum(np.maximum(np.abs(g[~on]) - t, 0) ** 2))

    hi = np.abs(g).max() + 1 + (np.abs(g).sum() if on.any() else 0)
    ts = np.linspace(0, hi, n_grid)
    h = g[on] * np.asarray(signs)
    vals = (np.sum((h[None, :] - ts[:, None] * np.asarray(signs) * np.asarray(signs)) ** 2, axis=1)
            + np.sum(np.maximum(np.abs(g[~on])[None, :] - ts[:, None], 0) ** 2, axis=1))
    k = int(vals.argmin())
    lo, up = ts[max(k - 1, 0)], ts[min(k + 1, n_grid - 1)]
    res = optimize.minimize_scalar(f, bounds=(lo, up), method="bounded",
                                   options={"xatol": 1e-13})
    return min(vals[k], res.fun)


def nsp_violated_exhaustive(w, s, rho, variant, mv_norm=0.0, tau=0.0):
    """Whether some cosupport of size p - s violates the inequality at ``w``."""
    p = w.size
    for lam in itertools.combinations(range(p), p - s):
        lam = list(lam)
        on = np.ones(p, bool)
        on[lam] = False
        tail = np.abs(w[lam]).sum()
        if variant == "plain":
            margin = np.abs(w[on]).sum() - rho * tail
        else:
            margin = np.linalg.norm(w[on]) - rho / math.sqrt(s) * tail
            if variant == "robust":
                margin -= tau * mv_norm
        if margin > 0:
            return True
    return False


def e_m_gamma(m):
    return math.sqrt(2) * special.gamma((m + 1) / 2) / special.gamma(m / 2)


def sparse_hull_gauge(x, s):
    """Gauge of conv{s-sparse unit vectors} as the dual program.

    ``max <x, y>`` subject to ``||y_S||_2 <= 1`` for every ``#S = s``, solved
    by SLSQP (smooth convex constraints, small p only).
    """
    x = np.asarray(x, float)
    p = x.size
    subsets = [list(S) for S in itertools.combinations(range(p), s)]
    cons = [{"type": "ineq", "fun": (lambda y, S=S: 1 - np.sum(y[S] ** 2)),
             "jac": (lambda y, S=S: -2 * np.where(np.isin(np.arange(p), S), y, 0.0))}
            for S in subsets]
    best = -np.inf
    for y0 in (x / max(np.linalg.norm(x), 1e-300) / math.sqrt(p), np.zeros(p)):
        res = optimize.minimize(lambda y: -x @ y, y0, jac=lambda y: -x, constraints=cons,
                                method="SLSQP", options={"ftol": 1e-13, "maxiter": 500})
        best = max(best, -res.fun)
    return best
