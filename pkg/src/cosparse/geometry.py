"""Gaussian widths, descent cones and the escape-through-a-mesh check."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import e_m
from .errors import RejectionStall
from .frames import Frame
from .model import CosparseSignal

__all__ = [
    "WidthEstimate",
    "TangentConeSampler",
    "EscapeResult",
    "soft_threshold",
    "soft_threshold_moment",
    "polar_cone_sqdist",
    "polar_cone_sqdist_batch",
    "width_polar_mc",
    "width_bound_cone",
    "width_bound_D",
    "d_norm",
    "d_gauge",
    "width_D_mc",
    "tangent_dir_test",
    "sample_tangent_directions",
    "escape_check",
    "escape_frequency",
]


@dataclass(frozen=True)
class WidthEstimate:
    """Monte-Carlo mean with its standard error."""

    mean: float
    std_err: float
    n_samples: int

    @classmethod
    def from_samples(cls, values) -> "WidthEstimate":
        v = np.asarray(values, dtype=float)
        n = v.size
        if n < 2:
            raise ValueError("need at least two samples")
        return cls(float(v.mean()), float(v.std(ddof=1) / math.sqrt(n)), n)

    @property
    def variance(self) -> float:
        """Sample variance of the underlying draws."""
        return self.std_err ** 2 * self.n_samples

    def merge(self, other: "WidthEstimate") -> "WidthEstimate":
        """Pooled estimate of two independent batches (Chan/Welford update)."""
        n = self.n_samples + other.n_samples
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n_samples / n
        m2 = (self.variance * (self.n_samples - 1) + other.variance * (other.n_samples - 1)
              + delta ** 2 * self.n_samples * other.n_samples / n)
        return WidthEstimate(mean, math.sqrt(m2 / (n - 1) / n), n)


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``, elementwise."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def soft_threshold_moment(t: float, n_samples: int, rng: np.random.Generator,
                          batch: int = 250_000) -> WidthEstimate:
    """Monte-Carlo estimate of ``E S_t(g)^2`` for standard normal ``g``."""
    est = None
    left = n_samples
    while left > 0:
        k = min(batch, left)
        part = WidthEstimate.from_samples(soft_threshold(rng.standard_normal(k), t) ** 2)
        est = part if est is None else est.merge(part)
        left -= k
    return est


# ---------------------------------------------------------------------------
# distance to the polar cone of the l1 descent cone


def _split(g, support, signs):
    g = np.asarray(g, dtype=float)
    support = np.asarray(support, dtype=int)
    signs = np.asarray(signs, dtype=float)
    if signs.shape != support.shape:
        raise ValueError("signs must be given for each support index")
    off = np.ones(g.shape[-1], bool)
    off[support] = False
    h = g[..., support] * signs
    c = np.abs(g[..., off])
    return h, c


def _polar_objective(t, h, c):
    return float(np.sum((h - t) ** 2) + np.sum(np.maximum(c - t, 0.0) ** 2))


def polar_cone_sqdist(g, support, signs, tol: float = 1e-10) -> float:
    """Squared distance from `g` to the polar cone of ``K(Omega x)``.

    The cone is the union over ``t >= 0`` of boxes with ``z_i = t * sgn_i`` on
    the support and ``|z_i| <= t`` off it, so the distance is
    ``min_t f(t)``, ``f(t) = sum_S (g_i - t sgn_i)^2 + sum_{S^c} S_t(g_i)^2``.
    ``f`` is convex and piecewise quadratic with breakpoints at ``|g_i|``,
    ``i`` off the support. A ternary search locates the minimizer, then the
    quadratic piece around it is minimized in closed form.
    """
    h, c = _split(g, support, signs)
    s = h.size
    hi = float(np.max(np.abs(g), initial=0.0)) + math.sqrt(s)
    lo = 0.0
    while hi - lo > tol:
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if _polar_objective(a, h, c) <= _polar_objective(b, h, c):
            hi = b
        else:
            lo = a
    t0 = 0.5 * (lo + hi)
    best_t, best_f = t0, _polar_objective(t0, h, c)
    # exact refinement on the quadratic pieces adjacent to t0
    for probe in (t0 - 2 * tol, t0 + 2 * tol):
        probe = max(probe, 0.0)
        active = c > probe
        below = c[~active]
        above = c[active]
        seg_lo = max(float(below.max(initial=0.0)), 0.0)
        seg_hi = float(above.min(initial=np.inf))
        k = s + int(active.sum())
        if k == 0:
            t = seg_lo
        else:
            t = (h.sum() + above.sum()) / k
            t = min(max(t, seg_lo), seg_hi)
        f = _polar_objective(t, h, c)
        if f < best_f:
            best_t, best_f = t, f
    return best_f


def polar_cone_sqdist_batch(G, support, signs) -> np.ndarray:
    """Exact `polar_cone_sqdist` for each row of `G`, vectorized.

    Sorts the off-support magnitudes and evaluates the unconstrained minimizer
    of every quadratic piece, clipped to its segment.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h, c = _split(G, support, signs)
    n, q = c.shape
    s = h.shape[1]
    c = -np.sort(-c, axis=1)  # descending
    sh = h.sum(axis=1)
    sh2 = (h ** 2).sum(axis=1)
    zeros = np.zeros((n, 1))
    csum = np.hstack([zeros, np.cumsum(c, axis=1)])         # top-k sums, k = 0..q
    csum2 = np.hstack([zeros, np.cumsum(c ** 2, axis=1)])
    upper = np.hstack([np.full((n, 1), np.inf), c])         # segment k: [c_(k+1), c_(k)]
    lower = np.hstack([c, zeros])
    k = np.arange(q + 1)
    weight = s + k
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(weight > 0, (sh[:, None] + csum) / weight, np.inf)
    t = np.clip(t, lower, upper)
    # segment k=0 with s=0 is flat only when t -> inf; its value is sh2 = 0
    t = np.where(np.isinf(t), 0.0, t)
    f = sh2[:, None] - 2 * t * sh[:, None] + s * t ** 2 + csum2 - 2 * t * csum + k * t ** 2
    if s == 0:
        f[:, 0] = 0.0
    return np.maximum(f.min(axis=1), 0.0)


def width_polar_mc(support, signs, p: int, n_samples: int,
                   rng: np.random.Generator, batch: int = 20_000) -> WidthEstimate:
    """Monte-Carlo mean of the distance to the polar cone.

    This is the majorant of ``l(K(Omega x) cap B_2^p)``; by Moreau's
    decomposition it also equals the expected support value over the cone
    intersected with the ball.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    est = None
    left = n_samples
    while left > 0:
        k = min(batch, left)
        d = np.sqrt(polar_cone_sqdist_batch(rng.standard_normal((k, p)), support, signs))
        part = WidthEstimate.from_samples(d) if k >= 2 else None
        if part is not None:
            est = part if est is None else est.merge(part)
        left -= k
    return est


def width_bound_cone(s: int, p: int) -> float:
    """``sqrt(2 s ln(e p / s))``."""
    if not 1 <= s <= p:
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    return math.sqrt(2 * s * math.log(math.e * p / s))


def width_bound_D(s: int, p: int) -> float:
    """``sqrt(2 s ln(e p / s)) + sqrt(s)``, the width bound of the set D."""
    return width_bound_cone(s, p) + math.sqrt(s)


# ---------------------------------------------------------------------------
# the set D


def d_norm(x, s: int) -> float:
    """Norm whose unit ball is the convex hull of s-sparse unit vectors.

    Sum of the l2 norms of consecutive blocks of size `s` in the non-increasing
    rearrangement of ``|x|`` (the last block may be shorter).
    """
    a = np.abs(np.asarray(x, dtype=float))
    if not 1 <= s <= max(a.size, 1):
        raise ValueError(f"need 1 <= s <= p, got s={s}")
    a = -np.sort(-a)
    return float(sum(np.linalg.norm(a[i:i + s]) for i in range(0, a.size, s)))


def d_gauge(x, s: int) -> float:
    """Gauge (Minkowski functional) of the convex hull of s-sparse unit vectors.

    This is the k-support norm with ``k = s``: with ``z`` the non-increasing
    rearrangement of ``|x|`` and ``r`` the unique index in ``0..s-1`` with
    ``z_{s-r-1} > T_r / (r+1) >= z_{s-r}`` where ``T_r = sum_{i >= s-r} z_i``
    (0-based, ``z_{-1} = inf``), the value is
    ``sqrt(sum_{i < s-r-1} z_i^2 + T_r^2 / (r+1))``. It never exceeds
    `d_norm`, which sums block norms of one particular decomposition.
    """
    z = -np.sort(-np.abs(np.asarray(x, dtype=float)))
    p = z.size
    if not 1 <= s <= max(p, 1):
        raise ValueError(f"need 1 <= s <= p, got s={s}")
    if p == 0 or z[0] == 0:
        return 0.0
    tails = np.cumsum(z[::-1])[::-1]
    for r in range(s):
        head = z[s - r - 2] if s - r - 2 >= 0 else math.inf
        avg = tails[s - r - 1] / (r + 1)
        # relative slack absorbs rounding in the tail sums at exact ties
        if head >= avg * (1 - 1e-12) and avg >= z[s - r - 1] * (1 - 1e-12):
            return float(math.sqrt(np.sum(z[: s - r - 1] ** 2) + tails[s - r - 1] ** 2 / (r + 1)))
    return float(math.sqrt(tails[0] ** 2 / s))  # not reached in exact arithmetic


def width_D_mc(p: int, s: int, n_samples: int, rng: np.random.Generator,
               batch: int = 20_000) -> WidthEstimate:
    """Monte-Carlo Gaussian width of D: mean l2 norm of the s largest ``|g_i|``."""
    if not 1 <= s <= p:
        raise ValueError(f"need 1 <= s <= p, got s={s}, p={p}")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    est = None
    left = n_samples
    while left > 0:
        k = min(batch, left)
        g2 = rng.standard_normal((k, p)) ** 2
        top = np.partition(g2, p - s, axis=1)[:, p - s:] if s < p else g2
        part = WidthEstimate.from_samples(np.sqrt(top.sum(axis=1)))
        est = part if est is None else est.merge(part)
        left -= k
    return est


# ---------------------------------------------------------------------------
# descent cone of v -> ||Omega v||_1 at x


@dataclass(frozen=True, eq=False)
class TangentConeSampler:
    frame: Frame
    x: np.ndarray
    support: np.ndarray
    cosupport: np.ndarray
    signs: np.ndarray

    @classmethod
    def at(cls, frame: Frame, x, tol: float = 1e-10) -> "TangentConeSampler":
        x = np.asarray(x, dtype=float)
        w = frame.omega @ x
        on = np.abs(w) > tol
        return cls(frame, x, np.flatnonzero(on), np.flatnonzero(~on), np.sign(w[on]))

    def derivative(self, W) -> np.ndarray:
        """One-sided directional derivative of ``||Omega .||_1`` at x along W.

        `W` is one direction or a stack of directions (rows).
        """
        V = np.atleast_2d(W) @ self.frame.omega.T
        return V[:, self.support] @ self.signs + np.abs(V[:, self.cosupport]).sum(axis=1)


def tangent_dir_test(sampler: TangentConeSampler, w, tol: float = 1e-12) -> bool:
    """True when `w` is a non-ascent direction of ``||Omega .||_1`` at the anchor."""
    w = np.asarray(w, dtype=float)
    if not np.linalg.norm(w) > 0:
        raise ValueError("direction must be nonzero")
    return bool(sampler.derivative(w)[0] <= tol)


def sample_tangent_directions(sampler: TangentConeSampler, n_dirs: int,
                              rng: np.random.Generator,
                              max_proposals: int = 1_000_000,
                              batch: int = 10_000) -> np.ndarray:
    """Unit directions of the descent cone, by rejection sampling.

    Proposals are ``g - lam * x`` with ``g`` standard Gaussian and ``lam``
    uniform on ``[0, lam_max]``; ``lam = 0`` gives plain Gaussian proposals,
    which alone are accepted too rarely when the cone is thin. Returns an
    ``(n_dirs, d)`` array.
    """
    frame, x = sampler.frame, sampler.x
    d = frame.d
    anchor = float(np.abs(frame.omega @ x).sum())
    lam_max = 0.0 if anchor == 0 else math.sqrt(frame.p * frame.upper_bound * d) / anchor
    accepted = []
    n_acc = 0
    tried = 0
    while n_acc < n_dirs and tried < max_proposals:
        k = min(batch, max_proposals - tried)
        W = rng.standard_normal((k, d)) - rng.uniform(0, lam_max, size=(k, 1)) * x
        keep = W[sampler.derivative(W) <= 1e-12]
        accepted.append(keep)
        n_acc += keep.shape[0]
        tried += k
    if n_acc < n_dirs:
        raise RejectionStall(f"accepted {n_acc} of {n_dirs} directions in {tried} proposals")
    W = np.vstack(accepted)[:n_dirs]
    return W / np.linalg.norm(W, axis=1, keepdims=True)


@dataclass(frozen=True)
class EscapeResult:
    frequency: float
    std_err: float
    threshold: float
    width: WidthEstimate
    bound: float
    n_trials: int


def escape_check(frame: Frame, signal: CosparseSignal | np.ndarray, m: int, t: float,
                 n_dirs: int, n_trials: int, rng: np.random.Generator,
                 n_width_samples: int = 10_000, directions=None) -> EscapeResult:
    """Empirical check of the frame version of Gordon's escape theorem.

    A finite set T of unit descent directions at the signal is fixed first
    (or passed as `directions`). Its analysis width ``l(Omega(T))`` is
    estimated with `n_width_samples` Gaussian draws, exactly per draw since T
    is finite. Then over `n_trials` Gaussian ``m x d`` matrices the event
    ``min_{v in T} ||M v|| > E_m - l / sqrt(A) - t`` is counted; the theorem
    says it has probability at least ``1 - exp(-t^2 / 2)``.
    """
    if n_trials < 1:
        raise ValueError("need n_trials >= 1")
    x = signal.x if isinstance(signal, CosparseSignal) else np.asarray(signal, float)
    if directions is None:
        if n_dirs < 1:
            raise ValueError("need n_dirs >= 1")
        sampler = TangentConeSampler.at(frame, x)
        T = sample_tangent_directions(sampler, n_dirs, rng)
    else:
        T = np.atleast_2d(np.asarray(directions, dtype=float))
        T = T / np.linalg.norm(T, axis=1, keepdims=True)
    image = frame.omega @ T.T  # p x |T|
    sups = []
    left = n_width_samples
    while left > 0:
        k = min(10_000, left)
        sups.append((rng.standard_normal((k, frame.p)) @ image).max(axis=1))
        left -= k
    width = WidthEstimate.from_samples(np.concatenate(sups))
    threshold = e_m(m) - width.mean / math.sqrt(frame.lower_bound) - t
    hits = 0
    for _ in range(n_trials):
        M = rng.standard_normal((m, frame.d))
        if np.linalg.norm(M @ T.T, axis=0).min() > threshold:
            hits += 1
    freq = hits / n_trials
    return EscapeResult(freq, math.sqrt(freq * (1 - freq) / n_trials), threshold, width,
                        1 - math.exp(-t * t / 2), n_trials)


def escape_frequency(frame: Frame, signal, m: int, t: float, n_dirs: int,
                     n_trials: int, rng: np.random.Generator, **kwargs) -> float:
    """Frequency of the escape event; see `escape_check`."""
    return escape_check(frame, signal, m, t, n_dirs, n_trials, rng, **kwargs).frequency
