"""Monte Carlo phase-transition harness.

For every number of measurements ``m`` in a grid, the harness scans the
analysis sparsity ``s`` upwards and records the largest ``s`` whose recovery
rate over independent trials reaches a target. Each trial draws a unit-norm
cosparse signal and a Gaussian matrix from a seed derived from
``(master_seed, s, m, trial)``, so results do not depend on execution order
or thread count.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .bounds import BoundQuery, m_nonuniform
from .errors import CosparseError
from .frames import Frame, frame_with_ratio, tight_frame
from .io import write_rows
from .model import gaussian_instance, synth_cosparse
from .solver import SolverOptions, solve_abp, solve_abpdn

__all__ = [
    "ExperimentConfig",
    "CellResult",
    "CurveRow",
    "PhaseCurve",
    "trial_rng",
    "build_frame",
    "run_cell",
    "phase_curve",
    "clean_frontier",
    "CURVE_HEADER",
    "FRONTIER_HEADER",
    "THEORY_EPS",
]

log = logging.getLogger(__name__)

CURVE_HEADER = ("s", "m", "successes", "trials", "rate", "mean_error", "ratio", "seed")
FRONTIER_HEADER = ("m", "max_s", "theory_m_nonuniform")
THEORY_EPS = 0.02

# spawn-key tags keeping frame and trial streams disjoint
_FRAME_TAG, _SCALE_TAG, _TRIAL_TAG = 0, 1, 2


@dataclass
class ExperimentConfig:
    """Parameters of a phase-transition sweep.

    `frame_spec` is ``"tight"`` or a target frame-bound ratio ``B/A``.
    `s_list` defaults to every sparsity a generic frame admits
    (``p - d < s < p``); `m_grid` ``"auto"`` means even ``m`` up to ``d`` (step
    10 when ``d > 50``).
    """

    d: int = 40
    p: int = 50
    frame_spec: str | float = "tight"
    s_list: list[int] | None = None
    m_grid: list[int] | str = "auto"
    trials: int = 70
    success_tol: float = 1e-5
    success_target: float = 0.98
    eta: float = 0.0
    master_seed: int = 0
    threads: int = 1
    max_iters: int = 50_000

    def __post_init__(self):
        if self.d < 1 or self.p < 1:
            raise ValueError("dimensions must be positive")
        if self.p < self.d:
            raise ValueError(f"need p >= d, got p={self.p}, d={self.d}")
        if self.trials < 1:
            raise ValueError("need trials >= 1")
        if self.success_tol <= 0:
            raise ValueError("success_tol must be positive")
        if not 0 < self.success_target <= 1:
            raise ValueError("success_target must lie in (0, 1]")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if isinstance(self.frame_spec, str):
            if self.frame_spec != "tight":
                self.frame_spec = float(self.frame_spec)
        if not isinstance(self.frame_spec, str) and self.frame_spec < 1:
            raise ValueError("frame ratio must be >= 1")
        if isinstance(self.m_grid, str) and self.m_grid != "auto":
            raise ValueError("m_grid must be a list or 'auto'")
        if self.s_list is not None and any(not 1 <= s <= self.p - 1 for s in self.s_list):
            raise ValueError("every s must satisfy 1 <= s <= p - 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def full_scale(self) -> "ExperimentConfig":
        """Same sweep at ``d = 200``, ``p = 250`` with default grids."""
        return dataclasses.replace(self, d=200, p=250, s_list=None, m_grid="auto")

    def sparsities(self) -> list[int]:
        if self.s_list is not None:
            return sorted(set(int(s) for s in self.s_list))
        return list(range(self.p - self.d + 1, self.p))

    def measurements(self) -> list[int]:
        if not isinstance(self.m_grid, str):
            return sorted(set(int(m) for m in self.m_grid))
        step = 2 if self.d <= 50 else 10
        return list(range(step, self.d + 1, step))


class CellResult(NamedTuple):
    successes: int
    trials: int
    mean_error: float
    solver_failures: int = 0

    @property
    def rate(self) -> float:
        return self.successes / self.trials


class CurveRow(NamedTuple):
    s: int
    m: int
    successes: int
    trials: int
    rate: float
    mean_error: float
    ratio: float
    seed: int


def trial_rng(master_seed: int, s: int, m: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_TRIAL_TAG, s, m, trial))
    return np.random.default_rng(ss)


def build_frame(cfg: ExperimentConfig) -> Frame:
    """Frame for a sweep; ratio frames rescale the same tight base frame."""
    base_rng = np.random.default_rng(
        np.random.SeedSequence(cfg.master_seed, spawn_key=(_FRAME_TAG,)))
    base = tight_frame(cfg.p, cfg.d, base_rng, seed=cfg.master_seed)
    if cfg.frame_spec == "tight":
        return base
    scale_rng = np.random.default_rng(
        np.random.SeedSequence(cfg.master_seed, spawn_key=(_SCALE_TAG,)))
    return frame_with_ratio(base, float(cfg.frame_spec), scale_rng)


def _one_trial(cfg: ExperimentConfig, frame: Frame, s: int, m: int, trial: int,
               opts: SolverOptions):
    rng = trial_rng(cfg.master_seed, s, m, trial)
    signal = synth_cosparse(frame, cfg.p - s, rng)
    inst = gaussian_instance(frame, signal, m, cfg.eta, rng)
    try:
        if cfg.eta > 0:
            res = solve_abpdn(frame, inst.M, inst.y, cfg.eta, opts)
        else:
            res = solve_abp(frame, inst.M, inst.y, opts)
    except CosparseError as exc:
        log.warning("s=%d m=%d trial=%d: solver error %s", s, m, trial, exc)
        return math.nan, False
    if not res.converged:
        log.warning("s=%d m=%d trial=%d: %s after %d iterations", s, m, trial,
                    res.status, res.iters)
        return float(np.linalg.norm(res.z - signal.x)), False
    return float(np.linalg.norm(res.z - signal.x)), True


def run_cell(cfg: ExperimentConfig, s: int, m: int, frame: Frame | None = None,
             pool: ThreadPoolExecutor | None = None) -> CellResult:
    """Recovery statistics of one ``(s, m)`` cell.

    A trial succeeds when the solver converges and ``||z - x||_2 < success_tol``.
    Non-converged solves and solver errors count as failures and are logged;
    `mean_error` averages the errors of all trials that returned a point.
    """
    if not 1 <= s <= cfg.p - 1:
        raise ValueError(f"need 1 <= s <= p - 1, got s={s}")
    if m > cfg.d:
        warnings.warn(f"m={m} exceeds d={cfg.d}; the system is overdetermined",
                      stacklevel=2)
    frame = frame if frame is not None else build_frame(cfg)
    opts = SolverOptions(max_iters=cfg.max_iters)

    def job(trial):
        return _one_trial(cfg, frame, s, m, trial, opts)

    if pool is not None:
        out = list(pool.map(job, range(cfg.trials)))
    else:
        out = [job(t) for t in range(cfg.trials)]
    errors = np.array([e for e, _ in out])
    converged = np.array([ok for _, ok in out])
    success = converged & (errors < cfg.success_tol)
    finite = errors[np.isfinite(errors)]
    mean_error = float(finite.mean()) if finite.size else math.nan
    return CellResult(int(success.sum()), cfg.trials, mean_error, int((~converged).sum()))


def clean_frontier(max_s) -> list[int]:
    """Smallest non-decreasing sequence dominating `max_s` (running maximum)."""
    return [int(v) for v in np.maximum.accumulate(np.asarray(max_s, dtype=int))] \
        if len(max_s) else []


@dataclass
class PhaseCurve:
    rows: list[CurveRow]
    frontier_m: list[int]
    frontier_raw: list[int]
    frame: Frame = field(repr=False)
    master_seed: int = 0

    @property
    def frontier(self) -> list[int]:
        return clean_frontier(self.frontier_raw)

    def theory_m(self, s: int, eps: float = THEORY_EPS) -> float:
        if s < 1:
            return math.nan
        q = BoundQuery(A=self.frame.lower_bound, B=self.frame.upper_bound, s=s,
                       p=self.frame.p, eps=eps)
        return m_nonuniform(q)

    def frontier_rows(self):
        return [(m, s, self.theory_m(s)) for m, s in zip(self.frontier_m, self.frontier)]

    def max_s_at(self, m: int) -> int:
        return self.frontier[self.frontier_m.index(m)]

    def write(self, outdir) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        curve, front = outdir / "curve.csv", outdir / "frontier.csv"
        write_rows(curve, CURVE_HEADER, self.rows)
        write_rows(front, FRONTIER_HEADER, self.frontier_rows())
        return curve, front


def phase_curve(cfg: ExperimentConfig, frame: Frame | None = None) -> PhaseCurve:
    """Scan ``s`` upwards at every ``m`` until the success rate drops below target.

    The raw frontier is the largest passing ``s`` before the first failing
    one (0 when the smallest ``s`` already fails); `PhaseCurve.frontier`
    holds its running maximum over ``m``.
    """
    frame = frame if frame is not None else build_frame(cfg)
    ratio = frame.ratio
    rows, raw = [], []
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        for m in cfg.measurements():
            best = 0
            for s in cfg.sparsities():
                cell = run_cell(cfg, s, m, frame, pool)
                rows.append(CurveRow(s, m, cell.successes, cell.trials, cell.rate,
                                     cell.mean_error, ratio, cfg.master_seed))
                if cell.rate < cfg.success_target:
                    break
                best = s
            raw.append(best)
    finally:
        if pool is not None:
            pool.shutdown()
    rows.sort(key=lambda r: (r.m, r.s))
    return PhaseCurve(rows, cfg.measurements(), raw, frame, cfg.master_seed)
