"""Cosparse signal recovery from Gaussian measurements.

Frames, cosparse signal models, an analysis l1 solver with optimality
certificates, measurement-count bounds, Gaussian-width estimators, null space
property falsifiers and a phase-transition harness.
"""
import types as _types

from .bounds import (BoundQuery, e_m, error_bounds, m_nonuniform, m_nonuniform_noisy,
                     m_uniform, m_uniform_robust)
from .errors import (CosparseError, DegenerateDraw, EmptyKernel, NotAFrame, RankDeficientM,
                     RejectionStall)
from .experiments import ExperimentConfig, PhaseCurve, phase_curve, run_cell
from .frames import Frame, frame_bounds, frame_with_ratio, make_frame, scaled_frame, tight_frame
from .geometry import (TangentConeSampler, WidthEstimate, d_norm, escape_check,
                       escape_frequency, polar_cone_sqdist, soft_threshold,
                       soft_threshold_moment, tangent_dir_test, width_D_mc,
                       width_bound_cone, width_bound_D, width_polar_mc)
from .model import (CosparseSignal, SensingInstance, cosparsity, gaussian_instance, sigma_s,
                    synth_cosparse)
from .nsp import NspReport, Variant, Verdict, implied_errors, nsp_check, worst_cosupport
from .solver import (SolveResult, SolverOptions, Status, certify, oracle_subgradient,
                     solve_abp, solve_abpdn)

__version__ = "0.1.0"

__all__ = sorted(name for name, value in globals().items()
                 if not name.startswith("_") and not isinstance(value, _types.ModuleType))
