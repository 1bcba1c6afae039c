"""Exception types raised by the cosparse package."""


class CosparseError(Exception):
    """Base class for domain failures (as opposed to usage errors)."""

    code = "cosparse_error"


class NotAFrame(CosparseError, ValueError):
    code = "not_a_frame"


class DegenerateDraw(CosparseError, RuntimeError):
    code = "degenerate_draw"


class EmptyKernel(CosparseError, ValueError):
    code = "empty_kernel"


class RankDeficientM(CosparseError, ValueError):
    code = "rank_deficient_m"


class RejectionStall(CosparseError, RuntimeError):
    code = "rejection_stall"
