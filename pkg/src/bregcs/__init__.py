"""Time-uniform confidence sequences for exponential families from Bregman information gain."""
from ._accel import USING_NUMBA
from .confseq import Envelope, boundary_1d, confset_2d, envelope, first_exit, running_intersection, tune_c
from .errors import (ConvergenceError, DomainError, NumericalAnomaly, QuadratureWarning, SupportError,
                     TruncationWarning)
from .families import (FamilyKind, SuffStats, cumulative_stats, information_gain_closed, level_function,
                       update_stats)
from .glr import GlrConfig, GlrState, detect_step, kappa, run_detector

__all__ = [
    "USING_NUMBA", "Envelope", "boundary_1d", "confset_2d", "envelope", "first_exit", "running_intersection",
    "tune_c", "ConvergenceError", "DomainError", "NumericalAnomaly", "QuadratureWarning", "SupportError",
    "TruncationWarning", "FamilyKind", "SuffStats", "cumulative_stats", "information_gain_closed",
    "level_function", "update_stats", "GlrConfig", "GlrState", "detect_step", "kappa", "run_detector",
]
__version__ = "0.1.0"
