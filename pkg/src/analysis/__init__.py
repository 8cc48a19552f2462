from .allocation import RankSummary, rank_stabilization_step, rank_statistics
from .theory import (
    AlphaSearch,
    ApproxErrorReport,
    approx_error,
    approx_error_grid,
    capacity_term,
    min_alpha_for_tolerance,
)

__all__ = [
    "RankSummary",
    "rank_stabilization_step",
    "rank_statistics",
    "AlphaSearch",
    "ApproxErrorReport",
    "approx_error",
    "approx_error_grid",
    "capacity_term",
    "min_alpha_for_tolerance",
]
