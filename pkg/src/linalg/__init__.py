from .matrix import Matrix, as_matrix, frobenius_norm, identity, matmul, zeros
from .svd import SvdResult, Truncation, svd, tail_energy, truncate_rank

__all__ = [
    "Matrix",
    "as_matrix",
    "frobenius_norm",
    "identity",
    "matmul",
    "zeros",
    "SvdResult",
    "Truncation",
    "svd",
    "tail_energy",
    "truncate_rank",
]
