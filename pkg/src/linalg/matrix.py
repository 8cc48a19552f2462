"""Dense float64 matrix helpers.

A ``Matrix`` is a plain 2-D ``numpy`` array of float64. Every public
function validates its inputs with :func:`as_matrix` and never returns
non-finite entries.
"""

from typing import Any

import numpy as np
import numpy.typing as npt

from src.errors import RejectedInputError

Matrix = npt.NDArray[np.float64]


def as_matrix(data: Any, name: str = "matrix") -> Matrix:
    """Coerce ``data`` to a finite 2-D float64 array or reject it."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise RejectedInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise RejectedInputError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} has non-finite entries")
    return arr


def _ensure_finite(result: Matrix, op: str) -> Matrix:
    if not np.all(np.isfinite(result)):
        raise RejectedInputError(f"{op} overflowed to non-finite values")
    return result


def matmul(a: Any, b: Any) -> Matrix:
    """Standard matrix product ``a @ b`` with a shape check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise RejectedInputError(
            f"dimension mismatch: {a.shape[0]}x{a.shape[1]} times {b.shape[0]}x{b.shape[1]}"
        )
    return _ensure_finite(a @ b, "matmul")


def frobenius_norm(m: Any) -> float:
    m = as_matrix(m)
    return float(np.sqrt(np.sum(m * m)))


def identity(n: int) -> Matrix:
    return np.eye(n, dtype=np.float64)


def zeros(rows: int, cols: int) -> Matrix:
    return np.zeros((rows, cols), dtype=np.float64)
