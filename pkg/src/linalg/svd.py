"""Singular value decomposition by one-sided Jacobi rotations.

Sized for the small dense matrices used throughout the package (up to
roughly 64x64). Columns of the working copy are rotated pairwise until
every pair is orthogonal to within ``CONVERGENCE_TOL``; the column norms
are then the singular values.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from src.errors import NumericalFailureError, RejectedInputError

from .matrix import Matrix, as_matrix

logger = logging.getLogger(__name__)

MAX_SWEEPS = 60
CONVERGENCE_TOL = 1e-12
_SIGN_EPS = 1e-12


class SvdResult(NamedTuple):
    """Thin SVD ``m = u @ diag(sigma) @ v.T`` with ``p = min(rows, cols)``."""

    u: Matrix
    sigma: np.ndarray
    v: Matrix

    def reconstruct(self) -> Matrix:
        return (self.u * self.sigma) @ self.v.T


class Truncation(NamedTuple):
    matrix: Matrix
    residual: float


def _negligible(shape: tuple[int, int], scale: float) -> float:
    return 10.0 * max(shape) * np.finfo(np.float64).eps * scale


def _complete_columns(u: Matrix, missing: list[int]) -> Matrix:
    """Replace the ``missing`` columns of ``u`` with an orthonormal completion."""
    m = u.shape[0]
    accepted = [i for i in range(u.shape[1]) if i not in set(missing)]
    for i in missing:
        q = u[:, accepted]
        candidates = np.eye(m)
        for _ in range(2):
            candidates = candidates - q @ (q.T @ candidates)
        norms = np.linalg.norm(candidates, axis=0)
        best = int(np.argmax(norms))
        u[:, i] = candidates[:, best] / norms[best]
        accepted.append(i)
    return u


def _jacobi(a: Matrix) -> SvdResult:
    """One-sided Jacobi on a matrix with at least as many rows as columns."""
    rows, cols = a.shape
    work = a.copy()
    v = np.eye(cols)
    scale = max(float(np.linalg.norm(a)), np.finfo(np.float64).tiny)
    floor = _negligible(a.shape, scale) ** 2

    off = 0.0
    for sweep in range(1, MAX_SWEEPS + 1):
        off = 0.0
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                ci = work[:, i]
                cj = work[:, j]
                alpha = float(ci @ ci)
                beta = float(cj @ cj)
                if alpha <= floor or beta <= floor:
                    continue
                gamma = float(ci @ cj)
                ratio = abs(gamma) / math.sqrt(alpha * beta)
                off = max(off, ratio)
                if ratio <= CONVERGENCE_TOL:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t

                wi = work[:, i].copy()
                work[:, i] = c * wi - s * work[:, j]
                work[:, j] = s * wi + c * work[:, j]
                vi = v[:, i].copy()
                v[:, i] = c * vi - s * v[:, j]
                v[:, j] = s * vi + c * v[:, j]
        if off <= CONVERGENCE_TOL:
            logger.debug("jacobi converged in %d sweeps (%dx%d)", sweep, rows, cols)
            break
    else:
        raise NumericalFailureError("one-sided Jacobi SVD did not converge", off, MAX_SWEEPS)

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    work = work[:, order]
    v = v[:, order]

    cutoff = _negligible(a.shape, scale)
    u = np.zeros_like(work)
    missing = []
    for i in range(cols):
        if sigma[i] > cutoff:
            u[:, i] = work[:, i] / sigma[i]
        else:
            missing.append(i)
    if missing:
        u = _complete_columns(u, missing)
    return SvdResult(u=u, sigma=sigma, v=v)


def _fix_signs(result: SvdResult) -> SvdResult:
    u = result.u.copy()
    v = result.v.copy()
    for i in range(u.shape[1]):
        nonzero = np.flatnonzero(np.abs(u[:, i]) > _SIGN_EPS)
        if nonzero.size and u[nonzero[0], i] < 0.0:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]
    return SvdResult(u=u, sigma=result.sigma, v=v)


def svd(m) -> SvdResult:
    """Thin SVD with non-increasing singular values.

    The first non-negligible entry of every left singular vector is made
    non-negative so that decompositions are reproducible across runs.
    """
    m = as_matrix(m)
    if m.shape[0] >= m.shape[1]:
        result = _jacobi(m)
    else:
        flipped = _jacobi(m.T)
        result = SvdResult(u=flipped.v, sigma=flipped.sigma, v=flipped.u)
    return _fix_signs(result)


def tail_energy(sigma: np.ndarray, r: int) -> float:
    """``sqrt(sum_{i>r} sigma_i^2)``; zero once ``r`` covers the spectrum."""
    tail = np.asarray(sigma, dtype=np.float64)[r:]
    return float(np.sqrt(np.sum(tail * tail)))


def truncate_rank(m, r: int) -> Truncation:
    """Best rank-``r`` approximation in Frobenius norm and its residual."""
    m = as_matrix(m)
    p = min(m.shape)
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= p:
        raise RejectedInputError(f"rank must be an integer in [1, {p}], got {r!r}")
    decomposition = svd(m)
    approx = (decomposition.u[:, :r] * decomposition.sigma[:r]) @ decomposition.v[:, :r].T
    return Truncation(matrix=approx, residual=tail_energy(decomposition.sigma, r))
