"""Dense linear-algebra kernels: Cholesky, symmetric eigensolver, SVD, numerical rank.

Everything here works on plain 2-d float64 ``numpy`` arrays (row-major dense
matrices) and is backed by LAPACK through numpy/scipy.  The module adds the
tolerance semantics the rest of the package relies on: symmetric inputs are
checked, Cholesky pivots are guarded, and rank decisions are made against a
configurable relative cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Unit roundoff anchor used by every default rank tolerance.
EPS = 2.2e-16

# Relative asymmetry tolerated before a matrix is rejected as "not symmetric".
SYMMETRY_RTOL = 1e-12


class NotPositiveDefinite(ValueError):
    """Raised when a Cholesky pivot falls at or below its safeguard."""


class NoConvergence(RuntimeError):
    """Raised when the underlying eigenvalue/SVD iteration fails to converge."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-d float64 array with all entries finite."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def require_symmetric(s, name: str = "matrix", rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    m = as_matrix(s, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > rtol * max(scale, 1e-300):
        raise ValueError(f"{name} is not symmetric within relative tolerance {rtol:g}")
    return m


def default_rank_tol(rows: int, cols: int) -> float:
    """Default relative cutoff for rank decisions: max(rows, cols) * 2.2e-16."""
    return max(rows, cols) * EPS


def cholesky(s, pivot_tol: float | None = None) -> np.ndarray:
    """Lower-triangular L with ``s = L @ L.T`` for symmetric positive-definite s.

    A factorization is rejected (NotPositiveDefinite) when LAPACK fails or when
    any pivot L[i,i]**2 is <= pivot_tol * max(diag(s)); the pivot guard catches
    Gram matrices that are numerically semidefinite even if potrf succeeds.
    """
    m = require_symmetric(s)
    if pivot_tol is None:
        pivot_tol = m.shape[0] * EPS
    try:
        lower = scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from None
    pivots = np.diag(lower) ** 2
    guard = pivot_tol * max(np.max(np.diag(m)), 0.0)
    if np.any(pivots <= guard):
        raise NotPositiveDefinite(
            f"Cholesky pivot {pivots.min():.3e} <= guard {guard:.3e}; "
            "matrix is numerically semidefinite"
        )
    return lower


def sym_eigen(s) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (nondecreasing) and orthonormal eigenvectors of a symmetric matrix.

    Returns ``(w, q)`` with ``s @ q[:, i] == w[i] * q[:, i]``.
    """
    m = require_symmetric(s)
    try:
        w, q = scipy.linalg.eigh(m, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NoConvergence(f"symmetric eigensolver failed: {exc}") from None
    return w, q


@dataclass(frozen=True)
class SvdResult:
    """Singular value decomposition ``m = left @ diag-embed(values) @ right.T``.

    values are nonincreasing and nonnegative; ``left`` (rows x rows) and
    ``right`` (cols x cols) hold complete orthonormal bases, so trailing
    columns of ``right`` span the numerical kernel.
    """

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def recompose(self) -> np.ndarray:
        rows, cols = self.left.shape[0], self.right.shape[0]
        sigma = np.zeros((rows, cols))
        k = self.values.shape[0]
        sigma[:k, :k] = np.diag(self.values)
        return self.left @ sigma @ self.right.T


def svd(m) -> SvdResult:
    """Full SVD with complete orthonormal bases on both sides."""
    a = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"SVD failed: {exc}") from None
    return SvdResult(values=s, left=u, right=vh.T)


def singular_values(m) -> np.ndarray:
    """Singular values only (nonincreasing); much cheaper than a full SVD."""
    a = as_matrix(m)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"SVD failed: {exc}") from None


def numerical_rank(values, rel_tol: float) -> int:
    """Number of singular values strictly above rel_tol * max(values).

    values must be sorted nonincreasing and nonnegative.  The inequality is
    strict, so a value sitting exactly at the cutoff does not count; the rank
    of an all-zero spectrum is 0.
    """
    if rel_tol <= 0.0:
        raise ValueError("rel_tol must be positive")
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError("singular values must form a 1-d sequence")
    if v.size == 0:
        return 0
    if np.any(v < 0.0):
        raise ValueError("singular values must be nonnegative")
    if np.any(np.diff(v) > 0.0):
        raise ValueError("singular values must be sorted nonincreasing")
    smax = v[0]
    if smax == 0.0:
        return 0
    return int(np.count_nonzero(v > rel_tol * smax))
