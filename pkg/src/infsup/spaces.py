"""Gram-equipped finite-dimensional Hilbert spaces.

A space is a dimension plus a symmetric positive-definite Gram matrix G; the
primal norm is ``|v| = sqrt(v' G v)``.  Functionals are stored as coefficient
vectors of pairings against the basis, so ``<f, v> = f' v`` exactly and the
dual norm is ``|f|' = sqrt(f' G^{-1} f)``, applied through two triangular
solves with the cached Cholesky factor rather than an explicit inverse.

Whitening by the Cholesky factor (``v -> L' v``) turns the Gram norm into the
Euclidean norm; it is the change of basis that reduces every operator-modulus
computation in this package to an ordinary singular value problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .linalg import as_matrix, cholesky


class DimensionMismatch(ValueError):
    """Vector or functional length does not match the space dimension."""


class CsvFormatError(ValueError):
    """Malformed CSV matrix file; carries the offending file and line number."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line
        self.reason = message


class GramSpace:
    """Finite-dimensional Hilbert space defined by an SPD Gram matrix."""

    def __init__(self, gram):
        g = as_matrix(gram, "gram")
        self.chol = cholesky(g)  # rejects asymmetric / non-SPD input
        self.gram = g
        self.dim = g.shape[0]

    @classmethod
    def euclidean(cls, dim: int) -> "GramSpace":
        return cls(np.eye(dim))

    def _check(self, v, name: str = "vector") -> np.ndarray:
        a = np.asarray(v, dtype=float)
        if a.shape != (self.dim,):
            raise DimensionMismatch(
                f"{name} has shape {a.shape}, expected ({self.dim},)"
            )
        return a

    def norm(self, v) -> float:
        """sqrt(v' G v); zero iff v = 0."""
        a = self._check(v)
        return float(np.linalg.norm(self.chol.T @ a))

    def inner(self, v, w) -> float:
        return float(self._check(v) @ self.gram @ self._check(w))

    def dual_norm(self, f) -> float:
        """sqrt(f' G^{-1} f) = sup over v of <f, v> / |v|."""
        a = self._check(self.coeffs_of(f), "functional")
        z = scipy.linalg.solve_triangular(self.chol, a, lower=True, check_finite=False)
        return float(np.linalg.norm(z))

    def coeffs_of(self, f) -> np.ndarray:
        return f.coeffs if isinstance(f, DualVector) else np.asarray(f, dtype=float)

    def riesz(self, v) -> "DualVector":
        """The functional w -> (v, w) in this space's inner product."""
        return DualVector(self, self.gram @ self._check(v))

    def to_white(self, v) -> np.ndarray:
        """L' v; Euclidean length of the result equals norm(v)."""
        return self.chol.T @ self._check(v)

    def from_white(self, y) -> np.ndarray:
        return scipy.linalg.solve_triangular(
            self.chol.T, self._check(y, "whitened vector"), lower=False, check_finite=False
        )

    def dual_to_white(self, f) -> np.ndarray:
        """L^{-1} f; Euclidean length of the result equals dual_norm(f)."""
        a = self._check(self.coeffs_of(f), "functional")
        return scipy.linalg.solve_triangular(self.chol, a, lower=True, check_finite=False)

    def dual_from_white(self, z) -> np.ndarray:
        return self.chol @ self._check(z, "whitened functional")

    def apply_dual_gram(self, f) -> np.ndarray:
        """G^{-1} f via two triangular solves (the dual-space Riesz map)."""
        z = self.dual_to_white(f)
        return scipy.linalg.solve_triangular(self.chol.T, z, lower=False, check_finite=False)


def whitener(space: GramSpace) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Transform pair (to_white, from_white) for a space; inverse round-trips."""
    return space.to_white, space.from_white


@dataclass
class DualVector:
    """Functional on a GramSpace, stored as pairing coefficients against the basis."""

    space: GramSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.dim,):
            raise DimensionMismatch(
                f"functional has shape {self.coeffs.shape}, expected ({self.space.dim},)"
            )

    def pairing(self, v) -> float:
        return float(self.coeffs @ self.space._check(v))

    def norm(self) -> float:
        return self.space.dual_norm(self.coeffs)


def read_matrix_csv(path) -> np.ndarray:
    """Read a dense matrix: one row per line, comma-separated, '#' starts a comment."""
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = [s.strip() for s in line.split(",")]
            try:
                row = [float(s) for s in fields]
            except ValueError:
                raise CsvFormatError(path, lineno, f"non-numeric field in {fields!r}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CsvFormatError(
                    path, lineno, f"expected {width} fields, got {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise CsvFormatError(path, 1, "no data rows")
    m = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(m)):
        raise CsvFormatError(path, 1, "matrix contains non-finite entries")
    return m


def write_matrix_csv(path, matrix) -> None:
    m = as_matrix(matrix)
    with open(path, "w", encoding="utf-8") as fh:
        for row in m:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")
