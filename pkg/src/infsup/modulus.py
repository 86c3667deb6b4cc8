"""Minimum modulus, reduced minimum modulus, adjoints and closed-range probes.

An operator A maps a Gram space V into the dual of a Gram space W.  It is
stored as the matrix of pairing coefficients: ``(A @ v)`` holds the values of
the functional Av against the test basis, so ``<A v, w> = (A v)' w``.

Reduction to ordinary singular values
-------------------------------------
The central computation rewrites every modulus as a singular value of the
whitened matrix  ``Aw = Lw^{-1} A Lv^{-T}``  where ``G_V = Lv Lv'`` and
``G_W = Lw Lw'``:

    |A v|_{W'}^2 = (A v)' G_W^{-1} (A v) = |Lw^{-1} A v|_2^2
    |v|_V        = |Lv' v|_2,

so substituting ``y = Lv' v`` gives  ``|A v|_{W'} / |v|_V = |Aw y|_2 / |y|_2``.
Hence

* the minimum modulus  inf_v |A v|_{W'} / |v|_V  is the smallest singular
  value of Aw (zero whenever the domain is wider than the test space, since
  the kernel is then forced to be nontrivial), and
* the reduced minimum modulus  inf_v |A v|_{W'} / dist_V(v, ker A)  is the
  smallest singular value of Aw above the rank cutoff, because the whitened
  kernel is spanned by the trailing right singular vectors and the distance to
  it is the Euclidean norm of the leading right-singular components of y.

The rank cutoff is the tolerance-based numerical rank from ``linalg``; the
report records the spectral gap around the cutoff so borderline rank calls
can be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .linalg import default_rank_tol, numerical_rank, singular_values, svd
from .spaces import DimensionMismatch, DualVector, GramSpace


class DegenerateSubspace(ValueError):
    """Subspace basis is numerically linearly dependent."""


class EmptyFamily(ValueError):
    """closed_range_probe needs at least one operator."""


@dataclass
class DiscreteOperator:
    """Matrix representation of A : V -> W' between Gram spaces."""

    domain: GramSpace
    test_space: GramSpace
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        expected = (self.test_space.dim, self.domain.dim)
        if self.matrix.shape != expected:
            raise DimensionMismatch(
                f"operator matrix has shape {self.matrix.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("operator matrix contains non-finite entries")

    def apply(self, v) -> DualVector:
        """The functional A v in the dual of the test space."""
        return DualVector(self.test_space, self.matrix @ self.domain._check(v))

    def pairing(self, v, w) -> float:
        """<A v, w> = a(v, w)."""
        return float(self.test_space._check(w) @ self.matrix @ self.domain._check(v))


def adjoint(op: DiscreteOperator) -> DiscreteOperator:
    """The dual operator A' : W -> V', defined by <A v, w> = <v, A' w>.

    In pairing coordinates this is exactly the transposed matrix.
    """
    return DiscreteOperator(
        domain=op.test_space, test_space=op.domain, matrix=op.matrix.T.copy()
    )


def whitened(op: DiscreteOperator) -> np.ndarray:
    """Lw^{-1} A Lv^{-T}, computed by triangular solves (no explicit inverses)."""
    y = scipy.linalg.solve_triangular(
        op.test_space.chol, op.matrix, lower=True, check_finite=False
    )
    return scipy.linalg.solve_triangular(
        op.domain.chol, y.T, lower=True, check_finite=False
    ).T


def minimum_modulus(op: DiscreteOperator) -> float:
    """inf over v != 0 of |A v|_{W'} / |v|_V."""
    if op.domain.dim == 0:
        raise ValueError("operator needs a domain of dimension >= 1")
    if op.domain.dim > op.test_space.dim:
        return 0.0  # wider than tall: the kernel is nontrivial by counting
    s = singular_values(whitened(op))
    return float(s[-1])


def reduced_minimum_modulus(
    op: DiscreteOperator, rel_tol: float | None = None
) -> tuple[float, np.ndarray]:
    """(gamma, kernel_basis) with gamma = inf |A v|_{W'} / dist_V(v, ker A).

    gamma is the smallest whitened singular value above the rank cutoff and
    math.inf for the zero operator (whose kernel is the whole space).  The
    kernel basis columns are orthonormal in the V inner product.
    """
    aw = whitened(op)
    if rel_tol is None:
        rel_tol = default_rank_tol(*aw.shape)
    res = svd(aw)
    rank = numerical_rank(res.values, rel_tol)
    kernel_white = res.right[:, rank:]
    kernel = scipy.linalg.solve_triangular(
        op.domain.chol.T, kernel_white, lower=False, check_finite=False
    )
    gamma = math.inf if rank == 0 else float(res.values[rank - 1])
    return gamma, kernel


@dataclass
class ModulusReport:
    """Moduli of one operator together with the tolerances that produced them.

    gamma is math.inf exactly when the matrix is numerically zero; the value
    is a sentinel for reporting and never enters arithmetic here.  gap_ratio
    is sigma_rank / sigma_rank+1 (None when the spectrum ends at the rank),
    recorded so borderline rank decisions can be audited.
    """

    mu: float
    gamma: float
    rank: int
    kernel_basis: np.ndarray
    gamma_adjoint: float
    rel_tol: float
    gap_ratio: float | None

    @property
    def gamma_is_infinite(self) -> bool:
        return math.isinf(self.gamma)


def _gap_ratio(values: np.ndarray, rank: int) -> float | None:
    if rank == 0 or rank >= values.shape[0]:
        return None
    lead, trail = float(values[rank - 1]), float(values[rank])
    return math.inf if trail == 0.0 else lead / trail


def modulus_report(op: DiscreteOperator, rel_tol: float | None = None) -> ModulusReport:
    """Full modulus diagnostics; the adjoint side is recomputed from scratch.

    gamma_adjoint goes through its own whitening of the transposed matrix so
    that the identity gamma(A) = gamma(A') is an actual cross-check rather
    than a tautology.
    """
    aw = whitened(op)
    if rel_tol is None:
        rel_tol = default_rank_tol(*aw.shape)
    res = svd(aw)
    rank = numerical_rank(res.values, rel_tol)
    kernel = scipy.linalg.solve_triangular(
        op.domain.chol.T, res.right[:, rank:], lower=False, check_finite=False
    )
    gamma = math.inf if rank == 0 else float(res.values[rank - 1])
    mu = 0.0 if op.domain.dim > op.test_space.dim else float(res.values[-1])
    gamma_adj, _ = reduced_minimum_modulus(adjoint(op), rel_tol)
    return ModulusReport(
        mu=mu,
        gamma=gamma,
        rank=rank,
        kernel_basis=kernel,
        gamma_adjoint=gamma_adj,
        rel_tol=rel_tol,
        gap_ratio=_gap_ratio(res.values, rank),
    )


def quotient_distance(
    op: DiscreteOperator, v, kernel_basis: np.ndarray | None = None
) -> float:
    """dist_V(v, ker A): the V-norm of v minus its V-orthogonal kernel projection."""
    if kernel_basis is None:
        _, kernel_basis = reduced_minimum_modulus(op)
    x = op.domain._check(v)
    if kernel_basis.shape[1] == 0:
        return op.domain.norm(x)
    coeffs = kernel_basis.T @ (op.domain.gram @ x)
    return op.domain.norm(x - kernel_basis @ coeffs)


def sup_pairing_over_range(op: DiscreteOperator, w, rel_tol: float | None = None) -> float:
    """sup over f in range(A) of |<f, w>| / |f|_{W'}.

    In whitened coordinates the pairing is Euclidean and range(A) is spanned
    by the leading left singular vectors, so the sup is the norm of the
    projection of the whitened w onto that span.
    """
    aw = whitened(op)
    if rel_tol is None:
        rel_tol = default_rank_tol(*aw.shape)
    res = svd(aw)
    rank = numerical_rank(res.values, rel_tol)
    w_white = op.test_space.to_white(w)
    return float(np.linalg.norm(res.left[:, :rank].T @ w_white))


def annihilator_distance(
    space: GramSpace, f, subspace_basis, rel_tol: float | None = None
) -> tuple[float, float]:
    """Distance from f to the annihilator of M versus the restricted norm of f.

    Returns ``(dist, restricted_norm)`` where

    * dist is the dual-norm distance from f to M-perp = {g : <g, x> = 0 on M}.
      Whitening makes the pairing Euclidean, so M-perp is the Euclidean
      complement of the whitened span of M and the distance is the norm of
      the projection of the whitened f onto that span.
    * restricted_norm is sup over x in M of |<f, x>| / |x|, computed on the
      independent route: with S = B' G B and b = B' f the sup is attained at
      the stationary coefficient vector S^{-1} b, giving sqrt(b' S^{-1} b).

    The two returns agreeing is precisely the distance-to-annihilator
    identity this function exists to check.
    """
    basis = np.asarray(subspace_basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[0] != space.dim:
        raise DimensionMismatch(
            f"subspace basis has {basis.shape[0]} rows, expected {space.dim}"
        )
    k = basis.shape[1]
    if rel_tol is None:
        rel_tol = default_rank_tol(space.dim, k)

    white = space.chol.T @ basis
    sing = singular_values(white)
    if numerical_rank(sing, rel_tol) < k:
        raise DegenerateSubspace(
            f"subspace basis is numerically dependent (rank < {k} at rel_tol {rel_tol:g})"
        )
    q, _ = np.linalg.qr(white)
    z = space.dual_to_white(f)
    dist = float(np.linalg.norm(q.T @ z))

    coeffs = space.coeffs_of(f)
    small_gram = basis.T @ space.gram @ basis
    b = basis.T @ coeffs
    try:
        small_chol = scipy.linalg.cholesky(small_gram, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        raise DegenerateSubspace("restricted Gram matrix is numerically singular") from None
    y = scipy.linalg.solve_triangular(small_chol, b, lower=True, check_finite=False)
    restricted = float(np.linalg.norm(y))
    return dist, restricted


@dataclass
class AnnihilatorReport:
    """Principal-angle residuals for the kernel/range annihilator identities.

    Each residual is the spectral-norm distance between the orthogonal
    projectors of the claimed-equal subspaces, computed in the whitened
    metric of the ambient space; it equals the sine of the largest principal
    angle when the dimensions agree and 1.0 when they do not.  The forward
    and adjoint sides come from two separate whitenings/SVDs, so agreement is
    a genuine cross-check.
    """

    kernel_adjoint_vs_range_perp: float
    kernel_vs_adjoint_range_perp: float
    adjoint_range_vs_kernel_perp: float
    range_vs_adjoint_kernel_perp: float
    rank_forward: int
    rank_adjoint: int
    rel_tol: float

    def residuals(self) -> dict[str, float]:
        return {
            "kernel_adjoint_vs_range_perp": self.kernel_adjoint_vs_range_perp,
            "kernel_vs_adjoint_range_perp": self.kernel_vs_adjoint_range_perp,
            "adjoint_range_vs_kernel_perp": self.adjoint_range_vs_kernel_perp,
            "range_vs_adjoint_kernel_perp": self.range_vs_adjoint_kernel_perp,
        }

    @property
    def max_residual(self) -> float:
        return max(self.residuals().values())


def _projector_distance(q1: np.ndarray, q2: np.ndarray) -> float:
    p1 = q1 @ q1.T
    p2 = q2 @ q2.T
    if p1.size == 0:
        return 0.0
    s = singular_values(p1 - p2)
    return float(s[0]) if s.size else 0.0


def annihilator_identities(
    op: DiscreteOperator, rel_tol: float | None = None
) -> AnnihilatorReport:
    """Check ker A' = (range A)-perp and range A = (ker A')-perp, both ways round.

    In finite dimensions every range is closed, so all four residuals must
    vanish up to roundoff.  Bases are orthonormal in the whitened coordinates
    of their ambient space (W and V for the kernels, W' and V' for the
    ranges); the pairing between a space and its dual is Euclidean there, so
    every annihilator is a plain orthogonal complement.
    """
    aw = whitened(op)
    if rel_tol is None:
        rel_tol = default_rank_tol(*aw.shape)
    fwd = svd(aw)
    r_f = numerical_rank(fwd.values, rel_tol)
    adj = svd(whitened(adjoint(op)))
    r_a = numerical_rank(adj.values, rel_tol)

    range_fwd = fwd.left[:, :r_f]        # range(A), whitened W' coords
    range_perp = fwd.left[:, r_f:]       # (range A)-perp, whitened W coords
    kernel_perp = fwd.right[:, :r_f]     # (ker A)-perp, whitened V' coords
    kernel_fwd = fwd.right[:, r_f:]      # ker A, whitened V coords
    range_adj = adj.left[:, :r_a]        # range(A'), whitened V' coords
    adj_range_perp = adj.left[:, r_a:]   # (range A')-perp, whitened V coords
    adj_kernel_perp = adj.right[:, :r_a] # (ker A')-perp, whitened W' coords
    kernel_adj = adj.right[:, r_a:]      # ker A', whitened W coords

    return AnnihilatorReport(
        kernel_adjoint_vs_range_perp=_projector_distance(kernel_adj, range_perp),
        kernel_vs_adjoint_range_perp=_projector_distance(kernel_fwd, adj_range_perp),
        adjoint_range_vs_kernel_perp=_projector_distance(range_adj, kernel_perp),
        range_vs_adjoint_kernel_perp=_projector_distance(range_fwd, adj_kernel_perp),
        rank_forward=r_f,
        rank_adjoint=r_a,
        rel_tol=rel_tol,
    )


@dataclass
class ClosedRangeTrend:
    """gamma per refinement level plus the fitted log-log decay rate.

    Closedness of a range is a property of the infinite-dimensional limit; a
    finite family can only exhibit a trend.  The diagnosis labels are the
    configured heuristics, not theorem verdicts: "uniformly bounded below"
    when the tail of the family keeps gamma within bounded_ratio of its tail
    maximum, "non-closed-range limit" when the tail decays with negative
    slope, else "inconclusive".
    """

    levels: list[float]
    gammas: list[float]
    slope: float
    tail_slope: float
    diagnosis: str
    rel_tol: float | None
    bounded_ratio: float = 0.5
    tail_size: int = field(default=2)


def _loglog_slope(levels, values) -> float:
    x = np.log(np.asarray(levels, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 2 or np.allclose(x, x[0]):
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def closed_range_probe(
    family,
    rel_tol: float | None = None,
    levels=None,
    bounded_ratio: float = 0.5,
) -> ClosedRangeTrend:
    """gamma trend over a refinement family of operators.

    levels defaults to the domain dimensions; pass mesh counts or any other
    positive refinement parameter to fit the decay against instead.
    """
    ops = list(family)
    if not ops:
        raise EmptyFamily("closed_range_probe needs a nonempty family")
    if levels is None:
        levels = [op.domain.dim for op in ops]
    levels = [float(x) for x in levels]
    if len(levels) != len(ops):
        raise ValueError("levels must match the family length")
    if any(x <= 0 for x in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be positive and strictly increasing")

    gammas = [reduced_minimum_modulus(op, rel_tol)[0] for op in ops]
    finite = all(math.isfinite(g) and g > 0 for g in gammas)
    if not finite:
        return ClosedRangeTrend(
            levels=levels, gammas=gammas, slope=math.nan, tail_slope=math.nan,
            diagnosis="inconclusive", rel_tol=rel_tol, bounded_ratio=bounded_ratio,
        )

    slope = _loglog_slope(levels, gammas)
    n = len(ops)
    tail_size = min(n, max(2, (n + 1) // 2))
    tail_levels = levels[n - tail_size:]
    tail_gammas = gammas[n - tail_size:]
    tail_slope = _loglog_slope(tail_levels, tail_gammas)

    # Strictly-greater with a sliver of slack so a family whose gamma halves
    # exactly at each level lands on the decay branch, not the bounded one.
    if min(tail_gammas) > bounded_ratio * max(tail_gammas) * (1.0 + 1e-9):
        diagnosis = "uniformly bounded below"
    elif tail_slope < 0.0:
        diagnosis = "non-closed-range limit"
    else:
        diagnosis = "inconclusive"
    return ClosedRangeTrend(
        levels=levels,
        gammas=gammas,
        slope=slope,
        tail_slope=tail_slope,
        diagnosis=diagnosis,
        rel_tol=rel_tol,
        bounded_ratio=bounded_ratio,
        tail_size=tail_size,
    )
