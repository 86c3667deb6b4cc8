"""Executable verdicts for the three equivalent well-posedness conditions.

For a square discrete operator A : V -> W' the following agree in exact
arithmetic: (i) A is bijective, (ii) the inf-sup constant of A is positive
and the adjoint has trivial kernel, (iii) the inf-sup constants of A and A'
are equal and positive.  Floating point can only decide them up to a rank
cutoff, so the verdict also carries a borderline flag (smallest singular
value within a decade of the cutoff) instead of pretending the booleans are
reliable there, plus certifying witness vectors for every failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import default_rank_tol, numerical_rank, svd
from .modulus import DiscreteOperator, _gap_ratio, adjoint, whitened
from .spaces import DualVector


class NotSquare(ValueError):
    """Operation requires dim V = dim W."""


class SingularSystem(ValueError):
    """Variational solve attempted on an operator that is not bijective."""


@dataclass
class BnbVerdict:
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    beta: float
    beta_adjoint: float
    borderline: bool
    rank: int
    rank_adjoint: int
    cutoff: float
    rel_tol: float
    gap_ratio: float | None
    witnesses: dict[str, np.ndarray]

    @property
    def agreement_ok(self) -> bool:
        """True when the three conditions coincide; disagreement can only be
        a tolerance artifact, to be audited via gap_ratio/borderline."""
        return self.cond_i == self.cond_ii == self.cond_iii


def check_bnb(op: DiscreteOperator, rel_tol: float | None = None) -> BnbVerdict:
    """Evaluate conditions (i)-(iii) with inf-sup constants from both sides.

    beta is the smallest whitened singular value of A, beta_adjoint the one of
    A' computed through its own whitening.  Witnesses: a unit-V-norm kernel
    vector when A is rank-deficient, a unit-W-norm adjoint kernel vector (an
    unreachable functional direction) when A' is.
    """
    aw = whitened(op)
    if rel_tol is None:
        rel_tol = default_rank_tol(*aw.shape)
    fwd = svd(aw)
    adj = svd(whitened(adjoint(op)))
    rank = numerical_rank(fwd.values, rel_tol)
    rank_adj = numerical_rank(adj.values, rel_tol)

    n, m = op.domain.dim, op.test_space.dim
    smax = float(fwd.values[0]) if fwd.values.size else 0.0
    cutoff = rel_tol * smax
    mu = 0.0 if n > m else float(fwd.values[-1])
    mu_adj = 0.0 if m > n else float(adj.values[-1])

    cond_i = (n == m) and rank == min(n, m)
    adjoint_injective = rank_adj == m
    cond_ii = mu > cutoff and adjoint_injective
    # Both inf-sup constants carry absolute error on the rel_tol * smax scale
    # (backward-stable SVDs), so their agreement is tested at the cutoff, not
    # relative to mu itself.
    cond_iii = mu > cutoff and abs(mu - mu_adj) <= cutoff

    smin = float(fwd.values.min()) if fwd.values.size else 0.0
    borderline = cutoff > 0.0 and 0.1 * cutoff <= smin <= 10.0 * cutoff

    witnesses: dict[str, np.ndarray] = {}
    if rank < n:
        kern = scipy.linalg.solve_triangular(
            op.domain.chol.T, fwd.right[:, -1], lower=False, check_finite=False
        )
        witnesses["kernel"] = kern
    if rank_adj < m:
        kern_adj = scipy.linalg.solve_triangular(
            op.test_space.chol.T, adj.right[:, -1], lower=False, check_finite=False
        )
        witnesses["adjoint_kernel"] = kern_adj

    return BnbVerdict(
        cond_i=cond_i,
        cond_ii=cond_ii,
        cond_iii=cond_iii,
        beta=mu,
        beta_adjoint=mu_adj,
        borderline=borderline,
        rank=rank,
        rank_adjoint=rank_adj,
        cutoff=cutoff,
        rel_tol=rel_tol,
        gap_ratio=_gap_ratio(fwd.values, rank),
        witnesses=witnesses,
    )


def check_finite_dim_remark(op: DiscreteOperator, rel_tol: float | None = None) -> bool:
    """For square operators: positive inf-sup implies the adjoint kernel is trivial.

    Must hold for every square instance; returning False would expose a
    broken rank decision, not new mathematics.
    """
    if op.domain.dim != op.test_space.dim:
        raise NotSquare(
            f"dim V = {op.domain.dim} differs from dim W = {op.test_space.dim}"
        )
    verdict = check_bnb(op, rel_tol)
    premise = verdict.beta > verdict.cutoff
    return (not premise) or verdict.rank_adjoint == op.test_space.dim


def solve_variational(
    op: DiscreteOperator, rhs: DualVector, rel_tol: float | None = None
) -> tuple[np.ndarray, bool]:
    """Solve A u = rhs and check the a priori bound |u|_V <= |rhs|_{W'} / beta.

    One step of iterative refinement keeps the dual-norm residual at roundoff
    level.  Returns (u, bound_ok) with bound_ok evaluated at 1e-8 slack.
    """
    verdict = check_bnb(op, rel_tol)
    if not verdict.cond_i:
        raise SingularSystem(
            f"operator is not bijective (rank {verdict.rank} of {op.domain.dim})"
        )
    ell = op.test_space.coeffs_of(rhs)
    a = op.matrix
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    u = scipy.linalg.lu_solve((lu, piv), ell, check_finite=False)
    u = u + scipy.linalg.lu_solve((lu, piv), ell - a @ u, check_finite=False)
    bound_ok = op.domain.norm(u) <= (1.0 + 1e-8) * op.test_space.dual_norm(ell) / verdict.beta
    return u, bound_ok
