"""Shared generators for the test suite: random Gram matrices and operators
with known singular structure."""

from __future__ import annotations

import numpy as np

from infsup import DiscreteOperator, GramSpace


def random_gram(dim: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    """SPD matrix with eigenvalues log-uniform in [1/sqrt(cond), sqrt(cond)]."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    lam = np.exp(rng.uniform(-0.5 * np.log(cond), 0.5 * np.log(cond), dim))
    return (q * lam) @ q.T


def random_spaces(nv: int, nw: int, rng: np.random.Generator) -> tuple[GramSpace, GramSpace]:
    return GramSpace(random_gram(nv, rng)), GramSpace(random_gram(nw, rng))


def operator_with_spectrum(
    nv: int, nw: int, sigmas, rng: np.random.Generator
) -> DiscreteOperator:
    """Operator whose whitened matrix has exactly the given singular values.

    With A = Lw (U diag(sigmas) V') Lv', the whitening Lw^{-1} A Lv^{-T}
    recovers U diag(sigmas) V', so the generalized moduli are known up to
    roundoff regardless of the random Gram matrices.
    """
    domain, test = random_spaces(nv, nw, rng)
    q_left, _ = np.linalg.qr(rng.standard_normal((nw, nw)))
    q_right, _ = np.linalg.qr(rng.standard_normal((nv, nv)))
    core = np.zeros((nw, nv))
    sigmas = np.asarray(sigmas, dtype=float)
    core[: sigmas.size, : sigmas.size] = np.diag(sigmas)
    matrix = test.chol @ (q_left @ core @ q_right.T) @ domain.chol.T
    return DiscreteOperator(domain=domain, test_space=test, matrix=matrix)


def random_operator(nv: int, nw: int, rng: np.random.Generator) -> DiscreteOperator:
    domain, test = random_spaces(nv, nw, rng)
    return DiscreteOperator(domain=domain, test_space=test, matrix=rng.standard_normal((nw, nv)))


def rank_deficient_operator(
    nv: int, nw: int, rank: int, rng: np.random.Generator
) -> DiscreteOperator:
    """A = X Y' with X, Y of width `rank`, so the rank is known by construction."""
    domain, test = random_spaces(nv, nw, rng)
    x = rng.standard_normal((nw, rank))
    y = rng.standard_normal((nv, rank))
    return DiscreteOperator(domain=domain, test_space=test, matrix=x @ y.T)
