"""Discretizations of the multiplication-by-t operator on L2(0,1).

The operator  <A v, w> = integral of t v(t) w(t)  is injective but its range
is not closed: the functional  <f, w> = integral of w  sits in the closure of
the range without being attained, and the truncated candidates
u_eps = (0 on (0,eps), 1/t on [eps,1))  drive the residual to zero while
their norms blow up like 1/eps - 1.

On a uniform n-cell mesh with piecewise-constant (p0) or continuous
piecewise-linear (p1) elements the Gram matrix is the mass matrix and the
operator matrix holds the exactly integrated moments of t.  For p0 both are
diagonal, so the whitened operator is exactly diag of the cell midpoints and
the reduced minimum modulus is h/2: the family decays with log-log slope -1,
which is the finite-dimensional footprint of the non-closed range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulus import DiscreteOperator
from .spaces import DualVector, GramSpace

# 3-point Gauss-Legendre on [-1, 1]; exact through degree 5, comfortably
# covering the cubic integrand t * phi_i * phi_j of the p1 elements.
GAUSS3_NODES = np.array([-math.sqrt(3.0 / 5.0), 0.0, math.sqrt(3.0 / 5.0)])
GAUSS3_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


class MeshTooCoarse(ValueError):
    """The mesh cannot resolve the requested truncation parameter."""


@dataclass
class KikuchiInstance:
    cells: int
    kind: str
    operator: DiscreteOperator
    f: DualVector

    @property
    def h(self) -> float:
        return 1.0 / self.cells


def _normalize_kind(kind: str) -> str:
    k = kind.lower()
    if k not in ("p0", "p1"):
        raise ValueError(f"element kind must be 'p0' or 'p1', got {kind!r}")
    return k


def _p1_matrices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mass, weighted, f) for continuous p1 hats on all n+1 nodes of [0,1]."""
    h = 1.0 / n
    dim = n + 1
    mass = np.zeros((dim, dim))
    weighted = np.zeros((dim, dim))
    f = np.zeros(dim)
    left = np.arange(n) * h
    mid = left + 0.5 * h
    tg = mid[:, None] + 0.5 * h * GAUSS3_NODES[None, :]      # (n, 3)
    wg = 0.5 * h * GAUSS3_WEIGHTS[None, :]
    # local hat values on the reference cell at the Gauss nodes
    xi = 0.5 * (GAUSS3_NODES + 1.0)
    phi = np.stack([1.0 - xi, xi])                            # (2, 3)
    for a in range(2):
        for b in range(2):
            m_loc = np.sum(wg * phi[a] * phi[b], axis=1)
            t_loc = np.sum(wg * tg * phi[a] * phi[b], axis=1)
            rows = np.arange(n) + b
            cols = np.arange(n) + a
            np.add.at(mass, (rows, cols), m_loc)
            np.add.at(weighted, (rows, cols), t_loc)
    for b in range(2):
        np.add.at(f, np.arange(n) + b, np.sum(wg * phi[b], axis=1))
    return mass, weighted, f


def build_kikuchi(n: int, kind: str = "p0") -> KikuchiInstance:
    """Assemble the multiplication-by-t instance on n uniform cells."""
    if n < 2:
        raise ValueError(f"need at least 2 cells, got {n}")
    kind = _normalize_kind(kind)
    h = 1.0 / n
    if kind == "p0":
        midpoints = (np.arange(n) + 0.5) * h
        mass = np.diag(np.full(n, h))
        weighted = np.diag(h * midpoints)
        f = np.full(n, h)
    else:
        mass, weighted, f = _p1_matrices(n)
    space = GramSpace(mass)
    op = DiscreteOperator(domain=space, test_space=space, matrix=weighted)
    return KikuchiInstance(cells=n, kind=kind, operator=op, f=DualVector(space, f))


def kikuchi_family(cells: list[int], kind: str = "p0") -> list[KikuchiInstance]:
    return [build_kikuchi(n, kind) for n in cells]


def _moment_against_linear(lo: float, hi: float, eps: float, slope: float, intercept: float) -> float:
    """integral over [lo,hi] of (slope*t + intercept)/t restricted to t >= eps."""
    a = max(lo, eps)
    if hi <= a:
        return 0.0
    return slope * (hi - a) + intercept * math.log(hi / a)


def kikuchi_blowup(n: int, eps: float, kind: str = "p0") -> tuple[float, float]:
    """(residual, u_norm) for the L2 projection of u_eps onto the mesh space.

    residual is the dual-norm mismatch |A u_eps - f|; u_norm is the L2 norm
    of the projected u_eps, which grows like sqrt(1/eps - 1) as eps shrinks.
    The projection (rather than nodal interpolation) keeps the quoted norms
    honest L2 quantities.  Requires eps >= 2/n so the mesh resolves the jump.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if eps < 2.0 / n:
        raise MeshTooCoarse(f"eps = {eps} < 2/n = {2.0 / n}: refine the mesh")
    inst = build_kikuchi(n, kind)
    h = inst.h
    space = inst.operator.domain
    dim = space.dim
    load = np.zeros(dim)
    if inst.kind == "p0":
        for i in range(n):
            load[i] = _moment_against_linear(i * h, (i + 1) * h, eps, 0.0, 1.0)
    else:
        for cell in range(n):
            lo, hi = cell * h, (cell + 1) * h
            # falling hat of node `cell`: (hi - t)/h; rising hat of node cell+1
            load[cell] += _moment_against_linear(lo, hi, eps, -1.0 / h, hi / h)
            load[cell + 1] += _moment_against_linear(lo, hi, eps, 1.0 / h, -lo / h)
    coeffs = np.linalg.solve(space.gram, load)
    u_norm = space.norm(coeffs)
    residual = space.dual_norm(inst.operator.matrix @ coeffs - inst.f.coeffs)
    return residual, u_norm
