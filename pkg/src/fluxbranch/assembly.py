"""Linear finite elements for the weak form

    ∫ ∇u·∇ψ + ∫ uψ = λ ∫_∂Ω f(u) ψ   for all ψ.

Interior integrals are exact for P1 hat functions. Boundary integrals use
two-point Gauss quadrature on every boundary edge, with the nonlinearity
evaluated at the quadrature points of the traced linear interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, EvaluationError, LinearSolveError

# Gauss points on [0, 1] and the two edge hat functions evaluated there
_XI = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])
_PHI = np.array([[1.0 - _XI[0], _XI[0]], [1.0 - _XI[1], _XI[1]]])  # [q, local node]


class OperatorKind(str, Enum):
    INTERIOR_H1 = "InteriorH1"
    BOUNDARY_MASS = "BoundaryMass"
    BOUNDARY_WEIGHTED = "BoundaryWeighted"


@dataclass(frozen=True)
class DiscreteOperator:
    """Sparse symmetric matrix tagged with the bilinear form it represents."""

    matrix: sp.csr_matrix
    kind: OperatorKind

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v

    def quadratic(self, v) -> float:
        return float(v @ (self.matrix @ v))


def _matrix(op):
    return op.matrix if isinstance(op, DiscreteOperator) else op


def _symmetric(rows, cols, vals, n):
    """Sum local contributions into a matrix whose (i, j) and (j, i) entries are bitwise equal.

    Local matrices are symmetric, so only the upper-triangle copies are
    accumulated and the strict upper part is then mirrored.
    """
    keep = rows <= cols
    U = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    U.sum_duplicates()
    return (U + sp.triu(U, k=1, format="csr").T).tocsr()


def _edge_data(mesh):
    e = mesh.boundary_edges
    return e, 0.5 * mesh.boundary_edge_lengths()


def assemble_interior_form(mesh) -> DiscreteOperator:
    """Matrix of ``∫ ∇φi·∇φj + φi φj``."""
    p = mesh.vertices[mesh.triangles]
    areas = mesh.signed_areas()
    if areas.size and np.any(areas < 1e-14 * np.mean(np.abs(areas))):
        k = int(np.argmin(areas))
        raise AssemblyError(f"degenerate triangle {k} (area {areas[k]:.3e})")
    # gradient of hat a is (b_a, c_a) / (2 area)
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    stiff = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * areas)[:, None, None]
    mass = (areas / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    local = stiff + mass
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return DiscreteOperator(_symmetric(rows, cols, local.ravel(), n), OperatorKind.INTERIOR_H1)


def _edge_matrix(mesh, qweights, kind):
    """Assemble ``sum_q w[e, q] φa(q) φb(q)`` over boundary edges."""
    e = mesh.boundary_edges
    local = np.einsum("eq,qa,qb->eab", qweights, _PHI, _PHI)
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    n = mesh.n_vertices
    return DiscreteOperator(_symmetric(rows, cols, local.ravel(), n), kind)


def assemble_boundary_mass(mesh) -> DiscreteOperator:
    """Matrix of ``∫_∂Ω φi φj``."""
    _, half = _edge_data(mesh)
    return _edge_matrix(mesh, np.repeat(half[:, None], 2, axis=1), OperatorKind.BOUNDARY_MASS)


def trace_at_quadrature(mesh, u) -> np.ndarray:
    """Values of the traced interpolant at the two Gauss points of every boundary edge."""
    e = mesh.boundary_edges
    u = np.asarray(u, dtype=float)
    return u[e] @ _PHI.T  # [edge, q]


def _apply(g, uq):
    try:
        vals = np.asarray(g(uq), dtype=float)
    except EvaluationError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise EvaluationError(f"boundary function failed: {exc}", value=None) from exc
    if vals.shape != uq.shape:
        vals = np.broadcast_to(vals, uq.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        v = float(uq[bad].flat[0])
        raise EvaluationError(f"boundary function not finite at u = {v!r}", value=v)
    return vals


def boundary_load(mesh, g, u) -> np.ndarray:
    """Vector with entries ``∫_∂Ω g(u_h) φi``."""
    e, half = _edge_data(mesh)
    uq = trace_at_quadrature(mesh, u)
    with np.errstate(invalid="ignore"):
        gq = _apply(g, uq) * half[:, None]
    contrib = gq @ _PHI  # [edge, local node]
    n = mesh.n_vertices
    return np.bincount(e[:, 0], contrib[:, 0], minlength=n) + np.bincount(e[:, 1], contrib[:, 1], minlength=n)


def boundary_integral(mesh, g, u) -> float:
    """``∫_∂Ω g(u_h)`` by edge quadrature."""
    _, half = _edge_data(mesh)
    return float(np.sum(_apply(g, trace_at_quadrature(mesh, u)) * half[:, None]))


def assemble_boundary_weighted(mesh, weight, u) -> DiscreteOperator:
    """Matrix of ``∫_∂Ω weight(u_h) φi φj``."""
    _, half = _edge_data(mesh)
    wq = _apply(weight, trace_at_quadrature(mesh, u)) * half[:, None]
    return _edge_matrix(mesh, wq, OperatorKind.BOUNDARY_WEIGHTED)


def residual(A, mesh, u, lam: float, f) -> np.ndarray:
    """``A u - λ ∫_∂Ω f(|u_h|) φi``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    r = _matrix(A) @ u
    if lam != 0.0:
        r = r - lam * boundary_load(mesh, f.eval, u)
    return r


def jacobian(A, mesh, u, lam: float, f) -> DiscreteOperator:
    """``A - λ ∫_∂Ω f'(u_h) φi φj`` with the derivative of the even extension."""
    if lam == 0.0:
        return DiscreteOperator(_matrix(A).copy(), OperatorKind.INTERIOR_H1)
    W = assemble_boundary_weighted(mesh, f.eval_prime, u)
    return DiscreteOperator((_matrix(A) - lam * W.matrix).tocsr(), OperatorKind.BOUNDARY_WEIGHTED)


def factorize(M):
    """Sparse LU of ``M``; singular matrices raise :class:`LinearSolveError`."""
    try:
        return spla.splu(sp.csc_matrix(_matrix(M)))
    except RuntimeError as exc:
        raise LinearSolveError(f"linear solve failed: {exc}") from exc


def solve(M, rhs) -> np.ndarray:
    x = factorize(M).solve(np.asarray(rhs, dtype=float))
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("linear solve produced non-finite values")
    return x


class Discretization:
    """Mesh plus its assembled interior form and boundary mass, shared read-only."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.A = assemble_interior_form(mesh)
        self.B = assemble_boundary_mass(mesh)

    @property
    def n(self) -> int:
        return self.mesh.n_vertices

    def load(self, g, u) -> np.ndarray:
        return boundary_load(self.mesh, g, u)

    def residual(self, u, lam, f) -> np.ndarray:
        return residual(self.A, self.mesh, u, lam, f)

    def jacobian(self, u, lam, f) -> sp.csr_matrix:
        return jacobian(self.A, self.mesh, u, lam, f).matrix

    def h1_norm(self, u) -> float:
        return math.sqrt(max(self.A.quadratic(u), 0.0))

    def boundary_integral(self, g, u) -> float:
        return boundary_integral(self.mesh, g, u)
