"""First eigenpair of the Steklov pencil ``A φ = μ B φ``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import _matrix, factorize
from .errors import NoConvergence, PreconditionError


@dataclass(frozen=True)
class SteklovPair:
    mu1: float
    phi1: np.ndarray
    residual_norm: float
    iterations: int


def solve_steklov_first(A, B, tol: float = 1e-10, max_iter: int = 500) -> SteklovPair:
    """Smallest eigenvalue of ``A φ = μ B φ`` with A positive definite, B semidefinite.

    Power iteration on ``A⁻¹B`` converges to its largest eigenvalue ``1/μ1``;
    B annihilates interior components, so iterates stay in the range of A⁻¹B
    and B itself is never inverted. The returned eigenvector is positive and
    scaled to unit sup-norm.
    """
    A, B = _matrix(A), _matrix(B)
    n = A.shape[0]
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise PreconditionError("A has a non-positive diagonal entry; it is not positive definite")
    lu = factorize(A)
    x = np.ones(n)
    if not np.any(B @ x):
        raise PreconditionError("B has trivial range")
    res = np.inf
    for it in range(1, max_iter + 1):
        x = lu.solve(B @ x)
        x /= x[np.argmax(np.abs(x))]
        Ax, Bx = A @ x, B @ x
        xAx, xBx = float(x @ Ax), float(x @ Bx)
        if xAx <= 0:
            raise PreconditionError("A is not positive definite (x'Ax <= 0)")
        mu = xAx / xBx
        res = float(np.linalg.norm(Ax - mu * Bx) / np.linalg.norm(Ax))
        if res <= tol:
            return SteklovPair(mu, x, res, it)
    raise NoConvergence(f"inverse iteration stalled after {max_iter} iterations", residual=res, iterations=max_iter)
