"""Closed-form radial solutions on a disk.

On the disk of radius R, ``u(r) = c I0(r)`` solves ``-Δu + u = 0`` and the
flux condition reduces to ``c I1(R) = λ f(c I0(R))``. Writing ``t = c I0(R)``
(the sup-norm, since I0 increases) gives the exact diagram
``λ(t) = μ1 t / f(t)`` with ``μ1 = I1(R)/I0(R)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import OracleRangeError

SERIES_MAX_ARG = 30.0


def bessel_I(n: int, x, tol: float = 1e-15):
    """Modified Bessel function I_n (n = 0 or 1) by its power series."""
    if n not in (0, 1):
        raise ValueError("only orders 0 and 1 are supported")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > SERIES_MAX_ARG) or not np.all(np.isfinite(x)):
        raise OracleRangeError(f"series evaluation needs 0 <= x <= {SERIES_MAX_ARG}")
    half = 0.5 * x
    term = half**n / math.factorial(n)
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * half * half / (k * (n + k))
        total = total + term
        if np.all(term <= tol * total):
            break
    return total if total.ndim else float(total)


def disk_mu1(radius: float) -> float:
    """First Steklov eigenvalue of ``-Δψ + ψ = 0``, ``∂ψ/∂η = μψ`` on the disk."""
    if not 0 < radius <= SERIES_MAX_ARG:
        raise OracleRangeError(f"radius must lie in (0, {SERIES_MAX_ARG}]")
    return bessel_I(1, radius) / bessel_I(0, radius)


def radial_profile(t: float, r, radius: float = 1.0):
    """Radial solution with boundary value (and sup-norm) ``t``: ``t I0(r)/I0(R)``."""
    return t * bessel_I(0, np.asarray(r, dtype=float)) / bessel_I(0, radius)


def interpolate_profile(mesh, t: float, radius: float | None = None) -> np.ndarray:
    """Nodal values of :func:`radial_profile` on ``mesh`` (radii clipped to R)."""
    if radius is None:
        radius = mesh.domain_tag.radius
    r = np.minimum(np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1]), radius)
    return radial_profile(t, r, radius)


def radial_energy(radius: float = 1.0) -> float:
    """``∫ |∇I0|² + I0²`` over the disk, by 1-D quadrature in r."""
    integrand = lambda r: (bessel_I(1, r) ** 2 + bessel_I(0, r) ** 2) * r
    val, _ = integrate.quad(integrand, 0.0, radius, epsabs=1e-14, epsrel=1e-13)
    return 2.0 * math.pi * val


@dataclass(frozen=True)
class RadialBranch:
    t_grid: np.ndarray
    lambda_of_t: np.ndarray
    mu1_exact: float
    radius: float

    def profile(self, t: float, r):
        return radial_profile(t, r, self.radius)


def lambda_of_t(f, t, radius: float = 1.0):
    """Exact parameter of the radial solution whose sup-norm is ``t``."""
    t = np.asarray(t, dtype=float)
    ft = np.asarray(f.eval(t), dtype=float)
    if np.any(ft <= 0):
        raise ValueError("f vanishes on the t grid")
    out = disk_mu1(radius) * t / ft
    return out if out.ndim else float(out)


def radial_branch(f, radius: float = 1.0, t_grid=None) -> RadialBranch:
    if t_grid is None:
        t_grid = np.logspace(-4, 4, 401)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ValueError("t grid must be positive")
    return RadialBranch(t_grid, lambda_of_t(f, t_grid, radius), disk_mu1(radius), radius)


def limiting_sup_norm(b: float, p: float, radius: float = 1.0) -> float:
    """Sup-norm of the radial solution of the pure-power limiting problem."""
    return (disk_mu1(radius) / b) ** (1.0 / (p - 1.0))
