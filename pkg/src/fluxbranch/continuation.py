"""Branch tracing for ``-Δu + u = 0`` in Ω, ``∂u/∂η = λ f(u)`` on ∂Ω.

The branch of positive solutions leaves the trivial solution at
``λ* = μ1 / f'(0)`` and blows up as ``λ → 0+``. It is followed by
pseudo-arclength continuation in ``(u, λ)``; once the solution grows large
the unknowns switch to ``w = κ u`` with ``κ = λ^{1/(p-1)}``, whose boundary
flux ``κ^p f(|w|/κ)`` tends to ``b |w|^p`` as ``κ → 0``. In that regime the
continuation parameter is ``σ = log κ``, which keeps the system smooth down
to tiny λ and spaces points evenly in ``log λ``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import oracle_radial
from .assembly import Discretization, factorize, solve
from .errors import (
    BranchError,
    ConvergenceError,
    HypothesisError,
    LinearSolveError,
    NoConvergence,
    PreconditionError,
    TrivialSolutionError,
)
from .mesh import Disk
from .nonlinearity import Direction, HypothesisReport, NonlinearitySpec, PowerSum, analyze
from .steklov import SteklovPair, solve_steklov_first

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BranchPoint:
    """One accepted continuation state.

    ``u`` holds the solution itself, or ``w = λ^{1/(p-1)} u`` when
    ``rescaled`` is set. ``sup_norm`` and ``h1_norm`` always refer to the
    unscaled solution.
    """

    lam: float
    u: np.ndarray
    sup_norm: float
    h1_norm: float
    arclength: float
    newton_iters: int
    positive: bool
    rescaled: bool = False
    kappa: float = 1.0

    @property
    def solution(self) -> np.ndarray:
        return self.u / self.kappa if self.rescaled else self.u

    @property
    def scaled_solution(self) -> np.ndarray:
        """``w = λ^{1/(p-1)} u`` regardless of how the point is stored."""
        return self.u if self.rescaled else self.kappa * self.u


@dataclass
class ContinuationOptions:
    ds0: float = 1e-3
    ds_min: float = 1e-5
    ds_max: float = 0.2
    grow: float = 1.3
    newton_tol: float = 1e-10
    corrector_iters: int = 8
    lambda_min: float | None = None
    norm_max: float = 1e4
    switch_norm: float = 50.0
    max_steps: int = 5000
    max_failures: int = 200
    epsilon: float = 1e-3


@dataclass
class Diagram:
    points: list
    folds: list = field(default_factory=list)
    bifurcation_from_zero: tuple | None = None
    direction: Direction = Direction.INCONCLUSIVE
    direction_consistent: bool | None = None
    nonexistence_bound: float = math.inf
    metadata: dict = field(default_factory=dict)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([p.sup_norm for p in self.points])

    @property
    def arclengths(self) -> np.ndarray:
        return np.array([p.arclength for p in self.points])

    def max_lambda(self) -> float:
        vals = [self.lambdas.max()] if self.points else []
        vals += [lb for _, lb in self.folds]
        return float(max(vals))

    def summary(self) -> dict:
        lam = self.lambdas
        return {
            "n_points": len(self.points),
            "lambda_range": [float(lam.min()), float(lam.max())] if len(lam) else None,
            "sup_norm_range": [float(self.sup_norms.min()), float(self.sup_norms.max())] if len(lam) else None,
            "folds": [{"index": int(i), "lambda_bar": float(lb)} for i, lb in self.folds],
            "bifurcation_from_zero": None
            if self.bifurcation_from_zero is None
            else {"lambda_estimate": self.bifurcation_from_zero[0], "lambda_predicted": self.bifurcation_from_zero[1]},
            "direction": self.direction.value,
            "direction_consistent": self.direction_consistent,
            "nonexistence_bound": None if math.isinf(self.nonexistence_bound) else self.nonexistence_bound,
            "all_positive": all(p.positive for p in self.points),
        }


class NewtonInfo(NamedTuple):
    iterations: int
    residual: float


# --------------------------------------------------------------------- helpers

def _converged(disc, u, r, tol) -> bool:
    return np.linalg.norm(r) <= tol * (1.0 + np.linalg.norm(disc.A @ u))


def _make_point(disc, v, lam, kappa, rescaled, arclength, iters):
    u = v / kappa if rescaled else v
    return BranchPoint(
        lam=float(lam),
        u=v.copy(),
        sup_norm=float(np.max(np.abs(u))),
        h1_norm=disc.h1_norm(u),
        arclength=float(arclength),
        newton_iters=int(iters),
        positive=bool(np.min(v) > 0),
        rescaled=rescaled,
        kappa=float(kappa),
    )


def _steklov(disc, steklov):
    return steklov if steklov is not None else solve_steklov_first(disc.A, disc.B)


def newton_solve(disc: Discretization, u0, lam: float, f, tol: float = 1e-10, max_iters: int = 25,
                 full_output: bool = False):
    """Solve ``residual(u) = 0`` at fixed λ by damped Newton.

    Each step halves its length (at most 8 times) until the residual norm
    decreases. Converged when ``‖r‖ <= tol (1 + ‖A u‖)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    u = np.array(u0, dtype=float)
    r = disc.residual(u, lam, f)
    rn = float(np.linalg.norm(r))
    for it in range(max_iters + 1):
        if _converged(disc, u, r, tol):
            return (u, NewtonInfo(it, rn)) if full_output else u
        if it == max_iters:
            break
        du = solve(disc.jacobian(u, lam, f), -r)
        alpha = 1.0
        for _ in range(9):
            trial = u + alpha * du
            rt = disc.residual(trial, lam, f)
            if np.linalg.norm(rt) < rn:
                break
            alpha *= 0.5
        u, r = trial, rt
        rn = float(np.linalg.norm(r))
    raise NoConvergence(f"Newton did not converge in {max_iters} iterations (|r| = {rn:.3e})",
                        residual=rn, iterations=max_iters)


def branch_from_trivial(disc: Discretization, f: NonlinearitySpec, steklov: SteklovPair | None = None,
                        eps: float = 1e-3, tol: float = 1e-10, max_iters: int = 25) -> BranchPoint:
    """First nontrivial branch point, of sup-norm ``eps``, near ``(μ1/f'(0), 0)``.

    The predictor ``(μ1/f'(0), eps φ1)`` is corrected by Newton on the system
    augmented with ``u[i*] = eps``, where ``i*`` is the vertex at which φ1
    peaks.
    """
    slope = f.slope_at_zero
    report = analyze(f)
    if not report.bifurcates_from_zero:
        raise HypothesisError("branching from the trivial solution needs f(0) = 0, f'(0) > 0 and a remainder exponent")
    if not 1e-4 <= eps <= 1e-2:
        raise ValueError("eps must lie in [1e-4, 1e-2]")
    steklov = _steklov(disc, steklov)
    istar = int(np.argmax(steklov.phi1))
    u = eps * steklov.phi1 / steklov.phi1[istar]
    lam = steklov.mu1 / slope
    n = disc.n
    row = sp.csr_matrix(([1.0], ([0], [istar])), shape=(1, n))
    for it in range(max_iters + 1):
        r = disc.residual(u, lam, f)
        c = u[istar] - eps
        if _converged(disc, u, r, tol) and abs(c) <= tol * eps:
            return _make_point(disc, u, lam, 1.0, False, 0.0, it)
        if it == max_iters:
            break
        g_lam = -disc.load(f.eval, u)
        M = sp.bmat([[disc.jacobian(u, lam, f), g_lam[:, None]], [row, None]], format="csc")
        d = solve(M, -np.append(r, c))
        u, lam = u + d[:n], lam + d[n]
    raise NoConvergence("kickoff corrector failed; try a smaller eps", residual=float(np.linalg.norm(r)),
                        iterations=max_iters)


def branch_from_guess(disc: Discretization, f: NonlinearitySpec, steklov: SteklovPair | None = None,
                      t: float = 1.0, tol: float = 1e-10) -> BranchPoint:
    """Branch point near sup-norm ``t`` seeded by ``(μ1 t / f(t), t φ1)``.

    Used when ``f'(0) = 0`` and the branch cannot be entered from the trivial
    solution. On a disk the exact radial profile serves as initial guess.
    """
    steklov = _steklov(disc, steklov)
    tag = disc.mesh.domain_tag
    if isinstance(tag, Disk):
        u0 = oracle_radial.interpolate_profile(disc.mesh, t, tag.radius)
    else:
        u0 = t * steklov.phi1
    lam = steklov.mu1 * t / float(f.eval(t))
    u = newton_solve(disc, u0, lam, f, tol)
    if np.max(np.abs(u)) < 1e-6 * t:
        raise TrivialSolutionError("Newton collapsed to the trivial solution")
    return _make_point(disc, u, lam, 1.0, False, 0.0, 0)


# --------------------------------------------------------------------- continuation

class _Mode:
    """Residual, Jacobian and parameter derivative in one set of unknowns.

    Direct mode: unknowns ``(u, λ)``. Rescaled mode: ``(w, σ)`` with
    ``σ = log κ`` and ``λ = κ^{p-1}``.
    """

    def __init__(self, disc, f, rescaled, lam_ref):
        self.disc, self.f, self.rescaled = disc, f, rescaled
        self.p = f.growth_exponent
        self.c_ref = 1.0 if rescaled else lam_ref

    def lam(self, c):
        return math.exp((self.p - 1.0) * c) if self.rescaled else c

    def kappa(self, c):
        return math.exp(c) if self.rescaled else (c ** (1.0 / (self.p - 1.0)) if self.p > 1 and c > 0 else 1.0)

    def residual(self, v, c):
        if self.rescaled:
            return self.disc.residual(v, 1.0, self.f.rescaled(math.exp(c)))
        return self.disc.residual(v, c, self.f)

    def jacobian(self, v, c):
        if self.rescaled:
            return self.disc.jacobian(v, 1.0, self.f.rescaled(math.exp(c)))
        return self.disc.jacobian(v, c, self.f)

    def d_param(self, v, c):
        if self.rescaled:
            return -self.disc.load(self.f.rescaled_log_derivative(math.exp(c)).eval, v)
        return -self.disc.load(self.f.eval, v)


def _weights(mode, n):
    return np.append(np.full(n, 1.0 / math.sqrt(n)), 1.0 / mode.c_ref)


def _scaled(mode, v, c):
    return np.append(v, c) * _weights(mode, len(v))


def _bordered(mode, v, c, row):
    """``[[G_v, G_c], [row]]`` with ``row`` acting on unscaled unknowns."""
    n = len(v)
    return sp.bmat(
        [
            [mode.jacobian(v, c), mode.d_param(v, c)[:, None]],
            [sp.csr_matrix(row[None, :n]), sp.csr_matrix([[row[n]]])],
        ],
        format="csc",
    )


def _initial_tangent(mode, v, c, direction):
    """Unit tangent (scaled metric, scaled units) oriented by ``direction`` relative to ``v``."""
    n = len(v)
    wts = _weights(mode, n)
    ref = np.append(v, 0.0) * wts
    ref /= np.linalg.norm(ref)
    t = solve(_bordered(mode, v, c, ref * wts), np.append(np.zeros(n), 1.0))
    ts = t * wts
    ts /= np.linalg.norm(ts)
    if direction * float(ts[:n] @ v) < 0:
        ts = -ts
    return ts


def _corrector(mode, v0, c0, tau_s, ds, tol, max_iters):
    """Newton on ``G(v, c) = 0`` plus the pseudo-arclength equation; ``tau_s`` is in scaled units."""
    n = len(v0)
    wts = _weights(mode, n)
    y0 = _scaled(mode, v0, c0)
    tau = tau_s / wts
    row = tau_s * wts
    v = v0 + ds * tau[:n]
    c = c0 + ds * tau[n]
    for it in range(1, max_iters + 1):
        if not mode.rescaled and c <= 0:
            raise NoConvergence("parameter left the admissible range")
        r = mode.residual(v, c)
        arc = float(tau_s @ (_scaled(mode, v, c) - y0)) - ds
        d = solve(_bordered(mode, v, c, row), -np.append(r, arc))
        v, c = v + d[:n], c + d[n]
        if not np.all(np.isfinite(v)) or not math.isfinite(c):
            raise NoConvergence("corrector diverged")
        r = mode.residual(v, c)
        if _converged(mode.disc, v, r, tol) and np.linalg.norm(d[:n]) <= 1e-6 * (1 + np.linalg.norm(v)):
            return v, c, it
    raise NoConvergence("corrector failed", residual=float(np.linalg.norm(r)), iterations=max_iters)


def continue_branch(disc: Discretization, f: NonlinearitySpec, start: BranchPoint,
                    steklov: SteklovPair | None = None, options: ContinuationOptions | None = None,
                    direction: int = 1) -> Diagram:
    """Pseudo-arclength continuation from ``start`` until λ or the norm leave their window.

    ``direction = +1`` follows the branch towards growing solution norm.
    Stops when ``λ <= lambda_min``, ``sup_norm >= norm_max``, the step size
    underflows, or ``max_steps`` is reached; the reason is recorded in
    ``metadata["termination"]``.
    """
    opts = options or ContinuationOptions()
    steklov = _steklov(disc, steklov)
    report = analyze(f)
    p = f.growth_exponent
    lam_ref = steklov.mu1 / f.slope_at_zero if f.slope_at_zero > 0 else start.lam
    lam_min = opts.lambda_min if opts.lambda_min is not None else 1e-3 * lam_ref
    can_rescale = p > 1

    points = [start]
    meta = {
        "mesh": disc.mesh.describe(),
        "f": str(f),
        "mu1": steklov.mu1,
        "lambda_ref": lam_ref,
        "lambda_min": lam_min,
        "norm_max": opts.norm_max,
        "switch_norm": opts.switch_norm,
        "newton_tol": opts.newton_tol,
        "switch_index": None,
        "switch_roundtrip_error": None,
        "rescaled_sup_max": None,
        "termination": None,
        "failures": 0,
    }

    if start.rescaled:
        mode = _Mode(disc, f, True, lam_ref)
        v, c = start.u.copy(), math.log(start.kappa)
    else:
        mode = _Mode(disc, f, False, lam_ref)
        v, c = start.u.copy(), start.lam
    tau_s = _initial_tangent(mode, v, c, direction)
    prev = None  # (v, c) of the previous accepted point
    ds = opts.ds0
    arclength = start.arclength
    failures = 0

    def diagram_so_far():
        return _finish(disc, f, steklov, report, points, meta)

    for _ in range(opts.max_steps):
        if prev is not None:
            sec = _scaled(mode, v, c) - _scaled(mode, *prev)
            tau_s = sec / np.linalg.norm(sec)
        try:
            v_new, c_new, iters = _corrector(mode, v, c, tau_s, ds, opts.newton_tol, opts.corrector_iters)
            if np.min(v_new) <= 0:
                raise NoConvergence("corrector produced a non-positive state")
        except (ConvergenceError, LinearSolveError, ArithmeticError) as exc:
            failures += 1
            meta["failures"] = failures
            if failures > opts.max_failures:
                raise BranchError(f"too many corrector failures ({exc})", diagram_so_far()) from exc
            ds *= 0.5
            if ds < opts.ds_min:
                meta["termination"] = "step_underflow"
                break
            continue

        step = float(np.linalg.norm(_scaled(mode, v_new, c_new) - _scaled(mode, v, c)))
        arclength += step
        prev, v, c = (v, c), v_new, c_new
        lam = mode.lam(c)
        pt = _make_point(disc, v, lam, mode.kappa(c), mode.rescaled, arclength, iters)
        points.append(pt)
        if iters <= 3:
            ds = min(ds * opts.grow, opts.ds_max)

        if lam <= lam_min:
            meta["termination"] = "lambda_min"
            break
        if pt.sup_norm >= opts.norm_max:
            meta["termination"] = "norm_max"
            break
        if not mode.rescaled and can_rescale and pt.sup_norm >= opts.switch_norm:
            # change unknowns to (w, log kappa) for both stored states
            kap = lam ** (1.0 / (p - 1.0))
            kap_prev = prev[1] ** (1.0 / (p - 1.0))
            w = kap * v
            meta["switch_roundtrip_error"] = float(np.max(np.abs(w / kap - v)) / np.max(np.abs(v)))
            meta["switch_index"] = len(points) - 1
            mode = _Mode(disc, f, True, lam_ref)
            prev = (kap_prev * prev[0], math.log(kap_prev))
            v, c = w, math.log(kap)
            points[-1] = replace(pt, u=w.copy(), rescaled=True, kappa=kap)
    else:
        meta["termination"] = "max_steps"

    return diagram_so_far()


def _finish(disc, f, steklov, report, points, meta) -> Diagram:
    resc = [float(np.max(pt.scaled_solution)) for pt in points if pt.rescaled]
    meta["rescaled_sup_max"] = max(resc) if resc else None
    diagram = Diagram(points=list(points), metadata=meta)
    K = report.linear_bound
    diagram.nonexistence_bound = steklov.mu1 / K if K > 0 else math.inf
    if len(points) >= 3:
        diagram.folds = detect_folds(diagram)
    if report.bifurcates_from_zero:
        predicted = steklov.mu1 / report.slope_at_zero
        diagram.bifurcation_from_zero = (_extrapolate_lambda_star(diagram), predicted)
        verdict = classify_direction(f, report, diagram)
        diagram.direction = verdict.direction
        diagram.direction_consistent = verdict.consistent
    return diagram


def _extrapolate_lambda_star(diagram, max_norm=0.05):
    pts = sorted((p for p in diagram.points if p.sup_norm <= max_norm), key=lambda p: p.sup_norm)[:6]
    if not pts:
        return None
    if len(pts) < 3:
        return pts[0].lam
    t = np.array([p.sup_norm for p in pts])
    lam = np.array([p.lam for p in pts])
    return float(np.polyval(np.polyfit(t, lam, 2), 0.0))


def trace_branch(disc: Discretization, f: NonlinearitySpec, steklov: SteklovPair | None = None,
                 options: ContinuationOptions | None = None) -> Diagram:
    """Start on the branch (from the trivial solution if possible) and follow it to blow-up."""
    opts = options or ContinuationOptions()
    steklov = _steklov(disc, steklov)
    if f.growth_exponent <= 1:
        raise HypothesisError("f is linear: its solutions fill the eigenline λ = μ1/f'(0), there is no branch to trace")
    if analyze(f).bifurcates_from_zero:
        start = branch_from_trivial(disc, f, steklov, opts.epsilon, opts.newton_tol)
    else:
        start = branch_from_guess(disc, f, steklov, 1.0, opts.newton_tol)
    return continue_branch(disc, f, start, steklov, opts)


# --------------------------------------------------------------------- diagnostics

def detect_folds(diagram) -> list:
    """Turning points of λ along the branch as ``(index, refined λ̄)``.

    The refinement takes the extremum of the parabola through the turning
    point and its two neighbours, parametrized by arclength. Changes in λ at
    round-off level are ignored.
    """
    pts = diagram.points if isinstance(diagram, Diagram) else diagram
    lam = np.array([p.lam for p in pts])
    s = np.array([p.arclength for p in pts])
    dl = np.diff(lam)
    noise = 1e-12 * np.maximum(np.abs(lam[:-1]), np.abs(lam[1:]))
    dl[np.abs(dl) <= noise] = 0.0
    folds = []
    for i in range(1, len(lam) - 1):
        if dl[i - 1] * dl[i] < 0:
            a, b, c = np.polyfit(s[i - 1:i + 2] - s[i], lam[i - 1:i + 2], 2)
            lam_bar = c - b * b / (4 * a) if a != 0 else lam[i]
            folds.append((i, float(lam_bar)))
    return folds


class DirectionVerdict(NamedTuple):
    direction: Direction
    numerical: Direction
    consistent: bool


def classify_direction(f, report: HypothesisReport | None, diagram: Diagram, max_norm: float = 0.05) -> DirectionVerdict:
    """Analytic direction from the sign of the remainder coefficient, checked against the branch.

    The numerical verdict uses the sign of ``λ_i - μ1/f'(0)`` over the points
    with sup-norm at most ``max_norm`` (five or more are needed).
    """
    report = report or analyze(f)
    analytic = report.predicted_direction
    if not report.bifurcates_from_zero:
        # no bifurcation point from zero: nothing to classify on either side
        return DirectionVerdict(Direction.INCONCLUSIVE, Direction.INCONCLUSIVE, True)
    if diagram.bifurcation_from_zero is not None:
        lam_star = diagram.bifurcation_from_zero[1]
    else:
        lam_star = diagram.metadata["mu1"] / report.slope_at_zero
    near = [p.lam - lam_star for p in diagram.points if p.sup_norm <= max_norm]
    if len(near) < 5:
        numerical = Direction.INCONCLUSIVE
    elif all(d < 0 for d in near):
        numerical = Direction.SUBCRITICAL
    elif all(d > 0 for d in near):
        numerical = Direction.SUPERCRITICAL
    else:
        numerical = Direction.INCONCLUSIVE
    return DirectionVerdict(analytic, numerical, analytic == numerical)


def onset_coefficient(diagram: Diagram, f: NonlinearitySpec, steklov: SteklovPair, disc: Discretization,
                  window=(1e-3, 5e-2)) -> tuple[float, float]:
    """Limit of ``(μ1/f'(0) - λ) / ‖u‖^{ν-1}`` at the bifurcation point: numeric vs predicted.

    The numeric value extrapolates the small-norm quotients to zero norm with a
    quadratic least-squares fit in the sup-norm. The prediction is
    ``R0 μ1 / f'(0)² · ∫φ1^{1+ν} / ∫φ1²`` with boundary integrals of the
    discrete eigenfunction.
    """
    report = analyze(f)
    if not report.bifurcates_from_zero:
        raise HypothesisError("the ratio needs f'(0) > 0 and a remainder exponent")
    nu, r0, slope = report.remainder_exponent, report.remainder_lower, report.slope_at_zero
    lam_star = steklov.mu1 / slope
    lo, hi = window
    pts = [p for p in diagram.points if lo * (1 - 1e-6) <= p.sup_norm <= hi and not p.rescaled]
    if len(pts) < 3:
        raise PreconditionError(f"need at least 3 branch points with sup-norm in {window}, found {len(pts)}")
    t = np.array([p.sup_norm for p in pts])
    g = np.array([(lam_star - p.lam) / p.sup_norm ** (nu - 1.0) for p in pts])
    deg = min(2, len(pts) - 1)
    numeric = float(np.polyval(np.polyfit(t, g, deg), 0.0))
    phi = steklov.phi1
    ratio = disc.boundary_integral(lambda s: np.abs(s) ** (1.0 + nu), phi) / disc.boundary_integral(lambda s: s * s, phi)
    analytic = r0 * steklov.mu1 / slope**2 * ratio
    return numeric, analytic


def multiplicity_scan(diagram: Diagram, lam_query: float) -> int:
    """Number of branch crossings of the vertical line ``λ = lam_query``.

    The branch is taken to start at the bifurcation point ``(μ1/f'(0), 0)``
    when there is one. Turning points whose refined λ̄ reaches past the query
    while the neighbouring samples do not add two crossings.
    """
    if lam_query <= 0:
        raise ValueError("lam_query must be positive")
    lam = list(diagram.lambdas)
    offset = 0
    if diagram.bifurcation_from_zero is not None:
        lam = [diagram.bifurcation_from_zero[1]] + lam
        offset = 1
    d = np.array(lam) - lam_query
    count = int(np.sum(d[:-1] * d[1:] < 0))
    # samples landing exactly on the query line
    for i in np.flatnonzero(d == 0):
        if 0 < i < len(d) - 1 and d[i - 1] * d[i + 1] < 0:
            count += 1
    for i, lam_bar in diagram.folds:
        j = i + offset
        nb = d[j - 1:j + 2]
        if len(nb) == 3 and np.all(nb < 0) and lam_bar > lam_query:
            count += 2
        elif len(nb) == 3 and np.all(nb > 0) and lam_bar < lam_query:
            count += 2
    return count


def solve_limiting(disc: Discretization, b: float, p: float, w_init=None, steklov: SteklovPair | None = None,
                   tol: float = 1e-10, max_iters: int = 25) -> np.ndarray:
    """Positive solution of ``-Δw + w = 0``, ``∂w/∂η = b |w|^p``.

    The default initial guess is the radial solution ``t* I0(r)/I0(R)`` with
    ``t* = (μ1/b)^{1/(p-1)}`` on a disk, and ``t* φ1`` elsewhere.
    """
    if b <= 0 or p <= 1:
        raise ValueError("need b > 0 and p > 1")
    g = PowerSum([b], [p])
    tag = disc.mesh.domain_tag
    if w_init is None:
        if isinstance(tag, Disk):
            t_star = oracle_radial.limiting_sup_norm(b, p, tag.radius)
            w_init = oracle_radial.interpolate_profile(disc.mesh, t_star, tag.radius)
        else:
            steklov = _steklov(disc, steklov)
            w_init = (steklov.mu1 / b) ** (1.0 / (p - 1.0)) * steklov.phi1
    w_init = np.asarray(w_init, dtype=float)
    sup0 = float(np.max(np.abs(w_init)))
    if not (np.min(w_init) > 0 and 0.1 <= sup0 <= 100):
        raise ValueError("w_init must be positive with sup-norm in [0.1, 100]")
    w = newton_solve(disc, w_init, 1.0, g, tol, max_iters)
    if np.max(np.abs(w)) < 1e-6 * sup0:
        raise TrivialSolutionError("Newton converged to the trivial solution")
    return w


def verify_point(disc: Discretization, f: NonlinearitySpec, point: BranchPoint, tol: float = 1e-10) -> float:
    """Residual of ``point`` recomputed from scratch, relative to the Newton acceptance threshold.

    Values <= 1 mean the point satisfies the convergence test it was accepted
    with (in the unknowns it was computed in).
    """
    if point.rescaled:
        r = disc.residual(point.u, 1.0, f.rescaled(point.kappa))
    else:
        r = disc.residual(point.u, point.lam, f)
    return float(np.linalg.norm(r) / (tol * (1.0 + np.linalg.norm(disc.A @ point.u))))


def tail_slope(diagram: Diagram, decades: float = 1.0) -> float:
    """Least-squares slope of log sup-norm against log λ over the last ``decades`` of λ."""
    lam = diagram.lambdas
    sup = diagram.sup_norms
    lam_end = lam[-1]
    sel = lam <= lam_end * 10**decades
    # keep only the final monotone run
    idx = np.flatnonzero(sel)
    first = idx[-1]
    while first - 1 in idx:
        first -= 1
    sl = slice(first, idx[-1] + 1)
    return float(np.polyfit(np.log(lam[sl]), np.log(sup[sl]), 1)[0])
