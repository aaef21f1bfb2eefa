"""Boundary nonlinearities as finite power sums ``f(s) = sum_j a_j s**e_j``.

Every evaluation uses the even extension ``f(|s|)``, so Newton iterates that
dip below zero stay meaningful. The module also extracts the structural
constants of ``f`` (growth at infinity, slope and remainder at zero, linear
lower bound) and runs the integrability bootstrap for the trace exponents.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EvaluationError, SpecError

OVERFLOW_LIMIT = 1e150
_GRID = np.logspace(-8, 8, 1601)

_TERM = re.compile(
    r"""([+-]?)\s*
        (\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*
        (\*?\s*s\s*(?:\^\s*(\d+(?:\.\d*)?|\.\d+))?)?""",
    re.VERBOSE,
)


class PowerSum:
    """Evaluator for ``sum_j a_j |s|**e_j`` and its derivative on the real line.

    No validation happens here; this is the inner-loop workhorse also used for
    the rescaled nonlinearities built during continuation.
    """

    def __init__(self, coefficients, exponents):
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.exponents = np.asarray(exponents, dtype=float)

    def _abs_checked(self, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        if a.size and not np.all(a <= OVERFLOW_LIMIT):
            bad = a[~(a <= OVERFLOW_LIMIT)].flat[0]
            raise EvaluationError(f"argument {bad!r} beyond evaluation range", value=float(bad))
        return s, a

    def eval(self, s):
        s, a = self._abs_checked(s)
        out = np.zeros_like(a)
        for c, e in zip(self.coefficients, self.exponents):
            out += c * a**e
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite nonlinearity value", value=float(a.max()))
        return out if out.ndim else float(out)

    def eval_prime(self, s):
        """d/ds f(|s|), with the right derivative used at s = 0."""
        s, a = self._abs_checked(s)
        out = np.zeros_like(a)
        for c, e in zip(self.coefficients, self.exponents):
            out += (c * e) * a ** (e - 1.0)
        out = np.where(s < 0, -out, out)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite derivative value", value=float(a.max()))
        return out if out.ndim else float(out)

    __call__ = eval


@dataclass(frozen=True)
class NonlinearitySpec(PowerSum):
    """Validated power sum with exponents >= 1, no constant term and positive leading coefficient.

    ``terms`` is a sequence of ``(coefficient, exponent)`` pairs with strictly
    increasing exponents. Construction fails unless ``f >= 0`` on ``[0, inf)``.
    """

    terms: tuple = field(default=())

    def __post_init__(self):
        terms = tuple((float(c), float(e)) for c, e in self.terms)
        terms = tuple(t for t in terms if t[0] != 0.0)
        if not terms:
            raise SpecError("empty term list")
        exps = [e for _, e in terms]
        if any(e < 1.0 for e in exps):
            raise SpecError("exponents must be >= 1 (f(0) = 0 and f is C^1)")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise SpecError("exponents must be strictly increasing")
        if terms[-1][0] <= 0:
            raise SpecError("leading coefficient must be positive")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "coefficients", np.array([c for c, _ in terms]))
        object.__setattr__(self, "exponents", np.array(exps))
        _check_nonnegative(self)

    @classmethod
    def parse(cls, text: str) -> "NonlinearitySpec":
        return parse_nonlinearity(text)

    @property
    def growth_exponent(self) -> float:
        return self.terms[-1][1]

    @property
    def growth_coefficient(self) -> float:
        return self.terms[-1][0]

    @property
    def slope_at_zero(self) -> float:
        return self.terms[0][0] if self.terms[0][1] == 1.0 else 0.0

    def scaled(self, c: float) -> "NonlinearitySpec":
        return NonlinearitySpec(tuple((c * a, e) for a, e in self.terms))

    def rescaled(self, kappa: float) -> PowerSum:
        """Power sum for ``s -> kappa**p f(|s|/kappa)`` (coefficients ``a_j kappa**(p - e_j)``)."""
        p = self.growth_exponent
        if kappa == 0.0:
            return PowerSum([self.growth_coefficient], [p])
        return PowerSum(self.coefficients * kappa ** (p - self.exponents), self.exponents)

    def rescaled_log_derivative(self, kappa: float) -> PowerSum:
        """``kappa * d/dkappa`` of :meth:`rescaled`, i.e. the derivative in ``log kappa``."""
        p = self.growth_exponent
        return PowerSum(self.coefficients * (p - self.exponents) * kappa ** (p - self.exponents), self.exponents)

    def __str__(self):
        out = []
        for k, (c, e) in enumerate(self.terms):
            sign = "-" if c < 0 else ("+" if k else "")
            out.append(f"{sign} {abs(c):g}*s^{e:g}".strip())
        return " ".join(out)


def _normalized_terms(f: PowerSum, s, weights=None):
    """Terms ``w_j a_j s**e_j`` divided by ``s**m``, with ``m`` the smallest
    exponent for ``s < 1`` and the largest for ``s >= 1``; every power is then
    at most 1, so signs and ratios are available without overflow."""
    s = np.asarray(s, dtype=float)
    m = np.where(s < 1.0, f.exponents.min(), f.exponents.max())
    w = f.coefficients if weights is None else f.coefficients * weights
    return w[:, None] * s[None, :] ** (f.exponents[:, None] - m[None, :])


def _check_nonnegative(f: PowerSum) -> None:
    terms = _normalized_terms(f, _GRID)
    vals, scale = terms.sum(axis=0), np.abs(terms).sum(axis=0)
    neg = np.flatnonzero(vals < -1e-12 * scale)
    if neg.size:
        raise SpecError(f"f is negative at s = {_GRID[neg[0]]:.3g}")
    # dips between grid nodes sit at interior minima of f/s; locate them where
    # the derivative of f/s changes sign and bisect
    sign_slope = lambda x: _normalized_terms(f, np.atleast_1d(x), f.exponents - 1.0).sum(axis=0)
    d = sign_slope(_GRID)
    for k in np.flatnonzero((d[:-1] < 0) & (d[1:] > 0)):
        lo, hi = _GRID[k], _GRID[k + 1]
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if sign_slope(mid)[0] < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        t = _normalized_terms(f, np.array([0.5 * (lo + hi)]))
        if t.sum() < -1e-12 * np.abs(t).sum():
            raise SpecError(f"f is negative near s = {0.5 * (lo + hi):.6g}")


def parse_nonlinearity(text: str) -> NonlinearitySpec:
    """Parse ``"f = 1*s^1 - 1*s^2 + 1*s^3"``; whitespace is ignored, ``f =`` optional."""
    body = text.strip()
    if "=" in body:
        lhs, _, body = body.partition("=")
        if lhs.strip() not in ("f", "f(s)"):
            raise SpecError(f"unexpected left-hand side {lhs.strip()!r}")
    body = re.sub(r"\s+", "", body)
    if not body:
        raise SpecError("empty nonlinearity")
    terms = {}
    pos = 0
    while pos < len(body):
        m = _TERM.match(body, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise SpecError(f"cannot parse term at {body[pos:]!r}")
        if pos > 0 and not m.group(1):
            raise SpecError(f"missing sign before {body[pos:]!r}")
        if m.group(3) is None:
            raise SpecError("constant terms are not allowed (f(0) must vanish)")
        coef = float(m.group(2)) if m.group(2) else 1.0
        if m.group(1) == "-":
            coef = -coef
        exp = float(m.group(4)) if m.group(4) else 1.0
        terms[exp] = terms.get(exp, 0.0) + coef
        pos = m.end()
    return NonlinearitySpec(tuple((c, e) for e, c in sorted(terms.items())))


def eval(f: PowerSum, s):  # noqa: A001 - mirrors the method name
    return f.eval(s)


def eval_prime(f: PowerSum, s):
    return f.eval_prime(s)


def f_tilde(f: NonlinearitySpec, lam: float, s):
    """Rescaled nonlinearity ``lam**(p/(p-1)) f(lam**(-1/(p-1)) |s|)``; ``b |s|**p`` at ``lam = 0``.

    Evaluated term by term in logarithms, so huge inner arguments never form.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    p, b = f.growth_exponent, f.growth_coefficient
    if p <= 1:
        raise ValueError("rescaling needs superlinear growth (p > 1)")
    a = np.abs(np.asarray(s, dtype=float))
    if lam == 0.0:
        out = b * a**p
    else:
        loglam = math.log(lam)
        with np.errstate(divide="ignore"):
            loga = np.log(a)
        out = np.zeros_like(a)
        for c, e in zip(f.coefficients, f.exponents):
            out = out + c * np.exp((p - e) / (p - 1.0) * loglam + e * loga)
    if not np.all(np.abs(out) <= OVERFLOW_LIMIT):
        raise EvaluationError("rescaled nonlinearity overflows", value=float(a.max()))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------- analysis

class Direction(str, Enum):
    SUBCRITICAL = "Subcritical"
    SUPERCRITICAL = "Supercritical"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class HypothesisReport:
    growth_exponent: float
    growth_coefficient: float
    subcritical_for_N: dict
    slope_at_zero: float
    remainder_exponent: float | None
    remainder_lower: float | None
    remainder_upper: float | None
    linear_bound: float
    linear_bound_argmin: float
    superlinear_subcritical: bool
    bifurcates_from_zero: bool
    has_linear_bound: bool
    dimension: int

    @property
    def predicted_direction(self) -> Direction:
        if not self.bifurcates_from_zero:
            return Direction.INCONCLUSIVE
        if self.remainder_lower > 0:
            return Direction.SUBCRITICAL
        if self.remainder_upper < 0:
            return Direction.SUPERCRITICAL
        return Direction.INCONCLUSIVE

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["subcritical_for_N"] = {str(k): v for k, v in self.subcritical_for_N.items()}
        d["predicted_direction"] = self.predicted_direction.value
        return d


def is_subcritical(p: float, N: int) -> bool:
    return N == 2 or p < N / (N - 2)


def _golden_min(fun, lo, hi, rtol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > rtol * max(abs(hi), abs(lo), 1e-300):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - g * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + g * (hi - lo)
            f2 = fun(x2)
    return 0.5 * (lo + hi)


def linear_lower_bound(f: PowerSum) -> tuple[float, float]:
    """``(inf_{s>0} f(s)/s, argmin)``; the argmin is 0 when the infimum is the limit at zero."""
    ratio = lambda s: sum(c * s ** (e - 1.0) for c, e in zip(f.coefficients, f.exponents))
    with np.errstate(over="ignore", invalid="ignore"):
        vals = ratio(_GRID)
    k = int(np.argmin(vals))
    slope0 = float(sum(c for c, e in zip(f.coefficients, f.exponents) if e == 1.0))
    if k == 0:
        return slope0, 0.0
    lo, hi = _GRID[k - 1], _GRID[min(k + 1, len(_GRID) - 1)]
    s = _golden_min(ratio, lo, hi, 1e-10)
    return float(ratio(s)), float(s)


def analyze(f: NonlinearitySpec, N: int = 2) -> HypothesisReport:
    if N < 2:
        raise ValueError("dimension must be >= 2")
    p, b = f.growth_exponent, f.growth_coefficient
    slope = f.slope_at_zero
    higher = [(c, e) for c, e in f.terms if e > 1.0]
    nu, r0 = (higher[0][1], higher[0][0]) if higher else (None, None)
    K, argmin = linear_lower_bound(f)
    K = max(K, 0.0)
    sub = {n: (p > 1 and is_subcritical(p, n)) for n in sorted(set(range(2, 8)) | {N})}
    return HypothesisReport(
        growth_exponent=p,
        growth_coefficient=b,
        subcritical_for_N=sub,
        slope_at_zero=slope,
        remainder_exponent=nu,
        remainder_lower=r0,
        remainder_upper=r0,
        linear_bound=K,
        linear_bound_argmin=argmin,
        superlinear_subcritical=sub[N],
        bifurcates_from_zero=slope > 0 and nu is not None,
        has_linear_bound=K > 0,
        dimension=N,
    )


def growth_constant(f: PowerSum, p: float | None = None) -> float:
    """Smallest C with ``f(s) <= C (1 + s**p)`` for all ``s >= 0``.

    The ratio is scanned on a log grid and its largest sample refined by
    golden-section search.
    """
    if p is None:
        p = float(f.exponents.max())

    def ratio(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        big = s >= 1.0
        out = np.empty_like(s)
        with np.errstate(over="ignore", divide="ignore"):
            out[~big] = f.eval(s[~big]) / (1.0 + s[~big] ** p)
            sb = s[big]
            out[big] = sum(c * sb ** (e - p) for c, e in zip(f.coefficients, f.exponents)) / (sb**-p + 1.0)
        return out

    grid = np.concatenate([[0.0], _GRID])
    vals = ratio(grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    if 0 < k < len(grid) - 1:
        s = _golden_min(lambda x: -float(ratio(x)[0]), grid[k - 1], grid[k + 1], 1e-12)
        best = max(best, float(ratio(s)[0]))
    if not math.isfinite(best):
        raise EvaluationError("f is not bounded by a multiple of 1 + s^p", value=None)
    return best


# --------------------------------------------------------------------- bootstrap

@dataclass(frozen=True)
class BootstrapTrace:
    N: int
    p: float
    q_seq: tuple
    r_seq: tuple
    s_seq: tuple
    terminated: bool
    steps: int

    def summary(self) -> str:
        q = " -> ".join(f"{x:.6g}" for x in self.q_seq)
        return f"q: {q}, {'terminated' if self.terminated else 'not terminated'}"


def bootstrap_exponents(N: int, p: float, max_steps: int = 100) -> BootstrapTrace:
    """Iterate the trace-integrability bootstrap until ``q_i >= N - 1``.

    ``r_0 = 2(N-1)/(N-2)``, ``q_i = r_i / p``,
    ``r_i = (N-1) q_{i-1} / (N-1-q_{i-1})``, ``s_i = N q_{i-1} / (N-1)``.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if N == 2:
        return BootstrapTrace(N, p, (), (), (), True, 0)
    if N < 2:
        raise ValueError("N must be >= 2")
    r = 2.0 * (N - 1) / (N - 2)
    q = r / p
    q_seq, r_seq, s_seq = [q], [r], []
    steps = 0
    while q < N - 1 and steps < max_steps:
        s_seq.append(N * q / (N - 1))
        r = (N - 1) * q / (N - 1 - q)
        q = r / p
        r_seq.append(r)
        q_seq.append(q)
        steps += 1
    return BootstrapTrace(N, p, tuple(q_seq), tuple(r_seq), tuple(s_seq), q >= N - 1, steps)
