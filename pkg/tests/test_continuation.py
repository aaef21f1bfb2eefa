import math

import numpy as np
import pytest

from conftest import CORPUS, CORPUS_FROM_ZERO, CORPUS_POWERS
from fluxbranch.assembly import Discretization
from fluxbranch.continuation import (
    BranchPoint,
    ContinuationOptions,
    branch_from_guess,
    branch_from_trivial,
    classify_direction,
    continue_branch,
    detect_folds,
    multiplicity_scan,
    newton_solve,
    onset_coefficient,
    solve_limiting,
    tail_slope,
    trace_branch,
    verify_point,
)
from fluxbranch.errors import HypothesisError, NoConvergence
from fluxbranch.mesh import generate_rectangle_mesh
from fluxbranch.nonlinearity import Direction, analyze, parse_nonlinearity
from fluxbranch.oracle_radial import disk_mu1, interpolate_profile, lambda_of_t, limiting_sup_norm
from fluxbranch.steklov import solve_steklov_first

MU1 = disk_mu1(1.0)


# --------------------------------------------------------------------- Newton

def test_newton_trivial_root(disc2):
    f = parse_nonlinearity("s + s^2")
    u, info = newton_solve(disc2, np.zeros(disc2.n), 0.3, f, full_output=True)
    assert np.all(u == 0) and info.iterations == 0


@pytest.mark.parametrize("text,t", [("s + s^2", 0.5), ("s - s^2 + s^3", 1.5), ("s^3", 2.0), ("2*s + s^2", 3.0)])
def test_newton_from_radial_profile(disc4, text, t):
    f = parse_nonlinearity(text)
    u0 = interpolate_profile(disc4.mesh, t)
    u, info = newton_solve(disc4, u0, lambda_of_t(f, t), f, full_output=True)
    assert info.iterations <= 3
    assert np.max(np.abs(u - u0)) / t <= disc4.mesh.max_edge_length() ** 2


def test_newton_rejects_bad_tol(disc2):
    with pytest.raises(ValueError):
        newton_solve(disc2, np.zeros(disc2.n), 0.3, parse_nonlinearity("s + s^2"), tol=0.0)


def test_newton_above_bound_finds_no_positive_solution(disc2):
    f = parse_nonlinearity("s - s^2 + s^3")
    steklov = solve_steklov_first(disc2.A, disc2.B)
    lam = 1.2 * steklov.mu1 / analyze(f).linear_bound
    rng = np.random.default_rng(3)
    for _ in range(10):
        u0 = 10 ** rng.uniform(-2, 1) * (0.5 + rng.random(disc2.n))
        try:
            u = newton_solve(disc2, u0, lam, f)
        except NoConvergence:
            continue
        assert not (np.min(u) > 0 and np.max(u) > 1e-8)


# --------------------------------------------------------------------- kickoff

def test_kickoff_directions(disc4, steklov4):
    sub = branch_from_trivial(disc4, parse_nonlinearity("s + s^2"), steklov4)
    sup = branch_from_trivial(disc4, parse_nonlinearity("s - s^2 + s^3"), steklov4)
    assert sub.lam < steklov4.mu1 < sup.lam
    for pt in (sub, sup):
        assert pt.sup_norm == pytest.approx(1e-3, rel=1e-9)
        assert np.max(np.abs(pt.u / pt.sup_norm - steklov4.phi1)) <= 0.05


def test_kickoff_needs_slope(disc2):
    with pytest.raises(HypothesisError):
        branch_from_trivial(disc2, parse_nonlinearity("s^2"))
    with pytest.raises(ValueError):
        branch_from_trivial(disc2, parse_nonlinearity("s + s^2"), eps=0.5)


@pytest.mark.parametrize("text", CORPUS_FROM_ZERO)
def test_kickoff_accuracy_matches_onset_constant(branch, disc4, steklov4, text):
    f = parse_nonlinearity(text)
    d = branch(text)
    rep = analyze(f)
    p0 = d.points[0]
    C = abs(steklov4.mu1 / f.slope_at_zero - p0.lam) / p0.sup_norm ** (rep.remainder_exponent - 1)
    _, analytic = onset_coefficient(d, f, steklov4, disc4)
    assert 0.5 <= C / abs(analytic) <= 2.0


def test_branch_from_guess_on_rectangle():
    disc = Discretization(generate_rectangle_mesh(1.0, 1.0, 8, 8))
    f = parse_nonlinearity("s^2")
    pt = branch_from_guess(disc, f, t=1.0)
    assert pt.positive
    assert verify_point(disc, f, pt) <= 1.0


# --------------------------------------------------------------------- branch geometry

@pytest.mark.parametrize("text", CORPUS)
def test_branch_invariants(branch, disc4, text):
    f = parse_nonlinearity(text)
    d = branch(text)
    assert all(p.positive for p in d.points)
    assert np.all(np.diff(d.arclengths) > 0)
    assert max(verify_point(disc4, f, p) for p in d.points) <= 1.0
    K = analyze(f).linear_bound
    if K > 0:
        assert d.max_lambda() <= d.nonexistence_bound * 1.02
    assert d.metadata["termination"] in ("lambda_min", "norm_max")


@pytest.mark.parametrize("text", CORPUS)
def test_tail(branch, text):
    f = parse_nonlinearity(text)
    d = branch(text)
    lam, sup = d.lambdas, d.sup_norms
    last = lam <= lam[-1] * 10
    run = np.flatnonzero(last)
    assert np.all(np.diff(sup[run]) > 0)
    assert np.all(np.diff(lam[run]) < 0)
    assert tail_slope(d) == pytest.approx(-1 / (f.growth_exponent - 1), rel=0.05)


@pytest.mark.parametrize("text", CORPUS_POWERS)
def test_pure_power_law(branch, text):
    f = parse_nonlinearity(text)
    d = branch(text)
    p, b = f.growth_exponent, f.growth_coefficient
    invariant = d.lambdas * d.sup_norms ** (p - 1) * b / MU1
    np.testing.assert_allclose(invariant, 1.0, atol=0.02)
    assert detect_folds(d) == []


def test_cubic_fold_and_multiplicity(branch):
    d = branch("s - s^2 + s^3")
    assert len(d.folds) == 1
    lam_bar = d.folds[0][1]
    assert lam_bar / MU1 == pytest.approx(4 / 3, rel=0.02)
    assert multiplicity_scan(d, 1.15 * MU1) == 2
    assert multiplicity_scan(d, 0.5 * MU1) == 1
    assert multiplicity_scan(d, 1.5 * MU1) == 0
    with pytest.raises(ValueError):
        multiplicity_scan(d, 0.0)


@pytest.mark.parametrize("text", ["s + s^2", "s + s^3", "2*s + s^2"])
def test_no_folds_for_monotone_branches(branch, text):
    assert branch(text).folds == []


@pytest.mark.parametrize("text,expected", [
    ("s + s^2", Direction.SUBCRITICAL),
    ("s - s^2 + s^3", Direction.SUPERCRITICAL),
    ("s + s^3", Direction.SUBCRITICAL),
    ("2*s + s^2", Direction.SUBCRITICAL),
])
def test_direction(branch, text, expected):
    f = parse_nonlinearity(text)
    d = branch(text)
    verdict = classify_direction(f, analyze(f), d)
    assert verdict.direction is expected
    assert verdict.numerical is expected and verdict.consistent
    assert d.direction is expected and d.direction_consistent


@pytest.mark.parametrize("text", CORPUS_FROM_ZERO)
def test_onset_coefficient(branch, disc4, steklov4, text):
    f = parse_nonlinearity(text)
    numeric, analytic = onset_coefficient(branch(text), f, steklov4, disc4)
    assert numeric == pytest.approx(analytic, rel=0.05)


def test_onset_coefficient_halves_when_f_doubles(branch, disc4, steklov4):
    f = parse_nonlinearity("s + s^2")
    d = branch("s + s^2")
    _, a1 = onset_coefficient(d, f, steklov4, disc4)
    _, a2 = onset_coefficient(d, f.scaled(2.0), steklov4, disc4)
    assert a2 == pytest.approx(a1 / 2, rel=1e-12)


@pytest.mark.parametrize("text", CORPUS_FROM_ZERO)
def test_normalized_solutions_approach_eigenfunction(branch, steklov4, text):
    d = branch(text)
    small = sorted(d.points, key=lambda p: p.sup_norm)[:3]
    dev = [np.max(np.abs(p.u / p.sup_norm - steklov4.phi1)) for p in small]
    assert max(dev) <= 0.05
    assert dev[0] < dev[1] < dev[2]


# --------------------------------------------------------------------- rescaled regime

@pytest.mark.parametrize("text", ["s - s^2 + s^3", "2*s + s^2", "s + s^2"])
def test_switch_round_trip(branch, text):
    d = branch(text)
    assert d.metadata["switch_index"] is not None
    assert d.metadata["switch_roundtrip_error"] <= 1e-10
    assert all(p.rescaled for p in d.points[d.metadata["switch_index"]:])


@pytest.mark.parametrize("text", ["s - s^2 + s^3", "2*s + s^2"])
def test_rescaled_norm_bounded(branch, text):
    d = branch(text)
    w = [np.max(p.scaled_solution) for p in d.points if p.rescaled]
    assert max(w) < 10 * limiting_sup_norm(1.0, parse_nonlinearity(text).growth_exponent)


def test_limiting_problem(disc4):
    w1 = solve_limiting(disc4, 1.0, 2.0)
    w2 = solve_limiting(disc4, 2.0, 2.0)
    assert np.max(w1) == pytest.approx(MU1, rel=0.02)
    np.testing.assert_allclose(w2, w1 / 2, rtol=1e-9)
    assert np.max(solve_limiting(disc4, 1.0, 3.0)) == pytest.approx(math.sqrt(MU1), rel=0.02)


def test_limiting_rejects_bad_input(disc2):
    with pytest.raises(ValueError):
        solve_limiting(disc2, 1.0, 1.0)
    with pytest.raises(ValueError):
        solve_limiting(disc2, 1.0, 2.0, w_init=np.full(disc2.n, 1e-3))


@pytest.mark.parametrize("text", ["s - s^2 + s^3", "2*s + s^2"])
def test_rescaled_endpoint_matches_limit(branch, disc4, text):
    f = parse_nonlinearity(text)
    end = branch(text).points[-1]
    w_end = end.lam ** (1 / (f.growth_exponent - 1)) * end.solution
    w0 = solve_limiting(disc4, f.growth_coefficient, f.growth_exponent)
    assert np.max(w_end) == pytest.approx(np.max(w0), rel=0.05)


# --------------------------------------------------------------------- options and small runs

def test_linear_f_rejected(disc2):
    with pytest.raises(HypothesisError):
        trace_branch(disc2, parse_nonlinearity("2*s"))


def test_max_steps_termination(disc2):
    d = trace_branch(disc2, parse_nonlinearity("s + s^2"), options=ContinuationOptions(max_steps=4))
    assert d.metadata["termination"] == "max_steps"
    assert len(d.points) == 5


def test_continue_backwards_from_guess(disc2):
    f = parse_nonlinearity("s^2")
    start = branch_from_guess(disc2, f, t=1.0)
    d = continue_branch(disc2, f, start, direction=-1, options=ContinuationOptions(max_steps=20))
    assert d.sup_norms[-1] < start.sup_norm
    assert all(p.positive for p in d.points)


def test_branch_point_views():
    u = np.array([1.0, 2.0])
    plain = BranchPoint(0.5, u, 2.0, 1.0, 0.0, 1, True)
    np.testing.assert_array_equal(plain.solution, u)
    scaled = BranchPoint(0.25, u, 4.0, 1.0, 0.0, 1, True, rescaled=True, kappa=0.5)
    np.testing.assert_array_equal(scaled.solution, 2 * u)
    np.testing.assert_array_equal(scaled.scaled_solution, u)



@pytest.mark.parametrize("text", CORPUS_POWERS)
def test_direction_without_bifurcation_point(branch, text):
    f = parse_nonlinearity(text)
    verdict = classify_direction(f, analyze(f), branch(text))
    assert verdict.direction is Direction.INCONCLUSIVE and verdict.consistent
