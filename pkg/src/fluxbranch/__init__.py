"""Positive solution branches of ``-Δu + u = 0`` with boundary flux ``∂u/∂η = λ f(u)``."""

from .assembly import Discretization, DiscreteOperator, OperatorKind
from .continuation import (
    BranchPoint,
    ContinuationOptions,
    Diagram,
    branch_from_guess,
    branch_from_trivial,
    classify_direction,
    continue_branch,
    detect_folds,
    onset_coefficient,
    multiplicity_scan,
    newton_solve,
    solve_limiting,
    tail_slope,
    trace_branch,
    verify_point,
)
from .mesh import MeshGeometry, generate_disk_mesh, generate_rectangle_mesh, load_mesh, save_mesh
from .nonlinearity import (
    Direction,
    HypothesisReport,
    NonlinearitySpec,
    analyze,
    bootstrap_exponents,
    linear_lower_bound,
    parse_nonlinearity,
)
from .steklov import SteklovPair, solve_steklov_first

__version__ = "0.1.0"
