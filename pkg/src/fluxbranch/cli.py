"""Command-line driver: ``fluxbranch --mode branch --mesh disk:4 --f "s - s^2 + s^3" --out run``.

Settings come from an INI-style config file (sections ``[run]``, ``[mesh]``,
``[nonlinearity]``, ``[continuation]``, ``[output]``) and/or flags; flags win.
Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures, in which case ``failure.json`` and any partial outputs are written.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import oracle_radial
from .assembly import Discretization
from .continuation import (
    ContinuationOptions,
    Diagram,
    multiplicity_scan,
    solve_limiting,
    tail_slope,
    trace_branch,
)
from .errors import (
    BranchError,
    ConfigError,
    FluxBranchError,
    HypothesisError,
    MeshError,
    OracleRangeError,
    ResourceError,
    SpecError,
)
from .mesh import Disk, parse_mesh_spec
from .nonlinearity import Direction, analyze, bootstrap_exponents, parse_nonlinearity
from .steklov import solve_steklov_first

MODES = ("steklov", "analyze", "branch", "limiting", "oracle-compare", "bootstrap")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

CSV_COLUMNS = ("arclength", "lambda", "sup_norm", "h1_norm", "rescaled", "newton_iters")
ORACLE_COLUMNS = ("sup_norm", "lambda_fem", "lambda_exact", "rel_dev")

# Required top-level fields of every JSON file, by ``kind``. Numbers are
# dimensionless (λ) or in solution units (norms).
SCHEMAS = {
    "steklov": {"mode": str, "mesh": str, "mu1": float, "residual_norm": float, "iterations": int,
                "mu1_exact": (float, type(None)), "relative_error": (float, type(None))},
    "report": {"nonlinearity": str, "dimension": int, "growth_exponent": float, "growth_coefficient": float,
               "subcritical_for_N": dict, "slope_at_zero": float, "remainder_exponent": (float, type(None)),
               "remainder_lower": (float, type(None)), "remainder_upper": (float, type(None)),
               "linear_bound": float, "linear_bound_argmin": float, "superlinear_subcritical": bool,
               "bifurcates_from_zero": bool, "has_linear_bound": bool, "predicted_direction": str,
               "predicted_shape": str, "notes": list},
    "branch": {"mode": str, "mesh": str, "nonlinearity": str, "mu1": float, "n_points": int,
               "lambda_range": list, "sup_norm_range": list, "folds": list,
               "bifurcation_from_zero": (dict, type(None)), "direction": str,
               "direction_consistent": (bool, type(None)), "nonexistence_bound": (float, type(None)),
               "all_positive": bool, "termination": (str, type(None)), "tail_slope": (float, type(None)),
               "multiplicity": list},
    "limiting": {"mode": str, "mesh": str, "b": float, "p": float, "sup_norm": float, "h1_norm": float,
                 "sup_norm_exact": (float, type(None))},
    "oracle-compare": {"mode": str, "mesh": str, "nonlinearity": str, "mu1_exact": float, "n_points": int,
                       "max_rel_dev": float},
    "bootstrap": {"mode": str, "N": int, "p": float, "q": list, "r": list, "s": list, "terminated": bool,
                  "steps": int, "trace": str},
    "failure": {"mode": str, "error": str, "message": str, "exit_code": int},
}


def validate_output(kind: str, obj: dict) -> None:
    """Raise ``ValueError`` if ``obj`` lacks a field of schema ``kind`` or has the wrong type."""
    for key, typ in SCHEMAS[kind].items():
        if key not in obj:
            raise ValueError(f"{kind}: missing field {key!r}")
        val = obj[key]
        ok_types = typ if isinstance(typ, tuple) else (typ,)
        if float in ok_types and isinstance(val, int) and not isinstance(val, bool):
            continue
        if isinstance(val, bool) and bool not in ok_types:
            raise ValueError(f"{kind}: field {key!r} has type bool")
        if not isinstance(val, ok_types):
            raise ValueError(f"{kind}: field {key!r} has type {type(val).__name__}")


@dataclass
class RunConfig:
    mode: str = "branch"
    mesh: str = "disk:4"
    radius: float = 1.0
    width: float = 1.0
    height: float = 1.0
    f: str | None = None
    dimension: int = 2
    p: float | None = None
    out: str = "out"
    tol: float = 1e-10
    continuation: ContinuationOptions = field(default_factory=ContinuationOptions)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if self.mode in ("analyze", "branch", "oracle-compare") and not self.f:
            raise ConfigError(f"mode {self.mode!r} needs a nonlinearity (--f)")
        if self.mode == "limiting" and not self.f:
            raise ConfigError("mode 'limiting' needs a nonlinearity (--f) to read b and p from")
        if self.mode == "bootstrap" and self.p is None and not self.f:
            raise ConfigError("mode 'bootstrap' needs --p or a nonlinearity")
        if self.mode == "bootstrap" and self.dimension < 3:
            raise ConfigError("bootstrap needs dimension N >= 3")
        if self.dimension < 2:
            raise ConfigError("dimension must be at least 2")
        c = self.continuation
        for name in ("ds0", "ds_min", "ds_max", "newton_tol", "norm_max", "switch_norm", "epsilon"):
            if not getattr(c, name) > 0:
                raise ConfigError(f"continuation option {name} must be positive")
        if c.lambda_min is not None and not c.lambda_min > 0:
            raise ConfigError("lambda_min must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        for name in ("radius", "width", "height"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


# config file keys, by section: key -> (attribute, parser)
_SECTIONS = {
    "run": {"mode": ("mode", str), "dimension": ("dimension", int), "n": ("dimension", int)},
    "mesh": {"spec": ("mesh", str), "radius": ("radius", float), "width": ("width", float),
             "height": ("height", float)},
    "nonlinearity": {"f": ("f", str), "p": ("p", float)},
    "output": {"dir": ("out", str)},
}
_CONT_TYPES = {fl.name: fl.type for fl in fields(ContinuationOptions)}


def _cont_value(key, raw):
    typ = _CONT_TYPES[key]
    if key == "lambda_min":
        return None if raw.lower() == "none" else float(raw)
    if "int" in str(typ):
        return int(raw)
    return float(raw)


def load_config(path) -> RunConfig:
    """Read a config file; unknown sections or keys raise :class:`ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SECTIONS and section != "continuation":
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            try:
                if section == "continuation":
                    if key == "tol":
                        cfg.tol = cfg.continuation.newton_tol = float(raw)
                    elif key in _CONT_TYPES:
                        setattr(cfg.continuation, key, _cont_value(key, raw))
                    else:
                        raise ConfigError(f"unknown key {key!r} in [continuation]")
                else:
                    if key not in _SECTIONS[section]:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    attr, conv = _SECTIONS[section][key]
                    setattr(cfg, attr, conv(raw))
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in [{section}]: {raw!r}") from exc
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluxbranch", description="Branches of positive solutions with nonlinear boundary flux.")
    ap.add_argument("--config", help="INI-style config file")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--mesh", help="disk:<level> | rect:<nx>x<ny> | file:<path>")
    ap.add_argument("--f", help='nonlinearity, e.g. "s - s^2 + s^3"')
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--tol", type=float, help="Newton and eigensolver tolerance")
    ap.add_argument("--dim", "--N", dest="dimension", type=int, help="space dimension N for analyze/bootstrap")
    ap.add_argument("--p", type=float, help="growth exponent for bootstrap")
    ap.add_argument("--lambda-min", dest="lambda_min", type=float, help="stop the branch below this λ")
    ap.add_argument("--norm-max", dest="norm_max", type=float, help="stop the branch above this sup-norm")
    return ap


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for name in ("mode", "mesh", "f", "out", "dimension", "p"):
        val = getattr(args, name)
        if val is not None:
            setattr(cfg, name, val)
    if args.tol is not None:
        cfg.tol = cfg.continuation.newton_tol = args.tol
    if args.lambda_min is not None:
        cfg.continuation.lambda_min = args.lambda_min
    if args.norm_max is not None:
        cfg.continuation.norm_max = args.norm_max
    cfg.validate()
    return cfg


# --------------------------------------------------------------------- writers

def _write_json(path: Path, kind: str, obj: dict) -> None:
    validate_output(kind, obj)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def write_field(path: Path, values) -> None:
    """One value per line, indexed by vertex."""
    path.write_text("".join(repr(float(v)) + "\n" for v in values), encoding="utf-8")


def write_diagram_csv(path: Path, diagram: Diagram) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for pt in diagram.points:
            w.writerow([repr(pt.arclength), repr(pt.lam), repr(pt.sup_norm), repr(pt.h1_norm),
                        int(pt.rescaled), pt.newton_iters])


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _report_dict(f, N):
    rep = analyze(f, N)
    d = rep.to_dict()
    d["nonlinearity"] = str(f)
    notes = []
    if not rep.superlinear_subcritical:
        notes.append(f"growth exponent {rep.growth_exponent!r} is not subcritical for N = {N}")
    if not rep.bifurcates_from_zero:
        notes.append("no branch from the trivial solution: needs f(0) = 0, f'(0) > 0")
    if not rep.has_linear_bound:
        notes.append("fails linear lower bound f(s) >= K*s with K > 0")
    d["notes"] = notes
    shape = {
        Direction.SUBCRITICAL: "subcritical: branch leaves the bifurcation point towards smaller lambda",
        Direction.SUPERCRITICAL: "supercritical: branch leaves towards larger lambda, then folds back",
        Direction.INCONCLUSIVE: "inconclusive",
    }
    d["predicted_shape"] = shape[rep.predicted_direction]
    for key in ("remainder_exponent", "remainder_lower", "remainder_upper"):
        d[key] = _finite_or_none(d[key])
    return d


def _mesh(cfg):
    try:
        return parse_mesh_spec(cfg.mesh, radius=cfg.radius, width=cfg.width, height=cfg.height)
    except (MeshError, ResourceError):
        raise
    except ValueError as exc:
        raise ConfigError(f"bad mesh spec {cfg.mesh!r}: {exc}") from exc


def _branch_summary(cfg, f, disc, steklov, diagram):
    s = diagram.summary()
    s["mode"] = cfg.mode
    s["mesh"] = disc.mesh.describe()
    s["nonlinearity"] = str(f)
    s["mu1"] = steklov.mu1
    s["termination"] = diagram.metadata.get("termination")
    s["nonexistence_bound"] = _finite_or_none(s["nonexistence_bound"])
    try:
        s["tail_slope"] = tail_slope(diagram) if len(diagram.points) >= 3 else None
    except (ValueError, np.linalg.LinAlgError):
        s["tail_slope"] = None
    lam_ref = diagram.metadata["lambda_ref"]
    s["multiplicity"] = [
        {"lambda": float(q), "count": multiplicity_scan(diagram, float(q))}
        for q in lam_ref * np.round(np.linspace(0.1, 1.6, 16), 10)
    ]
    s["lambda_ref"] = lam_ref
    if diagram.folds:
        s["fold_ratio_to_mu1"] = diagram.folds[0][1] / steklov.mu1
    return s


def _write_branch(out, cfg, f, disc, steklov, diagram):
    write_diagram_csv(out / "diagram.csv", diagram)
    _write_json(out / "summary.json", "branch", _branch_summary(cfg, f, disc, steklov, diagram))
    if diagram.points:
        write_field(out / "field_start.txt", diagram.points[0].solution)
        write_field(out / "field_end.txt", diagram.points[-1].solution)


# --------------------------------------------------------------------- modes

def _run_steklov(cfg, out):
    disc = Discretization(_mesh(cfg))
    pair = solve_steklov_first(disc.A, disc.B, tol=cfg.tol)
    exact = None
    tag = disc.mesh.domain_tag
    if isinstance(tag, Disk):
        try:
            exact = oracle_radial.disk_mu1(tag.radius)
        except OracleRangeError:
            exact = None
    obj = {"mode": cfg.mode, "mesh": disc.mesh.describe(), "mu1": pair.mu1, "residual_norm": pair.residual_norm,
           "iterations": pair.iterations, "mu1_exact": exact,
           "relative_error": None if exact is None else abs(pair.mu1 - exact) / exact}
    write_field(out / "field_phi1.txt", pair.phi1)
    _write_json(out / "summary.json", "steklov", obj)


def _run_analyze(cfg, out):
    f = parse_nonlinearity(cfg.f)
    _write_json(out / "report.json", "report", _report_dict(f, cfg.dimension))


def _trace(cfg, out, f):
    disc = Discretization(_mesh(cfg))
    steklov = solve_steklov_first(disc.A, disc.B)
    try:
        diagram = trace_branch(disc, f, steklov, cfg.continuation)
    except BranchError as exc:
        if exc.diagram is not None and exc.diagram.points:
            _write_branch(out, cfg, f, disc, steklov, exc.diagram)
        raise
    return disc, steklov, diagram


def _run_branch(cfg, out):
    f = parse_nonlinearity(cfg.f)
    _write_json(out / "report.json", "report", _report_dict(f, cfg.dimension))
    disc, steklov, diagram = _trace(cfg, out, f)
    _write_branch(out, cfg, f, disc, steklov, diagram)


def _run_limiting(cfg, out):
    f = parse_nonlinearity(cfg.f)
    b, p = f.growth_coefficient, f.growth_exponent
    if p <= 1:
        raise ConfigError("the limiting problem needs growth exponent p > 1")
    disc = Discretization(_mesh(cfg))
    w = solve_limiting(disc, b, p, tol=cfg.tol)
    tag = disc.mesh.domain_tag
    exact = oracle_radial.limiting_sup_norm(b, p, tag.radius) if isinstance(tag, Disk) else None
    write_field(out / "field_w0.txt", w)
    _write_json(out / "summary.json", "limiting",
                {"mode": cfg.mode, "mesh": disc.mesh.describe(), "b": b, "p": p,
                 "sup_norm": float(np.max(np.abs(w))), "h1_norm": disc.h1_norm(w), "sup_norm_exact": exact})


def _run_oracle_compare(cfg, out):
    f = parse_nonlinearity(cfg.f)
    mesh = _mesh(cfg)
    if not isinstance(mesh.domain_tag, Disk):
        raise ConfigError("oracle-compare needs a disk mesh")
    cfg_mesh_radius = mesh.domain_tag.radius
    disc, steklov, diagram = _trace(cfg, out, f)
    write_diagram_csv(out / "diagram.csv", diagram)
    t = diagram.sup_norms
    exact = oracle_radial.lambda_of_t(f, t, cfg_mesh_radius)
    rel = np.abs(diagram.lambdas - exact) / exact
    with open(out / "oracle_compare.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ORACLE_COLUMNS)
        for row in zip(t, diagram.lambdas, exact, rel):
            w.writerow([repr(float(x)) for x in row])
    _write_json(out / "summary.json", "oracle-compare",
                {"mode": cfg.mode, "mesh": disc.mesh.describe(), "nonlinearity": str(f),
                 "mu1_exact": oracle_radial.disk_mu1(cfg_mesh_radius), "n_points": len(t),
                 "max_rel_dev": float(rel.max())})


def _run_bootstrap(cfg, out):
    p = cfg.p if cfg.p is not None else parse_nonlinearity(cfg.f).growth_exponent
    trace = bootstrap_exponents(cfg.dimension, p)
    obj = {"mode": cfg.mode, "N": trace.N, "p": trace.p, "q": list(trace.q_seq), "r": list(trace.r_seq),
           "s": list(trace.s_seq), "terminated": trace.terminated, "steps": trace.steps, "trace": trace.summary()}
    _write_json(out / "summary.json", "bootstrap", obj)
    print(trace.summary())


_RUNNERS = {
    "steklov": _run_steklov,
    "analyze": _run_analyze,
    "branch": _run_branch,
    "limiting": _run_limiting,
    "oracle-compare": _run_oracle_compare,
    "bootstrap": _run_bootstrap,
}


def run(cfg: RunConfig) -> int:
    """Execute one run; returns the process exit status."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        cfg.validate()
        _RUNNERS[cfg.mode](cfg, out)
    except (ConfigError, SpecError, MeshError, ResourceError, HypothesisError) as exc:
        return _fail(out, cfg, exc, EXIT_CONFIG)
    except (FluxBranchError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(out, cfg, exc, EXIT_NUMERIC)
    return EXIT_OK


def _fail(out, cfg, exc, code):
    obj = {"mode": cfg.mode, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    _write_json(out / "failure.json", "failure", obj)
    print(f"fluxbranch: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"fluxbranch: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
