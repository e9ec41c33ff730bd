"""Command line front end: ``beltrami <subcommand> [options]``.

Exit codes: 0 all asserted inequalities hold, 1 an inequality failed,
2 bad arguments or coefficient spec, 3 non-convergence under --strict.
"""

from __future__ import annotations

import argparse
import math
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coefficients as co
from .elliptic import MatrixField, NotPositiveDefinite, beltrami_from_matrix, conjugate_relation_check, ellipticity
from .estimators import area_distortion_curve, bieberbach_check, regularity_integrals
from .factorization import factorization_report, hyperbolic_split
from .field import ComplexField, Grid, read_field, write_field
from .neumann import decay_report, radial_series, run_terms, assemble
from .report import ReportTable, write_atomic
from .transforms import SpectralPlan

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3

CATALOG = [
    ("gp", "p", "rho(t) = log(e+1/t)^(-p/2) loglog(e+1/t)^(-1/2), K ~ (2/p) log(1/t) near 0"),
    ("alpha", "alpha, lambda", "rho(t) = log(5/t)^(-alpha) scaled by lambda along the dilatation"),
    ("stretch", "gamma, lambda", "constant dilatation lambda*gamma, rho(t) = t^((1+lambda gamma)/(1-lambda gamma))"),
    ("file", "file", "coefficient read from a CF1 file, zeroed outside the unit disk"),
]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    spec: dict = field(default_factory=dict)
    grid_n: int = 256
    grid_L: float = 4.0
    n_terms: int = 64
    p: float | None = None
    beta: float | None = None
    M: float | None = None
    out: Path = Path("beltrami-out")
    seed: int = 0
    plot: bool = False
    strict: bool = False
    strict_sharpness: bool = False
    method: str | None = None
    extra: dict = field(default_factory=dict)

    def grid(self) -> Grid:
        return Grid(self.grid_n, self.grid_L)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beltrami", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("coefficient")
    g.add_argument("--spec", type=Path, help="coefficient spec file (key = value lines)")
    g.add_argument("--family", choices=co.FAMILIES)
    g.add_argument("--p", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--lambda-re", dest="lambda_re", type=float)
    g.add_argument("--lambda-im", dest="lambda_im", type=float)
    g.add_argument("--file", help="CF1 coefficient for --family file")
    r = common.add_argument_group("run")
    r.add_argument("--n", type=int, help="grid points per side (power of two, 64..4096)")
    r.add_argument("--L", type=float, help="half width of the periodic box")
    r.add_argument("--terms", type=int, default=64)
    r.add_argument("--beta", type=float)
    r.add_argument("--M", type=float)
    r.add_argument("--out", type=Path, default=Path("beltrami-out"))
    r.add_argument("--plot", action="store_true", help="also write SVG plots")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--strict", action="store_true", help="exit 3 when the series stalls")
    r.add_argument("--strict-sharpness", dest="strict_sharpness", action="store_true",
                   help="at beta >= p require the growth that shows the exponent is sharp")

    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.add_parser("solve", parents=[common], help="principal solution by Neumann series")
    d = sub.add_parser("decay", parents=[common], help="term norms and decay envelope")
    d.add_argument("--method", choices=("grid", "radial"))
    sub.add_parser("area", parents=[common], help="area distortion of disks")
    sub.add_parser("regularity", parents=[common], help="regularity integrals over a radius sweep")
    sub.add_parser("factorize", parents=[common], help="hyperbolic split identities")
    e = sub.add_parser("elliptic-check", parents=[common], help="conjugate relation for a matrix field")
    for name in ("a11", "a12", "a22"):
        e.add_argument(f"--{name}", type=Path, required=True, help=f"CF1 file, real part is {name}")
    e.add_argument("--f", type=Path, required=True, help="CF1 file holding f = u + iv")
    sub.add_parser("examples", help="list the built-in coefficient families")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    spec: dict = {}
    if getattr(args, "spec", None):
        try:
            text = Path(args.spec).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read spec: {exc}") from None
        spec = co.parse_coefficient_spec(text)
    for key in ("family", "p", "alpha", "gamma", "lambda_re", "lambda_im", "file"):
        val = getattr(args, key, None)
        if val is not None:
            spec[key] = val
    n = args.n if args.n is not None else int(spec.pop("grid_n", 256))
    L = args.L if args.L is not None else float(spec.pop("grid_L", 4.0))
    spec.pop("grid_n", None)
    spec.pop("grid_L", None)
    if n < 64 or n > 4096 or n & (n - 1):
        raise ConfigError(f"--n must be a power of two in [64, 4096], got {n}")
    if L < 2:
        raise ConfigError("--L must be >= 2")
    if args.terms < 1:
        raise ConfigError("--terms must be >= 1")
    if args.beta is not None and args.beta <= 0:
        raise ConfigError("--beta must be positive")
    if args.p is not None and args.p <= 0:
        raise ConfigError("--p must be positive")
    if args.M is not None and args.M <= 1:
        raise ConfigError("--M must exceed 1")
    if args.command not in ("elliptic-check",):
        if "family" not in spec:
            raise ConfigError("a coefficient family is required (--family or --spec)")
        co.validate_spec(spec)
    return RunConfig(
        command=args.command, spec=spec, grid_n=n, grid_L=L, n_terms=args.terms,
        p=args.p if args.p is not None else spec.get("p"), beta=args.beta, M=args.M,
        out=args.out, seed=args.seed, plot=args.plot, strict=args.strict,
        strict_sharpness=args.strict_sharpness, method=getattr(args, "method", None),
        extra={k: getattr(args, k) for k in ("a11", "a12", "a22", "f") if hasattr(args, k)},
    )


# --- output ----------------------------------------------------------------------

class RunDir:
    """Collects outputs in a temporary directory; files appear in ``out`` only on commit."""

    def __init__(self, out: Path):
        self.out = Path(out)
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".beltrami-", dir=self.out.parent))

    def path(self, name: str) -> Path:
        return self.tmp / name

    def table(self, name: str, table: ReportTable, plot: tuple | None = None) -> None:
        write_atomic(self.path(name + ".csv"), table.to_csv())
        if plot is not None:
            x, ys, logx, logy = plot
            write_atomic(self.path(name + ".svg"), table.to_svg(x, ys, logx, logy))

    def commit(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for f in sorted(self.tmp.iterdir()):
            f.replace(self.out / f.name)
        self.discard()

    def discard(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


def report_failures(table: ReportTable, enforced: list[str] | None = None) -> bool:
    """Print failing rows and checks; True when everything enforced passed."""
    ok = True
    for i in table.failing_rows():
        print(f"FAIL {table.title}: row {i}: {table.rows[i]}", file=sys.stderr)
        ok = False
    for key in table.failing_checks():
        if enforced is None or key in enforced:
            print(f"FAIL {table.title}: check {key}", file=sys.stderr)
            ok = False
    return ok


def _profile(cfg: RunConfig) -> co.RadialProfile:
    prof = co.profile_for_spec(cfg.spec)
    if prof is None:
        raise ConfigError("this command needs a radial family (gp, alpha or stretch)")
    return prof


def _family_p(cfg: RunConfig) -> float:
    if cfg.p is None:
        raise ConfigError("--p is required")
    return cfg.p


# --- commands ------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, rd: RunDir) -> int:
    grid = cfg.grid()
    plan = SpectralPlan(grid)
    mu = co.coefficient_for_spec(cfg.spec, grid)
    run = run_terms(mu, plan, cfg.n_terms)
    sol = assemble(run, plan)
    write_field(rd.path("displacement.cf1"), sol.displacement)
    write_field(rd.path("fz.cf1"), sol.fz)
    write_field(rd.path("fzbar.cf1"), sol.fzbar)
    write_field(rd.path("jacobian.cf1"), ComplexField(grid, sol.jacobian))
    table = ReportTable("solve", ["terms", "residual", "converged", "last_norm", "closed_form_error"])
    err = math.nan
    prof = co.profile_for_spec(cfg.spec)
    if prof is not None:
        ref = prof.normalized()
        ring = grid.annulus(0.1, 0.9).bits
        r = grid.r[ring]
        exact = grid.z[ring] / r * ref.rho(r)
        err = float(np.linalg.norm(sol.values()[ring] - exact) / np.linalg.norm(exact))
    table.add([sol.terms, sol.residual() if np.any(sol.fzbar.samples) else 0.0,
               float(sol.converged), run.norms[-1], err])
    bieb = bieberbach_check(sol)
    rd.table("summary", table)
    rd.table("area_theorem", bieb)
    ok = report_failures(bieb)
    if cfg.strict and not sol.converged:
        print("series did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK if ok else EXIT_FAIL


def cmd_decay(cfg: RunConfig, rd: RunDir) -> int:
    beta = cfg.beta if cfg.beta is not None else 1.0
    prof = co.profile_for_spec(cfg.spec)
    method = cfg.method or ("radial" if prof is not None else "grid")
    if method == "radial":
        if prof is None:
            raise ConfigError("--method radial needs a radial family")
        source = radial_series(prof, cfg.n_terms)
        converged = True
    else:
        grid = cfg.grid()
        plan = SpectralPlan(grid)
        source = run_terms(co.coefficient_for_spec(cfg.spec, grid), plan, cfg.n_terms)
        converged = source.converged
    table = decay_report(source, beta, cfg.p)
    table.footer["method"] = method
    rd.table("decay", table, ("n", ["norm", "envelope"], False, True) if cfg.plot else None)
    ok = report_failures(table)
    if cfg.strict and not converged:
        return EXIT_NONCONVERGED
    return EXIT_OK if ok else EXIT_FAIL


def _sharpness_enforced(cfg: RunConfig, beta: float, p: float) -> list[str]:
    if beta < p:
        return ["bounded", "converged"]
    return ["growth"] if cfg.strict_sharpness else []


def cmd_area(cfg: RunConfig, rd: RunDir) -> int:
    prof = _profile(cfg)
    p = _family_p(cfg)
    beta = cfg.beta if cfg.beta is not None else p / 2
    radii = np.geomspace(1e-12, 0.999, 60)
    table = area_distortion_curve(prof, radii, beta, p)
    rd.table("area", table, ("r", ["image_measure", "weighted"], True, True) if cfg.plot else None)
    return EXIT_OK if report_failures(table, _sharpness_enforced(cfg, beta, p)) else EXIT_FAIL


def cmd_regularity(cfg: RunConfig, rd: RunDir) -> int:
    prof = _profile(cfg)
    p = _family_p(cfg)
    beta = cfg.beta if cfg.beta is not None else p / 2
    table = regularity_integrals(prof, beta, p=p)
    rd.table("regularity", table, ("eps", ["energy", "jacobian"], True, True) if cfg.plot else None)
    return EXIT_OK if report_failures(table, _sharpness_enforced(cfg, beta, p)) else EXIT_FAIL


def cmd_factorize(cfg: RunConfig, rd: RunDir) -> int:
    p = _family_p(cfg)
    M = cfg.M if cfg.M is not None else 3.0 / p
    if M <= 1:
        raise ConfigError("M = 3/p must exceed 1; pass --M")
    grid = cfg.grid()
    split = hyperbolic_split(co.coefficient_for_spec(cfg.spec, grid), M)
    table = factorization_report(split, p)
    rd.table("factorize", table)
    return EXIT_OK if report_failures(table) else EXIT_FAIL


def cmd_elliptic_check(cfg: RunConfig, rd: RunDir) -> int:
    try:
        parts = [read_field(cfg.extra[k]) for k in ("a11", "a12", "a22", "f")]
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read input: {exc}") from None
    grid = parts[0].grid
    if any(f.grid != grid for f in parts):
        raise ConfigError("input files are on different grids")
    try:
        A = MatrixField(*(f.samples.real for f in parts[:3]))
    except NotPositiveDefinite as exc:
        raise ConfigError(str(exc)) from None
    f = parts[3].samples
    table = conjugate_relation_check(f.real, f.imag, A, grid)
    mu, nu = beltrami_from_matrix(A)
    K = ellipticity(A)
    table.footer.update({"max_ellipticity": float(K.max()), "max_mu_plus_nu": float((np.abs(mu) + np.abs(nu)).max())})
    rd.table("elliptic", table)
    return EXIT_OK if report_failures(table) else EXIT_FAIL


def cmd_examples() -> int:
    for name, params, desc in CATALOG:
        print(f"{name:8s} {params:14s} {desc}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "decay": cmd_decay,
    "area": cmd_area,
    "regularity": cmd_regularity,
    "factorize": cmd_factorize,
    "elliptic-check": cmd_elliptic_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "examples":
        return cmd_examples()
    try:
        cfg = make_config(args)
    except (ConfigError, co.SpecError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"beltrami: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rd = RunDir(cfg.out)
    try:
        code = COMMANDS[cfg.command](cfg, rd)
    except (ConfigError, co.SpecError) as exc:
        rd.discard()
        print(f"beltrami: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BaseException:
        rd.discard()
        raise
    rd.commit()
    return code


if __name__ == "__main__":
    sys.exit(main())
