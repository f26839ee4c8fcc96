"""Command-line front end: solve / converge / riemann-exact / diagnose.

Flags mirror a flat ``key=value`` config file (``--config``); explicit flags
override file entries.  Exit codes: 0 success, 2 configuration error,
3 solver abort (admissible-region violation or failed iteration).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .euler_core import PrimitiveState, to_conserved
from .harness import ConfigError, PROBLEMS, RunConfig, convergence_study, \
    emit_diagnostics_csv, emit_solution_csv, emit_table_csv, \
    resolve_output_path, run
from .irp_limiter import LIMITER_KINDS, RegionViolationError
from .riemann_exact import RiemannProblem, RiemannSolverError, VacuumError, \
    sample_primitives, solve_star
from .time_integration import MS3, PER_STAGE, PER_STEP, RK3

_SOLVER_KEYS = ("problem", "degree", "cells", "limiter", "integrator", "cfl",
                "tfinal", "gamma", "eps", "placement", "out", "left", "right",
                "x0", "domain")
_DEFAULTS = {"degree": "2", "cells": "100", "limiter": "irp",
             "integrator": "rk3", "gamma": "1.4", "eps": "1e-13",
             "placement": "per_stage"}


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as err:
        raise ConfigError(f"bad numeric triple {text!r}") from err


def _parse_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated values, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as err:
        raise ConfigError(f"bad numeric pair {text!r}") from err


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value file; blank lines and # comments ignored."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in _SOLVER_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = val.strip()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    return values


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--problem", choices=PROBLEMS)
    sub.add_argument("--degree", type=int)
    sub.add_argument("--cells", type=int)
    sub.add_argument("--limiter", choices=LIMITER_KINDS)
    sub.add_argument("--integrator", choices=(RK3, MS3))
    sub.add_argument("--cfl", type=float)
    sub.add_argument("--tfinal", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--eps", type=float)
    sub.add_argument("--placement", choices=(PER_STAGE, PER_STEP))
    sub.add_argument("--out")
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--left", help="rho,u,p of the left state (custom-riemann)")
    sub.add_argument("--right", help="rho,u,p of the right state (custom-riemann)")
    sub.add_argument("--x0", type=float, help="interface location (custom-riemann)")
    sub.add_argument("--domain", help="a,b mesh extent override")


def _build_config(args: argparse.Namespace) -> RunConfig:
    fromfile = read_config_file(args.config) if args.config else {}

    def pick(key: str) -> str | None:
        cli = getattr(args, key, None)
        if cli is not None:
            return str(cli)
        if key in fromfile:
            return fromfile[key]
        return _DEFAULTS.get(key)

    problem = pick("problem")
    if problem is None:
        raise ConfigError("no problem selected (flag --problem or config file)")
    left = pick("left")
    right = pick("right")
    domain = pick("domain")
    cfg = RunConfig(
        problem=problem,
        degree=int(pick("degree")),
        n_cells=int(pick("cells")),
        limiter=pick("limiter"),
        integrator=pick("integrator"),
        cfl_fraction=None if pick("cfl") is None else float(pick("cfl")),
        t_final=None if pick("tfinal") is None else float(pick("tfinal")),
        gamma=float(pick("gamma")),
        epsilon=float(pick("eps")),
        output_path=pick("out"),
        limiter_placement=pick("placement"),
        left=None if left is None else PrimitiveState(*_parse_triple(left)),
        right=None if right is None else PrimitiveState(*_parse_triple(right)),
        x0=0.0 if pick("x0") is None else float(pick("x0")),
        domain=None if domain is None else _parse_pair(domain))
    cfg.validate()
    return cfg


def _cmd_solve(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    out = run(cfg)
    path = cfg.output_path or f"{cfg.problem.replace('-', '_')}_solution.csv"
    path = emit_solution_csv(out, path)
    last = out.result.diagnostics[-1]
    print(f"wrote {path} (t={last.t:.6g}, steps={last.step}, "
          f"min_avg_entropy={out.result.min_avg_entropy:.6g})")
    return 0


def _cmd_diagnose(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    out = run(cfg)
    path = cfg.output_path or f"{cfg.problem.replace('-', '_')}_diagnostics.csv"
    path = emit_diagnostics_csv(out, path)
    print(f"wrote {path} ({len(out.result.diagnostics)} records)")
    return 0


def _cmd_converge(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    try:
        counts = [int(c) for c in args.cells_list.split(",")]
    except ValueError as err:
        raise ConfigError(f"bad cells list {args.cells_list!r}") from err
    rows = convergence_study(cfg, counts)
    path = cfg.output_path or f"{cfg.problem.replace('-', '_')}_convergence.csv"
    path = emit_table_csv(rows, path)
    print(f"wrote {path}")
    for r in rows:
        o1 = "-" if r.order_l1 is None else f"{r.order_l1:.2f}"
        print(f"  N={r.n_cells:5d}  Linf={r.error_linf:.3e}  "
              f"L1={r.error_l1:.3e}  order={o1}  {r.note}")
    return 0


def _cmd_riemann_exact(args: argparse.Namespace) -> int:
    left = PrimitiveState(*_parse_triple(args.left))
    right = PrimitiveState(*_parse_triple(args.right))
    a, b = _parse_pair(args.domain)
    if args.time <= 0.0:
        raise ConfigError("--time must be positive")
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    problem = RiemannProblem(left, right, args.gamma, args.x0)
    star = solve_star(problem)
    xs = np.linspace(a, b, args.samples)
    rho, u, p = sample_primitives(problem, star, (xs - args.x0) / args.time)
    E = np.asarray(to_conserved(PrimitiveState(rho, u, p), args.gamma).E)
    path = resolve_output_path(args.out or "riemann_exact.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,rho,u,p,E\n")
        for i in range(len(xs)):
            fh.write(",".join(f"{v:.12g}" for v in
                              (xs[i], rho[i], u[i], p[i], E[i])) + "\n")
    print(f"wrote {path} (p*={star.p_star:.6g}, u*={star.u_star:.6g})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irpdg",
        description="1D DG Euler solver with an invariant-region-preserving limiter")
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="run one configuration, emit solution CSV")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_conv = subs.add_parser("converge", help="mesh refinement study")
    _add_solver_flags(p_conv)
    p_conv.add_argument("--cells-list", required=True,
                        help="comma-separated cell counts, each double the last")
    p_conv.set_defaults(func=_cmd_converge)

    p_rx = subs.add_parser("riemann-exact", help="sample the exact Riemann solution")
    p_rx.add_argument("--left", required=True, help="rho,u,p")
    p_rx.add_argument("--right", required=True, help="rho,u,p")
    p_rx.add_argument("--gamma", type=float, default=1.4)
    p_rx.add_argument("--time", type=float, required=True)
    p_rx.add_argument("--domain", required=True, help="a,b")
    p_rx.add_argument("--x0", type=float, default=0.0)
    p_rx.add_argument("--samples", type=int, default=200)
    p_rx.add_argument("--out")
    p_rx.set_defaults(func=_cmd_riemann_exact)

    p_diag = subs.add_parser("diagnose", help="run and emit per-step diagnostics CSV")
    _add_solver_flags(p_diag)
    p_diag.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        # argparse exits 2 on usage errors, 0 on --help
        return int(err.code or 0)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except VacuumError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (RegionViolationError, RiemannSolverError) as err:
        detail = ""
        if isinstance(err, RegionViolationError):
            detail = f" (step {err.step}, cell {err.cell})"
        print(f"solver abort: {err}{detail}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
