"""Command-line front end.

Exit codes: 0 success, 1 configuration or IO error, 2 geometry validity
failure, 3 solver breakdown.  Diagnostics go to stderr; stdout carries data
only with ``--stdout``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

EXIT_OK, EXIT_CONFIG, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("geometry", "solve", "convergence", "regularity", "explain-config")
FORMATS = ("obj", "vtk", "csv", "json", "txt")

log = logging.getLogger("pipesurf")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pipesurf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "explain-config":
            continue
        p.add_argument("--config", metavar="PATH", help="YAML run configuration (defaults if omitted)")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
        p.add_argument("--format", choices=FORMATS, help="artifact format for this command")
        p.add_argument("--seed", type=int, metavar="U64", help="seed of the random cross-section")
        p.add_argument("--threads", type=int, metavar="N", help="cap on BLAS/OpenMP threads")
        p.add_argument("--stdout", action="store_true", help="write the main artifact to stdout")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _limit_threads(n):
    if n is None:
        return
    if n < 1:
        raise ValueError("--threads must be positive")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    if "numpy" in sys.modules:
        log.debug("numpy already loaded; --threads applies to child processes only")


def _emit(args, out_dir, name, data: bytes | str):
    from .geometry import write_bytes
    raw = data.encode() if isinstance(data, str) else data
    if args.stdout:
        sys.stdout.buffer.write(raw)
        sys.stdout.flush()
        return
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    write_bytes(path, raw)
    log.info("wrote %s", path)


def _say(text):
    print(text, file=sys.stderr)


def cmd_geometry(cfg, args, out_dir) -> int:
    from .geometry import export_mesh, validate_geometry
    pipe = cfg.pipe(args.seed)
    report = validate_geometry(pipe)
    _say(report.to_text())
    if not report.passed:
        return EXIT_INVALID
    fmt = args.format or cfg["output"]["mesh_format"]
    if fmt not in ("obj", "vtk"):
        raise ValueError("geometry writes obj or vtk")
    mesh = export_mesh(pipe, cfg["output"]["mesh_M"], cfg["output"]["mesh_N"], fmt)
    _emit(args, out_dir, f"mesh.{fmt}", mesh)
    if not args.stdout:
        _emit(args, out_dir, "validity.txt", report.to_text() + "\n")
    return EXIT_OK


def _source(cfg, pipe, case, grid):
    """Callable or array source term for the configured problem."""
    import numpy as np
    from .discrete import GridFunction
    from .expr import Expr
    from .fields import manufactured_rhs
    prob = cfg["problem"]
    if case is not None:
        return lambda t, w: manufactured_rhs(pipe, case, t, w)
    if prob["f_samples"]:
        from .errors import IoFailure
        try:
            with open(prob["f_samples"], encoding="utf-8") as fh:
                return GridFunction.from_csv(fh.read(), grid).values
        except OSError as exc:
            raise IoFailure(f"cannot read f samples: {exc}") from exc
    if prob["f"] is not None:
        f = Expr(str(prob["f"]))
        return lambda t, w: f(t, w) * np.ones_like(t)
    raise ValueError("problem needs a manufactured case, f or f_samples")


def cmd_solve(cfg, args, out_dir) -> int:
    from .discrete import Grid, norm_h1
    from .fields import build_coefficients
    from .geometry import export_mesh
    from .harness import exact_grid_function
    from .solver import assemble, solve
    pipe = cfg.pipe(args.seed)
    M, N = cfg.grid_size(pipe)
    grid = Grid.for_pipe(pipe, M, N)
    case = cfg.case(pipe)
    coeffs = build_coefficients(pipe, grid, str(cfg["problem"]["lambda"]))
    system = assemble(pipe, grid, coeffs, _source(cfg, pipe, case, grid), **cfg.scheme_options())
    u_h, stats = solve(system, **cfg.solver_options())
    _say(f"solver: method={stats.method} iterations={stats.iterations} "
         f"residual={stats.residual:.3e} seconds={stats.seconds:.2f} {stats.notes}".rstrip())
    if case is not None:
        E = norm_h1(u_h - exact_grid_function(grid, case))
        _say(f"E_NM = {E:.6e}  (M={M}, N={N}, case={case.name})")
    fmt = args.format
    if fmt in (None, "csv"):
        _emit(args, out_dir, "solution.csv", u_h.to_csv())
    if fmt in (None, "vtk"):
        _emit(args, out_dir, "solution.vtk", export_mesh(pipe, M, N, "vtk", field=u_h.values))
    if fmt not in (None, "csv", "vtk"):
        raise ValueError("solve writes csv or vtk")
    return EXIT_OK


def _write_reports(args, out_dir, reports, stem, formats):
    fmt = args.format
    if fmt is not None:
        if fmt not in ("csv", "json", "txt"):
            raise ValueError("reports are written as csv, json or txt")
        formats = [fmt]
    for fmt in formats:
        if fmt == "json":
            data = json.dumps([r.as_dict() for r in reports], indent=2, sort_keys=True, default=str) + "\n"
        elif fmt == "csv":
            data = "".join(f"# {r.case}\n" + r.to_csv() for r in reports)
        else:
            data = "\n".join(r.to_text() for r in reports)
        _emit(args, out_dir, f"{stem}.{fmt}", data)


def _report_status(reports) -> int:
    for r in reports:
        _say(r.to_text())
    return EXIT_OK if any(row.ok for r in reports for row in r.rows) else EXIT_SOLVER


def cmd_convergence(cfg, args, out_dir) -> int:
    from .harness import run_case
    pipe = cfg.pipe(args.seed)
    case = cfg.case(pipe)
    if case is None:
        raise ValueError("convergence needs a manufactured case")
    opts = {**cfg.scheme_options(), **cfg.solver_options()}
    report = run_case(pipe, case, cfg["grid"]["h_list"], **opts)
    report.meta["seed"] = args.seed
    _write_reports(args, out_dir, [report], "convergence", cfg["output"]["report_formats"])
    return _report_status([report])


def cmd_regularity(cfg, args, out_dir) -> int:
    from .harness import regularity_sweep
    opts = {**cfg.scheme_options(), **cfg.solver_options()}
    reports = regularity_sweep(cfg["grid"]["gamma_list"], cfg["grid"]["h_list"], **opts)
    _write_reports(args, out_dir, reports, "regularity", cfg["output"]["report_formats"])
    return _report_status(reports)


HANDLERS = {"geometry": cmd_geometry, "solve": cmd_solve, "convergence": cmd_convergence,
            "regularity": cmd_regularity}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "explain-config":
        from .config import TEMPLATE
        sys.stdout.write(TEMPLATE)
        return EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        _limit_threads(args.threads)
        from .config import RunConfig
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
    except (ValueError, KeyError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_CONFIG
    from .errors import DegenerateCurve, NonPositiveJacobian, SolverBreakdown
    out_dir = args.out or cfg["output"]["dir"]
    try:
        return HANDLERS[args.command](cfg, args, out_dir)
    except SolverBreakdown as exc:
        _say(f"solver breakdown: {exc}")
        return EXIT_SOLVER
    except (NonPositiveJacobian, DegenerateCurve) as exc:
        _say(f"invalid geometry: {exc}")
        return EXIT_INVALID
    except (ValueError, KeyError, OSError) as exc:
        _say(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
