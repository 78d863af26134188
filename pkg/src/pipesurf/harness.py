"""Manufactured-solution convergence studies and the regularity sweep."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discrete import Grid, GridFunction, norm_h1
from .errors import DomainError, InvalidParams, PipeSurfError
from .fields import ManufacturedCase, build_coefficients, manufactured_case, manufactured_rhs
from .geometry import PipeGeometry, catalog_centerline, catalog_cross_section
from .solver import assemble, solve

log = logging.getLogger(__name__)

H_MAPPING = "M = round(2*pi/h), N = round(|I_omega|/h); h column is max(h_theta, h_omega)"
SCHEME_KEYS = ("variant", "sh_denominator", "near_boundary", "rhs_ghost")
SOLVER_KEYS = ("method", "tol", "restart", "maxiter", "precond")


def rate(E1, h1, E2, h2) -> float:
    """Observed order ``log(E1/E2) / log(h1/h2)``."""
    vals = np.array([E1, h1, E2, h2], dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise DomainError("rate needs positive finite errors and mesh sizes")
    if h1 == h2:
        raise DomainError("rate needs two distinct mesh sizes")
    return math.log(E1 / E2) / math.log(h1 / h2)


def grid_sizes(pipe: PipeGeometry, h: float) -> tuple[int, int]:
    """``(M, N)`` for a nominal mesh size ``h``."""
    if not h > 0:
        raise InvalidParams("h must be positive")
    lo, hi = pipe.omega_range
    M = int(round(2 * np.pi / h))
    N = int(round((hi - lo) / h))
    if min(M, N) < 8:
        raise InvalidParams(f"h = {h} gives M={M}, N={N}; both must be >= 8")
    return M, N


@dataclass
class ReportRow:
    h_nominal: float
    M: int
    N: int
    h: float
    E: float | None = None
    rate: float | None = None
    stats: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.E is not None


@dataclass
class ConvergenceReport:
    """Errors ``E = ||u_h - u||_{h,1}`` and observed rates over an h-list.

    A row's rate is taken against the closest preceding successful row.
    """

    case: str
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, row: ReportRow) -> None:
        prev = next((r for r in reversed(self.rows) if r.ok), None)
        if row.ok and prev is not None:
            row.rate = rate(prev.E, prev.h, row.E, row.h)
        self.rows.append(row)

    @property
    def errors(self):
        return [r.E for r in self.rows if r.ok]

    @property
    def rates(self):
        return [r.rate for r in self.rows if r.rate is not None]

    @property
    def final_rate(self):
        return self.rates[-1] if self.rates else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h_nominal", "M", "N", "h", "E", "rate", "method", "iterations",
                    "residual", "error"])
        for r in self.rows:
            st = r.stats
            w.writerow([repr(r.h_nominal), r.M, r.N, repr(r.h),
                        "" if r.E is None else repr(r.E), "" if r.rate is None else repr(r.rate),
                        st.get("method", ""), st.get("iterations", ""),
                        "" if "residual" not in st else f"{st['residual']:.3e}", r.error or ""])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"# case: {self.case}", f"# grid mapping: {self.meta.get('mapping', H_MAPPING)}"]
        lines += [f"# {k}: {v}" for k, v in self.meta.items() if k != "mapping"]
        lines.append(f"{'h':>10} {'M':>5} {'N':>5} {'E_NM':>10} {'Rate':>6}")
        for r in self.rows:
            hs = f"1/{1 / r.h_nominal:.4g}"
            if r.ok:
                rs = "-" if r.rate is None else f"{r.rate:.2f}"
                lines.append(f"{hs:>10} {r.M:>5} {r.N:>5} {r.E:>10.2e} {rs:>6}")
            else:
                lines.append(f"{hs:>10} {r.M:>5} {r.N:>5} {'failed':>10} {'-':>6}  {r.error}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        """Serializable form; wall-clock times are left out so files are reproducible."""
        rows = []
        for r in self.rows:
            d = dict(r.__dict__)
            d["stats"] = {k: v for k, v in r.stats.items() if k != "seconds"}
            rows.append(d)
        return {"case": self.case, "meta": self.meta, "rows": rows}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, default=str)


def _split_opts(opts):
    unknown = set(opts) - set(SCHEME_KEYS) - set(SOLVER_KEYS)
    if unknown:
        raise InvalidParams(f"unknown options {sorted(unknown)}")
    return ({k: v for k, v in opts.items() if k in SCHEME_KEYS},
            {k: v for k, v in opts.items() if k in SOLVER_KEYS})


def exact_grid_function(grid: Grid, case: ManufacturedCase) -> GridFunction:
    ue = GridFunction.from_function(grid, case.u)
    if not grid.periodic:
        # the discrete space carries zero boundary values
        ue.values[:, [0, -1]] = 0.0
    return ue


def solve_manufactured(pipe: PipeGeometry, case: ManufacturedCase, M: int, N: int, **opts):
    """Solve on an ``M x N`` grid and measure the error against ``case``.

    Returns ``(E, u_h, stats)``.
    """
    scheme_opts, solver_opts = _split_opts(opts)
    grid = Grid.for_pipe(pipe, M, N)
    coeffs = build_coefficients(pipe, grid, case.lam)
    system = assemble(pipe, grid, coeffs, lambda t, w: manufactured_rhs(pipe, case, t, w),
                      **scheme_opts)
    u_h, stats = solve(system, **solver_opts)
    E = norm_h1(u_h - exact_grid_function(grid, case))
    return E, u_h, stats


def run_case(pipe: PipeGeometry, case: ManufacturedCase, h_list, name=None, **opts) -> ConvergenceReport:
    """Convergence table over ``h_list``.

    Library errors in one row are recorded on that row and the remaining
    rows still run.
    """
    scheme_opts, solver_opts = _split_opts(opts)
    report = ConvergenceReport(name or f"{pipe.centerline.kind}/{pipe.cross_section.kind}/{case.name}",
                               meta={"mapping": H_MAPPING, "boundary": pipe.boundary_mode,
                                     "section_params": dict(pipe.cross_section.params),
                                     **scheme_opts, **solver_opts})
    for h in sorted(h_list, reverse=True):
        M, N = grid_sizes(pipe, h)
        lo, hi = pipe.omega_range
        row = ReportRow(float(h), M, N, max(2 * np.pi / M, (hi - lo) / N))
        try:
            row.E, _, stats = solve_manufactured(pipe, case, M, N, **opts)
            row.stats = stats.as_dict()
            log.info("h=%.4g solved in %.1fs", h, stats.seconds)
        except PipeSurfError as exc:
            log.warning("row h=%s failed: %s", h, exc)
            row.error = f"{type(exc).__name__}: {exc}"
        report.add(row)
        if row.ok:
            log.info("h=%.4g M=%d N=%d E=%.3e rate=%s", h, M, N, row.E, row.rate)
    return report


def torus_pipe(section="circular", a=2.0, **section_params) -> PipeGeometry:
    return PipeGeometry(catalog_centerline("circle", a=a), catalog_cross_section(section, **section_params),
                        "periodic_omega")


def helix_pipe(section="circular", a=2.0, b=1.0, domain=(0.0, 2 * np.pi), **section_params) -> PipeGeometry:
    return PipeGeometry(catalog_centerline("helix", a=a, b=b, domain=domain),
                        catalog_cross_section(section, **section_params))


def regularity_sweep(gammas, h_list, **opts) -> list:
    """One torus report per superellipse exponent ``gamma``."""
    reports = []
    for gamma in gammas:
        if not gamma > 0:
            raise InvalidParams("gamma must be positive")
        pipe = torus_pipe("superellipse", gamma=float(gamma))
        reports.append(run_case(pipe, manufactured_case("torus-trig"), h_list,
                                name=f"torus/superellipse gamma={gamma:g}", **opts))
    return reports
