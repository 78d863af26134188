"""Run configuration: one YAML file with nested sections."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .errors import InvalidParams, IoFailure, UnknownKind

TEMPLATE = """\
# Run configuration.  Every key is optional; the values shown are the defaults.
geometry:
  centerline:
    kind: circle            # catalog kind, or "custom" with x/y/z expressions in omega
    params: {a: 2.0}        # catalog parameters (see the README for each kind)
    domain: null            # [omega_l, omega_r]; null keeps the catalog default
    x: null                 # custom only: component expressions
    y: null
    z: null
    closed: false           # custom only: closed curves allow periodic_omega
  cross_section:
    kind: circular          # catalog kind, or "custom" with an expression
    params: {R0: 0.5}       # the random section also takes seed (overridden by --seed)
    expr: null              # custom only: R(theta, omega)
  boundary: auto            # auto | periodic_omega | dirichlet_omega
problem:
  lambda: sin(theta)*sin(omega)   # reaction coefficient, expression or number
  case: torus-trig          # torus-trig | helix-polyexp | zero | custom | null
  u_exact: null             # custom case: exact solution expression
  f: null                   # source expression when no manufactured case is used
  f_samples: null           # CSV path with columns i, j, value at the grid nodes
grid:
  M: 64                     # theta intervals
  N: 64                     # omega intervals
  h: null                   # if set, M = round(2*pi/h) and N = round(|I_omega|/h)
  h_list: [0.016666666666666666, 0.014285714285714285, 0.0125, 0.011111111111111112, 0.01]
  gamma_list: [0.5, 1.0, 1.5, 2.0, 4.0]
solver:
  method: auto              # auto | direct_lu | gmres
  tol: 1.0e-12              # relative residual target, in (0, 1e-2]
  restart: 50
  maxiter: 200              # GMRES restart cycles
  precond: auto             # auto | amg | ilu | none
  variant: consistent       # consistent | displayed
  sh_denominator: pointwise # pointwise | global
  near_boundary: odd_reflection  # odd_reflection | zero_ghost | drop_correction | extrapolate
  rhs_ghost: analytic       # analytic | zero
output:
  dir: .
  mesh_format: obj          # obj | vtk
  report_formats: [csv, txt, json]
  mesh_M: 64                # mesh resolution for the geometry command
  mesh_N: 64
"""

DEFAULTS = yaml.safe_load(TEMPLATE)
SECTIONS = tuple(DEFAULTS)
BOUNDARIES = ("auto", "periodic_omega", "dirichlet_omega")
CASES = ("torus-trig", "helix-polyexp", "zero", "custom", None)
REPORT_FORMATS = ("csv", "txt", "json")


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if k not in base:
            raise InvalidParams(f"unknown config key {path}{k!r}")
        if isinstance(base[k], dict) and k != "params" and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _choice(value, options, name):
    if value not in options:
        raise InvalidParams(f"{name} must be one of {options}, got {value!r}")


@dataclass
class RunConfig:
    """Validated run configuration; ``data`` mirrors the YAML layout."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __post_init__(self):
        self.data = _merge(DEFAULTS, self.data)
        self.validate()

    def __getitem__(self, section):
        return self.data[section]

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise InvalidParams(f"config is not valid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise InvalidParams("config must be a mapping of sections")
        return cls(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_yaml(fh.read())
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False, default_flow_style=None)

    def replace(self, **updates) -> "RunConfig":
        """Copy with ``section__key=value`` updates applied."""
        data = copy.deepcopy(self.data)
        for key, value in updates.items():
            sec, _, name = key.partition("__")
            data[sec][name] = value
        return RunConfig(data)

    def validate(self) -> None:
        from .compact import NEAR_BOUNDARY, RHS_GHOSTS, SH_DENOMINATORS, VARIANTS
        from .geometry import CURVE_KINDS, SECTION_KINDS
        from .solver import METHODS, PRECONDITIONERS

        geo, prob, grid, sol, out = (self.data[s] for s in SECTIONS)
        cl, cs = geo["centerline"], geo["cross_section"]
        aliases = ("helix", "torus")
        if cl["kind"] != "custom" and cl["kind"] not in CURVE_KINDS + aliases:
            raise UnknownKind(f"unknown centerline kind {cl['kind']!r}; expected one of {CURVE_KINDS}")
        if cl["kind"] == "custom" and not all(cl[c] is not None for c in "xyz"):
            raise InvalidParams("custom centerline needs x, y and z expressions")
        if cl["kind"] == "custom" and cl["domain"] is None:
            raise InvalidParams("custom centerline needs a domain")
        if cs["kind"] != "custom" and cs["kind"] not in SECTION_KINDS:
            raise UnknownKind(f"unknown cross-section kind {cs['kind']!r}; expected one of {SECTION_KINDS}")
        if cs["kind"] == "custom" and not cs["expr"]:
            raise InvalidParams("custom cross-section needs expr")
        _choice(geo["boundary"], BOUNDARIES, "geometry.boundary")
        _choice(prob["case"], CASES, "problem.case")
        if prob["case"] == "custom" and not prob["u_exact"]:
            raise InvalidParams("problem.case custom needs u_exact")
        for k in ("M", "N", "mesh_M", "mesh_N"):
            src = grid if k in grid else out
            if not isinstance(src[k], int) or src[k] < 8:
                raise InvalidParams(f"{k} must be an integer >= 8, got {src[k]!r}")
        h = grid["h"]
        if h is not None and not (isinstance(h, (int, float)) and 0 < h <= 2 * math.pi / 8):
            raise InvalidParams(f"grid.h must lie in (0, 2*pi/8], got {h!r}")
        if any(not (isinstance(h, (int, float)) and h > 0) for h in grid["h_list"]):
            raise InvalidParams("grid.h_list entries must be positive")
        if any(not (isinstance(g, (int, float)) and g > 0) for g in grid["gamma_list"]):
            raise InvalidParams("grid.gamma_list entries must be positive")
        _choice(sol["method"], METHODS, "solver.method")
        _choice(sol["precond"], PRECONDITIONERS, "solver.precond")
        _choice(sol["variant"], VARIANTS, "solver.variant")
        _choice(sol["sh_denominator"], SH_DENOMINATORS, "solver.sh_denominator")
        _choice(sol["near_boundary"], NEAR_BOUNDARY, "solver.near_boundary")
        _choice(sol["rhs_ghost"], RHS_GHOSTS, "solver.rhs_ghost")
        if not (isinstance(sol["tol"], (int, float)) and 0 < sol["tol"] <= 1e-2):
            raise InvalidParams(f"solver.tol must lie in (0, 1e-2], got {sol['tol']!r}")
        for k in ("restart", "maxiter"):
            if not isinstance(sol[k], int) or sol[k] < 1:
                raise InvalidParams(f"solver.{k} must be a positive integer")
        _choice(out["mesh_format"], ("obj", "vtk"), "output.mesh_format")
        for f in out["report_formats"]:
            _choice(f, REPORT_FORMATS, "output.report_formats entry")

    # -- builders ---------------------------------------------------------------

    def pipe(self, seed=None):
        from .geometry import (PipeGeometry, CrossSection, catalog_centerline, catalog_cross_section,
                               centerline_from_expressions)
        geo = self.data["geometry"]
        cl, cs = geo["centerline"], geo["cross_section"]
        if cl["kind"] == "custom":
            curve = centerline_from_expressions(cl["x"], cl["y"], cl["z"], tuple(cl["domain"]),
                                                closed=bool(cl["closed"]))
        else:
            dom = None if cl["domain"] is None else tuple(cl["domain"])
            curve = catalog_centerline(cl["kind"], domain=dom, **(cl["params"] or {}))
        if cs["kind"] == "custom":
            section = CrossSection.from_text(str(cs["expr"]))
        else:
            params = dict(cs["params"] or {})
            if cs["kind"] == "random" and seed is not None:
                params["seed"] = int(seed)
            section = catalog_cross_section(cs["kind"], **params)
        mode = geo["boundary"]
        if mode == "auto":
            mode = "periodic_omega" if curve.closed else "dirichlet_omega"
        return PipeGeometry(curve, section, mode)

    def grid_size(self, pipe) -> tuple[int, int]:
        g = self.data["grid"]
        if g["h"] is not None:
            from .harness import grid_sizes
            return grid_sizes(pipe, float(g["h"]))
        return g["M"], g["N"]

    def case(self, pipe):
        """Manufactured case or None."""
        from .expr import Expr
        from .fields import ManufacturedCase, manufactured_case
        prob = self.data["problem"]
        if prob["case"] is None:
            return None
        if prob["case"] == "custom":
            return ManufacturedCase.from_text(str(prob["u_exact"]), str(prob["lambda"]), "custom")
        case = manufactured_case(prob["case"], pipe.omega_range)
        return ManufacturedCase(case.u, Expr(str(prob["lambda"])), case.name)

    def scheme_options(self) -> dict:
        sol = self.data["solver"]
        return {k: sol[k] for k in ("variant", "sh_denominator", "near_boundary", "rhs_ghost")}

    def solver_options(self) -> dict:
        sol = self.data["solver"]
        return {k: sol[k] for k in ("method", "tol", "restart", "maxiter", "precond")}
