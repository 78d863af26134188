"""Scheme coefficients and manufactured solutions on a grid.

The surface operator at ``r = 1`` is

    Lap u = [d_t(p u_t) + d_w(q u_w) - beta d_t(q u_w) - beta d_w(q u_t)] / (R^2 rho0)

with ``rho0 = s - alpha R cos(theta)``, ``p = rho0 + beta^2 R^2/rho0`` and
``q = R^2/rho0``.  The compact scheme is written for ``R^2 rho0`` times the
equation ``-Lap u + lambda u = f``.

Coefficient derivatives are composed by the chain rule from the exact
partials of ``R`` and the centerline scalars ``s``, ``alpha``, ``beta``;
:class:`Jet` carries a value with its first and second partials through
``+ - * /``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discrete import Grid, STAGGERINGS
from .errors import InvalidParams, NonPositiveJacobian
from .expr import Expr

_PARTS = ("v", "t", "w", "tt", "ww", "tw")


class Jet:
    """Value with partials ``t, w, tt, ww, tw`` (second-order Taylor data)."""

    __slots__ = _PARTS
    __array_ufunc__ = None

    def __init__(self, v, t=0.0, w=0.0, tt=0.0, ww=0.0, tw=0.0):
        self.v, self.t, self.w, self.tt, self.ww, self.tw = v, t, w, tt, ww, tw

    @staticmethod
    def lift(x):
        return x if isinstance(x, Jet) else Jet(x)

    def __add__(self, o):
        o = Jet.lift(o)
        return Jet(*(getattr(self, k) + getattr(o, k) for k in _PARTS))

    __radd__ = __add__

    def __neg__(self):
        return Jet(*(-getattr(self, k) for k in _PARTS))

    def __sub__(self, o):
        return self + (-Jet.lift(o))

    def __rsub__(self, o):
        return Jet.lift(o) - self

    def __mul__(self, o):
        o = Jet.lift(o)
        a, b = self, o
        return Jet(a.v * b.v,
                   a.t * b.v + a.v * b.t,
                   a.w * b.v + a.v * b.w,
                   a.tt * b.v + 2 * a.t * b.t + a.v * b.tt,
                   a.ww * b.v + 2 * a.w * b.w + a.v * b.ww,
                   a.tw * b.v + a.t * b.w + a.w * b.t + a.v * b.tw)

    __rmul__ = __mul__

    def reciprocal(self):
        # d(1/a) = -a'/a^2, d2(1/a) = 2 a' a'' / a^3 - a''/a^2
        a = self
        i1 = 1.0 / a.v
        i2 = i1 * i1
        i3 = i2 * i1
        return Jet(i1, -a.t * i2, -a.w * i2,
                   2 * a.t * a.t * i3 - a.tt * i2,
                   2 * a.w * a.w * i3 - a.ww * i2,
                   2 * a.t * a.w * i3 - a.tw * i2)

    def __truediv__(self, o):
        return self * Jet.lift(o).reciprocal()

    def __rtruediv__(self, o):
        return Jet.lift(o) * self.reciprocal()


def section_jet(cs, theta, omega) -> Jet:
    return Jet(np.asarray(cs(theta, omega), dtype=float), cs.Rt(theta, omega), cs.Rw(theta, omega),
               cs.Rtt(theta, omega), cs.Rww(theta, omega), cs.Rtw(theta, omega))


def _omega_jet(v, w, ww):
    return Jet(v, 0.0, w, 0.0, ww, 0.0)


def coefficient_jets(pipe, theta, omega):
    """Jets of ``R``, ``rho0``, ``p``, ``q`` and the array ``beta`` at given points."""
    theta = np.asarray(theta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    sc = pipe.centerline.frame_scalars(omega)
    R = section_jet(pipe.cross_section, theta, omega)
    c, sn = np.cos(theta), np.sin(theta)
    cos_j = Jet(c, -sn, 0.0, -c, 0.0, 0.0)
    s = _omega_jet(sc.s, sc.s_w, sc.s_ww)
    alpha = _omega_jet(sc.alpha, sc.alpha_w, sc.alpha_ww)
    beta = _omega_jet(sc.beta, sc.beta_w, sc.beta_ww)
    rho0 = s - alpha * R * cos_j
    R2 = R * R
    q = R2 / rho0
    p = rho0 + beta * beta * R2 / rho0
    return {"R": R, "rho0": rho0, "p": p, "q": q, "beta": beta}


# node fields: name -> recipe
def _derived(j, ht, hw, lam):
    p, q, R, rho0, beta = j["p"], j["q"], j["R"], j["rho0"], j["beta"]
    b = beta.v * np.ones_like(p.v)
    ptil = p.t**2 / p.v - 0.5 * p.tt
    qtil = q.w**2 / q.v - 0.5 * q.ww
    qtil1 = q.t**2 / q.v - 0.5 * q.tt
    out = {
        "R": R.v, "rho0": rho0.v, "p": p.v, "q": q.v, "beta": b,
        "p_tilde": ptil, "p_hat": p.v - ht**2 / 12 * ptil,
        "q_tilde": qtil, "q_hat": q.v - hw**2 / 12 * qtil,
        "q_tilde1": qtil1, "q_hat1": q.v - ht**2 / 3 * qtil1,
        "q_hat2": q.v - hw**2 / 3 * qtil,
        "q_bar": q.tw / q.v - q.t * q.w / q.v**2,
        "eta": rho0.v * R.v**2 / (b**2 * R.v**2 + rho0.v**2),
        "pt_p": p.t / p.v, "pw_p": p.w / p.v, "qt_q": q.t / q.v, "qw_q": q.w / q.v,
    }
    if lam is not None:
        out["lambda"] = lam
        out["varpi"] = R.v**2 * rho0.v * lam
    return out


@dataclass
class CoefficientFields:
    """Scheme coefficients sampled on the work layout of a grid.

    ``node``, ``theta_half`` and ``omega_half`` map field names to work
    arrays (ghost columns hold the analytic continuation).  ``eta0``,
    ``rho0_min``/``rho0_max`` and ``R_min`` are global constants over the
    closed node set.
    """

    grid: Grid
    node: dict
    theta_half: dict
    omega_half: dict
    eta0: float
    rho0_min: float
    rho0_max: float
    R_min: float
    beta_const: float | None = None
    meta: dict = field(default_factory=dict)

    def at(self, staggering):
        if staggering not in STAGGERINGS:
            raise InvalidParams(f"unknown staggering {staggering!r}")
        return getattr(self, staggering)


def _as_field(lam):
    if lam is None or isinstance(lam, Expr) or callable(lam):
        return lam
    return Expr(lam)


def build_coefficients(pipe, grid: Grid, lam="sin(theta)*sin(omega)") -> CoefficientFields:
    """Evaluate every scheme coefficient analytically at nodes and half nodes.

    Raises
    ------
    NonPositiveJacobian
        If ``rho0`` or ``R`` is not positive at some node of the closed grid.
    """
    lam_fn = _as_field(lam)
    ht, hw = grid.h_theta, grid.h_omega
    fields = {}
    for stag in STAGGERINGS:
        T, W = grid.work_coords(stag)
        jets = coefficient_jets(pipe, T, W)
        lam_vals = None if lam_fn is None else np.asarray(lam_fn(T, W), dtype=float) * np.ones_like(T)
        fields[stag] = _derived(jets, ht, hw, lam_vals)

    nodes = fields["node"]
    sl = (slice(None), slice(grid.p, grid.p + grid.n_omega_nodes))
    rho0 = nodes["rho0"][sl]
    R = nodes["R"][sl]
    if np.any(rho0 <= 0) or np.any(R <= 0):
        raise NonPositiveJacobian(
            f"rho0 min {rho0.min():.3e}, R min {R.min():.3e}: pipe map folds on this grid")
    for stag in ("theta_half", "omega_half"):
        rho_h = fields[stag]["rho0"][sl if stag == "theta_half" else (slice(None), slice(grid.p, grid.p + grid.N))]
        if np.any(rho_h <= 0):
            raise NonPositiveJacobian(f"rho0 not positive at {stag} nodes")
    rmin, rmax, Rm = float(rho0.min()), float(rho0.max()), float(R.min())
    b = nodes["beta"][sl]
    bmax = float(np.max(np.abs(b)))
    eta0 = min(rmin * Rm**2 / (bmax**2 * Rm**2 + rmin**2),
               rmax * Rm**2 / (bmax**2 * Rm**2 + rmax**2))
    bconst = float(b.flat[0]) if np.all(b == b.flat[0]) else None
    return CoefficientFields(grid, fields["node"], fields["theta_half"], fields["omega_half"],
                             eta0, rmin, rmax, Rm, bconst,
                             {"pipe": f"{pipe.centerline.kind}/{pipe.cross_section.kind}"})


# -- manufactured solutions ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """Exact solution and reaction coefficient as expressions in (theta, omega)."""

    u: Expr
    lam: Expr
    name: str = "custom"

    @classmethod
    def from_text(cls, u, lam, name="custom"):
        return cls(Expr(u), Expr(lam), name)

    def partials(self, theta, omega):
        u = self.u
        ut, uw = u.d("theta"), u.d("omega")
        return (u(theta, omega), ut(theta, omega), uw(theta, omega),
                ut.d("theta")(theta, omega), uw.d("omega")(theta, omega), ut.d("omega")(theta, omega))


def manufactured_case(name: str, omega_range=(0.0, 2 * np.pi)) -> ManufacturedCase:
    """Named test problems.

    ``"torus-trig"``: ``u = sin(2 theta) cos(2 omega)``, periodic.
    ``"helix-polyexp"``: ``u = (w - wl)^3 (exp(-w) - exp(-wr))^3 exp(sin(theta))``,
    vanishing at both ends of ``omega_range``.  Both use
    ``lambda = sin(theta) sin(omega)``.
    """
    lam = "sin(theta)*sin(omega)"
    if name == "torus-trig":
        return ManufacturedCase.from_text("sin(2*theta)*cos(2*omega)", lam, name)
    if name == "helix-polyexp":
        wl, wr = (float(x) for x in omega_range)
        return ManufacturedCase.from_text(
            f"(omega - {wl!r})^3*(exp(-omega) - {float(np.exp(-wr))!r})^3*exp(sin(theta))", lam, name)
    if name == "zero":
        return ManufacturedCase.from_text("0", lam, name)
    raise InvalidParams(f"unknown manufactured case {name!r}")


def apply_continuous(pipe, u_partials, theta, omega, lam_vals=None):
    """``-(R^2 rho0) Lap u + R^2 rho0 lambda u`` from analytic partials.

    Returns ``(scaled, R2rho0)``; dividing gives ``f``.
    """
    jets = coefficient_jets(pipe, theta, omega)
    p, q, beta = jets["p"], jets["q"], jets["beta"].v
    u, ut, uw, utt, uww, utw = u_partials
    div = (p.t * ut + p.v * utt + q.w * uw + q.v * uww
           - beta * (q.t * uw + q.v * utw) - beta * (q.w * ut + q.v * utw))
    w = jets["R"].v ** 2 * jets["rho0"].v
    out = -div
    if lam_vals is not None:
        out = out + w * lam_vals * u
    return out, w


def manufactured_rhs(pipe, case: ManufacturedCase, theta, omega):
    """Source ``f = -Lap u + lambda u`` for the exact solution of ``case``."""
    theta, omega = np.broadcast_arrays(np.asarray(theta, float), np.asarray(omega, float))
    parts = case.partials(theta, omega)
    scaled, w = apply_continuous(pipe, parts, theta, omega, case.lam(theta, omega))
    return scaled / w
