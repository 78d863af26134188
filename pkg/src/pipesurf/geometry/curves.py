"""Centerlines, moving frames and the curve catalog.

A centerline is a parametric space curve ``r_c(omega)``.  The frame used to
build the pipe is the Frenet triad ``e1 = r'/|r'|``, ``e3 = r' x r''/|r' x r''|``,
``e2 = e3 x e1``.  Planar curves use the fixed plane normal for ``e3`` so the
frame stays smooth through inflection points; curvature is then signed.

Besides the frame, the scheme needs the speed ``s = |r'|`` and the
speed-scaled curvature and torsion ``alpha = kappa*s`` and ``beta = tau*s``
together with their first two omega-derivatives.  Catalog curves provide
these in closed form (expression trees differentiated structurally); custom
curves fall back to sixth-order centered differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DegenerateCurve, InvalidParams, UnknownKind
from ..expr import Expr, derivative
from ..expr import add, call, div, mul, power, sub, Const

VecFn = Callable[[np.ndarray], np.ndarray]

# sixth-order centered weights for first and second derivatives
_FD1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_FD2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def fd6(fn, x, step, order=1):
    """Sixth-order centered finite difference of a scalar map."""
    x = np.asarray(x, dtype=float)
    w = _FD1 if order == 1 else _FD2
    acc = sum(wk * fn(x + (k - 3) * step) for k, wk in enumerate(w) if wk != 0.0)
    return acc / step**order


@dataclass(frozen=True)
class Frame:
    """Moving frame and scalar invariants of a centerline at one or many omega."""

    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    speed: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray

    @property
    def alpha(self):
        return self.kappa * self.speed

    @property
    def beta(self):
        return self.tau * self.speed


@dataclass(frozen=True)
class FrameScalars:
    """``s``, ``alpha`` and ``beta`` with omega-derivatives, sampled on an array."""

    s: np.ndarray
    s_w: np.ndarray
    s_ww: np.ndarray
    alpha: np.ndarray
    alpha_w: np.ndarray
    alpha_ww: np.ndarray
    beta: np.ndarray
    beta_w: np.ndarray
    beta_ww: np.ndarray


def _cross(a, b):
    return np.cross(a, b, axis=-1)


def _norm(a):
    return np.linalg.norm(a, axis=-1)


@dataclass(frozen=True, eq=False)
class Centerline:
    """Parametric centerline with analytic derivatives.

    Parameters
    ----------
    position, deriv1, deriv2, deriv3 : callable
        Maps from an omega array of shape ``S`` to vectors of shape ``S + (3,)``.
    domain : (float, float)
        Parameter interval ``[omega_l, omega_r]``.
    closed : bool
        Declared closedness (period ``omega_r - omega_l``); not auto-detected.
    kind : str
        Catalog tag or ``"custom"``.
    plane_normal : array-like, optional
        Fixed unit normal of a planar curve.  ``tau`` is then identically 0.
    scalar_exprs : dict, optional
        Closed-form ``s``, ``alpha``, ``beta`` as :class:`Expr` in omega.
    """

    position: VecFn
    deriv1: VecFn
    deriv2: VecFn
    deriv3: VecFn
    domain: tuple[float, float]
    closed: bool = False
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    plane_normal: tuple[float, float, float] | None = None
    scalar_exprs: dict | None = None

    @property
    def planar(self) -> bool:
        return self.plane_normal is not None

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def with_domain(self, lo, hi, closed=None) -> "Centerline":
        """Same curve restricted (or extended) to a new parameter interval."""
        from dataclasses import replace
        return replace(self, domain=(float(lo), float(hi)),
                       closed=self.closed if closed is None else closed)

    # -- scalar invariants with derivatives --------------------------------
    def frame_scalars(self, omega) -> FrameScalars:
        """Speed, alpha and beta plus two omega-derivatives each."""
        omega = np.asarray(omega, dtype=float)
        if self.scalar_exprs is not None:
            vals = {}
            for name, ex in self.scalar_exprs.items():
                d1 = ex.d("omega")
                vals[name] = ex(0.0, omega)
                vals[name + "_w"] = d1(0.0, omega)
                vals[name + "_ww"] = d1.d("omega")(0.0, omega)
            return FrameScalars(**vals)

        step = 1e-3 * max(abs(self.length), 1.0)

        def comp(attr):
            return lambda w: getattr(frenet_frame(self, w), attr)

        vals = {}
        for name in ("s", "alpha", "beta"):
            f = comp({"s": "speed"}.get(name, name))
            vals[name] = f(omega)
            vals[name + "_w"] = fd6(f, omega, step, 1)
            vals[name + "_ww"] = fd6(f, omega, step, 2)
        return FrameScalars(**vals)


def frenet_frame(curve: Centerline, omega) -> Frame:
    """Orthonormal right-handed frame and curvature/torsion at ``omega``.

    Raises
    ------
    DegenerateCurve
        If ``|r'|`` vanishes, or ``|r' x r''| < 1e-14`` on a non-planar curve.

    Examples
    --------
    >>> fr = frenet_frame(catalog_centerline("circle", a=2.0), 0.3)
    >>> round(float(fr.kappa), 12), float(fr.tau), round(float(fr.speed), 12)
    (0.5, 0.0, 2.0)
    """
    omega = np.asarray(omega, dtype=float)
    d1 = curve.deriv1(omega)
    d2 = curve.deriv2(omega)
    s = _norm(d1)
    if np.any(s < 1e-14):
        raise DegenerateCurve(f"centerline speed vanishes on {curve.kind}")
    e1 = d1 / s[..., None]
    c = _cross(d1, d2)
    if curve.planar:
        n = np.broadcast_to(np.asarray(curve.plane_normal, dtype=float), e1.shape)
        kappa = np.einsum("...k,...k->...", c, n) / s**3
        tau = np.zeros_like(s)
        e3 = n.copy()
    else:
        cn = _norm(c)
        if np.any(cn < 1e-14):
            raise DegenerateCurve(f"curvature vanishes on {curve.kind}; frame undefined")
        e3 = c / cn[..., None]
        kappa = cn / s**3
        tau = np.einsum("...k,...k->...", c, curve.deriv3(omega)) / cn**2
    e2 = _cross(e3, e1)
    return Frame(e1=e1, e2=e2, e3=e3, speed=s, kappa=kappa, tau=tau)


# -- catalog -----------------------------------------------------------------

def _vec(exprs: list[Expr], order: int) -> VecFn:
    parts = exprs
    for _ in range(order):
        parts = [e.d("omega") for e in parts]

    def fn(omega):
        omega = np.asarray(omega, dtype=float)
        return np.stack([np.broadcast_to(p(0.0, omega), omega.shape) for p in parts], axis=-1)
    return fn


def _scalar_trees(xyz: list[Expr], planar: bool) -> dict[str, Expr]:
    """Closed-form s, alpha, beta trees built from component expressions."""
    d1 = [e.d("omega").node for e in xyz]
    d2 = [derivative(n, "omega") for n in d1]
    d3 = [derivative(n, "omega") for n in d2]
    two = Const(2.0)
    ss = add(add(power(d1[0], two), power(d1[1], two)), power(d1[2], two))
    s = call("sqrt", ss)
    c = [sub(mul(d1[1], d2[2]), mul(d1[2], d2[1])),
         sub(mul(d1[2], d2[0]), mul(d1[0], d2[2])),
         sub(mul(d1[0], d2[1]), mul(d1[1], d2[0]))]
    if planar:
        # signed curvature against +z; alpha = kappa*s = c_z / s^2
        return {"s": Expr(s), "alpha": Expr(div(c[2], ss)), "beta": Expr(Const(0.0))}
    cc = add(add(power(c[0], two), power(c[1], two)), power(c[2], two))
    triple = add(add(mul(c[0], d3[0]), mul(c[1], d3[1])), mul(c[2], d3[2]))
    return {"s": Expr(s), "alpha": Expr(div(call("sqrt", cc), ss)),
            "beta": Expr(div(mul(triple, s), cc))}


def centerline_from_expressions(x, y, z, domain, closed=False, kind="custom",
                                params=None, planar=None, scalar_exprs=None):
    """Build a centerline from component expressions in ``omega``.

    ``planar=None`` auto-detects curves in the plane ``z = const``.
    """
    xyz = [Expr(str(t)) if not isinstance(t, Expr) else t for t in (x, y, z)]
    if planar is None:
        planar = not xyz[2].depends_on("omega")
    normal = (0.0, 0.0, 1.0) if planar else None
    if scalar_exprs is None:
        scalar_exprs = _scalar_trees(xyz, planar)
    return Centerline(
        position=_vec(xyz, 0), deriv1=_vec(xyz, 1), deriv2=_vec(xyz, 2), deriv3=_vec(xyz, 3),
        domain=(float(domain[0]), float(domain[1])), closed=closed, kind=kind,
        params=dict(params or {}), plane_normal=normal, scalar_exprs=scalar_exprs)


def _const_scalars(s, alpha, beta):
    return {"s": Expr(s), "alpha": Expr(alpha), "beta": Expr(beta)}


def _squircle_xy(p):
    g = f"(cos(omega)^{p} + sin(omega)^{p})^(-1/{p})"
    return f"{g}*cos(omega)", f"{g}*sin(omega)"


def _positive(name, value):
    if not value > 0:
        raise InvalidParams(f"{name} must be positive, got {value}")
    return float(value)


CURVE_KINDS = ("rounded-L", "rounded-V", "cylindrical-helix", "conical-helix",
               "circle", "squircle", "ellipse", "curved-triangle")
_CURVE_ALIASES = {"helix": "cylindrical-helix", "torus": "circle"}


def catalog_centerline(kind: str, domain=None, **params) -> Centerline:
    """Tabulated centerline with exact derivatives.

    Parameters
    ----------
    kind : str
        One of ``CURVE_KINDS`` (``"helix"`` is an alias of the cylindrical helix).
    domain : (float, float), optional
        Override of the tabulated parameter interval.
    **params
        ``circle``: ``a``; ``cylindrical-helix``: ``a``, ``b``; ``conical-helix``:
        ``c``; ``ellipse``: ``a``, ``b``; ``squircle``/``rounded-L``: ``p``;
        ``rounded-V``: ``eps``; ``curved-triangle``: ``k``, ``a``.

    Examples
    --------
    >>> catalog_centerline("ellipse").position(np.array(0.0))
    array([2., 0., 0.])
    """
    kind = _CURVE_ALIASES.get(kind, kind)
    pi = math.pi
    if kind == "circle":
        a = _positive("a", params.get("a", 2.0))
        out = centerline_from_expressions(
            f"{a!r}*cos(omega)", f"{a!r}*sin(omega)", "0", (0.0, 2 * pi), True, kind,
            {"a": a}, planar=True, scalar_exprs=_const_scalars(a, 1.0, 0.0))
    elif kind == "cylindrical-helix":
        a = _positive("a", params.get("a", 8.0))
        b = float(params.get("b", 1.0))
        if b == 0.0:
            raise InvalidParams("helix pitch b must be nonzero; use the circle for b = 0")
        s = math.hypot(a, b)
        out = centerline_from_expressions(
            f"{a!r}*cos(omega)", f"{a!r}*sin(omega)", f"{b!r}*omega", (0.0, 8 * pi), False,
            kind, {"a": a, "b": b}, planar=False, scalar_exprs=_const_scalars(s, a / s, b / s))
    elif kind == "conical-helix":
        c = _positive("c", params.get("c", math.sqrt(3.0) / 3.0))
        out = centerline_from_expressions(
            f"{c!r}*omega*cos(omega)", f"{c!r}*omega*sin(omega)", "omega", (0.0, 8 * pi),
            False, kind, {"c": c}, planar=False)
    elif kind == "ellipse":
        a = _positive("a", params.get("a", 2.0))
        b = _positive("b", params.get("b", 1.0))
        out = centerline_from_expressions(
            f"{a!r}*cos(omega)", f"{b!r}*sin(omega)", "0", (0.0, 2 * pi), True, kind,
            {"a": a, "b": b}, planar=True)
    elif kind in ("squircle", "rounded-L"):
        p = params.get("p", 8)
        if not (float(p) == int(p) and int(p) >= 2 and int(p) % 2 == 0):
            raise InvalidParams(f"squircle exponent p must be an even integer >= 2, got {p}")
        p = int(p)
        x, y = _squircle_xy(p)
        if kind == "squircle":
            out = centerline_from_expressions(x, y, "0", (0.0, 2 * pi), True, kind, {"p": p},
                                              planar=True)
        else:
            out = centerline_from_expressions(x, y, "0", (pi, 1.5 * pi), False, kind,
                                              {"p": p}, planar=True)
    elif kind == "rounded-V":
        eps = _positive("eps", params.get("eps", 0.5))
        out = centerline_from_expressions(
            "omega", f"2*sqrt((omega - 3)^2 + {eps * eps!r})", "0", (0.0, 6.0), False, kind,
            {"eps": eps}, planar=True)
    elif kind == "curved-triangle":
        k = float(params.get("k", 0.5))
        a = _positive("a", params.get("a", 2.0))
        if not abs(k) < 1.0:
            raise InvalidParams(f"curved triangle needs |k| < 1, got {k}")
        out = centerline_from_expressions(
            f"{a!r}*cos(omega)", f"sin(omega)/(1 - {k!r}*sin(omega))", "0", (0.0, 2 * pi),
            True, kind, {"k": k, "a": a}, planar=True)
    else:
        raise UnknownKind(f"unknown centerline kind {kind!r}; expected one of {CURVE_KINDS}")
    if domain is not None:
        out = out.with_domain(*domain)
    return out


def custom_centerline(position, deriv1, deriv2, deriv3=None, domain=(0.0, 2 * math.pi),
                      closed=False, plane_normal=None) -> Centerline:
    """Wrap user supplied vector maps.

    Missing ``deriv3`` is replaced by a sixth-order centered difference of
    ``deriv2``; frame scalars always use the finite-difference fallback.
    """
    if deriv3 is None:
        step = 1e-3 * max(abs(domain[1] - domain[0]), 1.0)

        def deriv3(w):
            w = np.asarray(w, dtype=float)
            return sum(c * deriv2(w + (k - 3) * step)
                       for k, c in enumerate(_FD1) if c != 0.0) / step
    return Centerline(position, deriv1, deriv2, deriv3, (float(domain[0]), float(domain[1])),
                      closed, "custom", {}, plane_normal, None)
