"""Compact difference operators and the fourth-order scheme blocks.

The scheme is ``(L + A + B + S - C) u = g`` with ``g = D C B A (R^2 rho0 f)``,
where the four compact operators are

    A_theta v = v + h_t^2/12 d2_t v - h_t^2/12 nabla_t((p_t/p) v)
    B_omega v = v + h_w^2/12 d2_w v - h_w^2/12 nabla_w((q_w/q) v)
    C_tw    v = v + h_t^2/6 d2_t v + h_w^2/6 d2_w v - h_t^2/3 (q_t/q) nabla_t v
    D_wt    v = v + h_t^2/6 d2_t v + h_w^2/6 d2_w v - h_w^2/3 (q_w/q) nabla_w v

and ``L, A, B, C`` are the blocks obtained by expanding the composite
operators applied to the conservative second-order forms, ``S`` is a
positive ``O(h^4)`` stabilizer.

Every function here is generic: ``u`` may be a work array or a
:class:`~pipesurf.discrete.Stencil`.

Two block variants are provided.  ``"consistent"`` (default) is the exact
second-order expansion of the composite operators.  ``"displayed"``
reproduces a commonly printed form that differs in a few coefficients
(``1/3`` instead of ``1/12`` in front of the ``p_tilde``/``q_tilde`` terms
and some ``p``/``q`` ratio swaps); it is only second-order consistent and
is kept for comparison.
"""
from __future__ import annotations

import numpy as np

from . import discrete as d
from .discrete import GridFunction, Stencil
from .errors import InvalidParams
from .fields import CoefficientFields

VARIANTS = ("consistent", "displayed")
SH_DENOMINATORS = ("pointwise", "global")
NEAR_BOUNDARY = ("odd_reflection", "zero_ghost", "drop_correction", "extrapolate")
EXTRAPOLATION_DEGREE = 6
RHS_GHOSTS = ("analytic", "zero")
COMPACT_KINDS = ("A_theta", "B_omega", "C_theta_omega", "D_omega_theta")
BLOCK_KINDS = ("L", "A", "B", "C", "S")


class Scheme:
    """Block applicators bound to one set of coefficient fields.

    Parameters
    ----------
    coeffs : CoefficientFields
    variant : {"consistent", "displayed"}
    sh_denominator : {"pointwise", "global"}
        ``1/rho0`` in the stabilizer as the node field or the global minimum.
        ``eta0`` is always the global constant.
    near_boundary : {"odd_reflection", "zero_ghost", "drop_correction", "extrapolate"}
        Dirichlet closure for omega neighbours beyond the boundary.  The
        default ``odd_reflection`` uses ``u_{-k} = -u_k``.  Zero ghosts
        extend ``u`` by 0; ``drop_correction`` additionally removes
        the stabilizer on the two rows next to each boundary (the only block
        reaching three rows out); ``extrapolate`` fills ghosts with the
        degree-6 polynomial through the boundary value and the six nearest
        interior values.  Only the two reflection-type closures keep the
        matrix free of spurious boundary eigenvalues with large negative
        real part; see the README for measured orders.
    """

    def __init__(self, coeffs: CoefficientFields, variant="consistent", sh_denominator="pointwise",
                 near_boundary="odd_reflection"):
        for name, val, allowed in (("variant", variant, VARIANTS),
                                   ("sh_denominator", sh_denominator, SH_DENOMINATORS),
                                   ("near_boundary", near_boundary, NEAR_BOUNDARY)):
            if val not in allowed:
                raise InvalidParams(f"{name} must be one of {allowed}, got {val!r}")
        self.cf = coeffs
        self.g = coeffs.grid
        self.variant = variant
        self.sh_denominator = sh_denominator
        self.near_boundary = near_boundary
        n = coeffs.node
        self._beta = n["beta"]
        self._beta_zero = bool(np.all(n["beta"] == 0.0))

    # -- compact operators ----------------------------------------------------
    def A_theta(self, v):
        g, n = self.g, self.cf.node
        ht2 = g.h_theta**2
        return v + ht2 / 12 * d.d2_theta(g, v) - ht2 / 12 * d.nabla_theta(g, n["pt_p"] * v)

    def B_omega(self, v):
        g, n = self.g, self.cf.node
        hw2 = g.h_omega**2
        return v + hw2 / 12 * d.d2_omega(g, v) - hw2 / 12 * d.nabla_omega(g, n["qw_q"] * v)

    def C_theta_omega(self, v):
        g, n = self.g, self.cf.node
        ht2, hw2 = g.h_theta**2, g.h_omega**2
        return (v + ht2 / 6 * d.d2_theta(g, v) + hw2 / 6 * d.d2_omega(g, v)
                - ht2 / 3 * (n["qt_q"] * d.nabla_theta(g, v)))

    def D_omega_theta(self, v):
        g, n = self.g, self.cf.node
        ht2, hw2 = g.h_theta**2, g.h_omega**2
        return (v + ht2 / 6 * d.d2_theta(g, v) + hw2 / 6 * d.d2_omega(g, v)
                - hw2 / 3 * (n["qw_q"] * d.nabla_omega(g, v)))

    def compact(self, kind, v):
        if kind not in COMPACT_KINDS:
            raise InvalidParams(f"unknown compact operator {kind!r}; expected {COMPACT_KINDS}")
        return getattr(self, kind)(v)

    # -- building blocks ------------------------------------------------------
    def _bterm(self, x):
        """``beta * x`` that stays exactly zero for beta = 0."""
        return 0.0 * x if self._beta_zero else self._beta * x

    def X_p(self, u):
        return d.div_theta(self.g, self.cf.theta_half["p_hat"], u)

    def X_q(self, u):
        return d.div_omega(self.g, self.cf.omega_half["q_hat"], u)

    def Y1(self, u):
        return d.nabla_omega(self.g, self.cf.node["q_hat1"] * d.nabla_theta(self.g, u))

    def Y2(self, u):
        key = "q_hat2" if self.variant == "consistent" else "q_hat"
        return d.nabla_theta(self.g, self.cf.node[key] * d.nabla_omega(self.g, u))

    def extend(self, u):
        """Apply the omega ghost closure to node data (array or stencil)."""
        g = self.g
        if g.periodic or self.near_boundary not in ("odd_reflection", "extrapolate"):
            return u
        if self.near_boundary == "extrapolate":
            return self._extrapolate(u)
        W = g.work_shape[1]
        p, N = g.p, g.N
        inner = np.zeros(g.work_shape)
        inner[:, p + 1:p + N] = 1.0
        out = inner * u
        for k in range(1, p + 1):
            lo = np.zeros(g.work_shape)
            lo[:, p - k] = 1.0
            hi = np.zeros(g.work_shape)
            if p + N + k < W:
                hi[:, p + N + k] = 1.0
            out = out - lo * g.shift(u, 0, 2 * k) - hi * g.shift(u, 0, -2 * k)
        return out

    def _extrapolate(self, u):
        g = self.g
        W = g.work_shape[1]
        p, N = g.p, g.N
        deg = min(EXTRAPOLATION_DEGREE, N - 1)
        nodes = np.arange(deg + 1, dtype=float)
        out = self._band(slice(p + 1, p + N)) * u
        for k in range(1, p + 1):
            # Lagrange weights at -k; the boundary node (weight 0th) holds 0
            wts = [np.prod([(-k - x) / (m - x) for x in nodes if x != m]) for m in nodes]
            lo, hi = self._band(p - k), (self._band(p + N + k) if p + N + k < W else 0.0)
            for m in range(1, deg + 1):
                out = out + wts[m] * (lo * g.shift(u, 0, k + m) + hi * g.shift(u, 0, -k - m))
        return out

    def _band(self, cols):
        m = np.zeros(self.g.work_shape)
        m[:, cols] = 1.0
        return m

    # -- blocks ---------------------------------------------------------------
    def L(self, u):
        g, n, t, w = self.g, self.cf.node, self.cf.theta_half, self.cf.omega_half
        out = -d.div_theta(g, t["p"], u) - d.div_omega(g, w["q"], u)
        out = out + self._bterm(d.nabla_omega(g, n["q"] * d.nabla_theta(g, u))
                                + d.nabla_theta(g, n["q"] * d.nabla_omega(g, u)))
        return out + n["varpi"] * u

    def A(self, u):
        g, n, t, w = self.g, self.cf.node, self.cf.theta_half, self.cf.omega_half
        ht2, hw2 = g.h_theta**2, g.h_omega**2
        c = 1 / 12 if self.variant == "consistent" else 1 / 3
        vu = n["varpi"] * u
        out = c * ht2 * d.div_theta(g, t["p_tilde"], u) + c * hw2 * d.div_omega(g, w["q_tilde"], u)
        out = out + self._bterm(
            -ht2 / 3 * d.nabla_omega(g, n["q_tilde1"] * d.nabla_theta(g, u))
            - hw2 / 3 * d.nabla_theta(g, n["q_tilde"] * d.nabla_omega(g, u))
            + ht2 / 3 * (n["q_bar"] * d.div_theta(g, t["q"], u))
            + hw2 / 3 * (n["q_bar"] * d.div_omega(g, w["q"], u)))
        out = out + 5 * ht2 / 12 * d.d2_theta(g, vu) + 5 * hw2 / 12 * d.d2_omega(g, vu)
        out = out - ht2 / 12 * d.nabla_theta(g, n["pt_p"] * vu) - hw2 / 12 * d.nabla_omega(g, n["qw_q"] * vu)
        out = out - hw2 / 3 * (n["qw_q"] * d.nabla_omega(g, vu)) - ht2 / 3 * (n["qt_q"] * d.nabla_theta(g, vu))
        return out

    def B(self, u):
        g, n = self.g, self.cf.node
        ht2, hw2 = g.h_theta**2, g.h_omega**2
        nt, nw = (lambda x: d.nabla_theta(g, x)), (lambda x: d.nabla_omega(g, x))
        pt_p, qt_q, qw_q, pw_p = n["pt_p"], n["qt_q"], n["qw_q"], n["pw_p"]
        cons = self.variant == "consistent"
        Xp, Xq = self.X_p(u), self.X_q(u)
        out = hw2 / 12 * nw(qw_q * Xp) + ht2 / 3 * (qt_q * nt(Xp)) + hw2 / 3 * (qw_q * nw(Xp))
        out = out + ht2 / 12 * nt(pt_p * Xq)
        out = out + hw2 / 3 * ((qw_q if cons else pw_p) * nw(Xq))
        out = out + ht2 / 3 * ((qt_q if cons else pt_p) * nt(Xq))
        if self._beta_zero:
            return out
        Y1, Y2 = self.Y1(u), self.Y2(u)
        yb = (-ht2 / 12 * nt(pt_p * Y1) - hw2 / 12 * nw(qw_q * Y1) - hw2 / 3 * (qw_q * nw(Y1))
              - hw2 / 12 * nw((qw_q if cons else pw_p) * Y2)
              - ht2 / 12 * nt((pt_p if cons else qt_q) * Y2)
              - ht2 / 3 * (qt_q * nt(Y2)))
        return out + self._bterm(yb)

    def C(self, u):
        g = self.g
        ht2, hw2 = g.h_theta**2, g.h_omega**2
        Xp, Xq = self.X_p(u), self.X_q(u)
        out = (ht2 / 3 * d.d2_theta(g, Xp) + 5 * hw2 / 12 * d.d2_omega(g, Xp)
               + hw2 / 3 * d.d2_omega(g, Xq) + 5 * ht2 / 12 * d.d2_theta(g, Xq))
        if self._beta_zero:
            return out
        Y = self.Y1(u) + self.Y2(u)
        return out - self._bterm(ht2 / 4 * d.d2_theta(g, Y) + hw2 / 4 * d.d2_omega(g, Y))

    def S(self, u):
        g, n, t, w = self.g, self.cf.node, self.cf.theta_half, self.cf.omega_half
        ht4, hw4 = g.h_theta**4, g.h_omega**4
        inv_rho = 1.0 / (n["rho0"] if self.sh_denominator == "pointwise" else self.cf.rho0_min)
        inv_eta = 1.0 / self.cf.eta0
        p2, qw2 = t["p_hat"] ** 2, w["q_hat"] ** 2
        d2t, d2w = d.d2_theta(g, u), d.d2_omega(g, u)
        out = (-4 / 9 * ht4 * (inv_rho * d.d2_theta(g, d.d_theta_back(g, p2 * d.d_theta(g, d2t))))
               - 25 / 36 * hw4 * (inv_rho * d.d2_omega(g, d.d_theta_back(g, p2 * d.d_theta(g, d2w))))
               - 4 / 9 * hw4 * inv_eta * d.d2_omega(g, d.d_omega_back(g, qw2 * d.d_omega(g, d2w)))
               - 25 / 36 * ht4 * inv_eta * d.d2_theta(g, d.d_omega_back(g, qw2 * d.d_omega(g, d2t))))
        if not self._beta_zero:
            q1, qn = n["q_hat1"] ** 2, n["q_hat"] ** 2
            b2 = self._beta**2
            nt, nw = (lambda x: d.nabla_theta(g, x)), (lambda x: d.nabla_omega(g, x))
            out = out - ((b2 * inv_rho / 4) * (ht4 * d.d2_theta(g, nw(q1 * nw(d2t)))
                                                + hw4 * d.d2_omega(g, nw(q1 * nw(d2w)))))
            out = out - ((b2 * inv_eta / 4) * (hw4 * d.d2_omega(g, nt(qn * nt(d2w)))
                                                + ht4 * d.d2_theta(g, nt(qn * nt(d2t)))))
        if self.near_boundary == "drop_correction" and not g.periodic:
            out = self._drop_mask() * out
        return out

    def _drop_mask(self):
        g = self.g
        m = np.ones(g.work_shape)
        for j in (1, 2, g.N - 2, g.N - 1):
            m[:, g.p + j] = 0.0
        return m

    def block(self, kind, u):
        if kind not in BLOCK_KINDS:
            raise InvalidParams(f"unknown block {kind!r}; expected one of {BLOCK_KINDS}")
        return getattr(self, kind)(self.extend(u))

    def apply(self, u):
        """``(L + A + B + S - C) u`` on a work array or stencil."""
        u = self.extend(u)
        return self.L(u) + self.A(u) + self.B(u) + self.S(u) - self.C(u)

    def rhs(self, F):
        """``D C B A F`` for a work array ``F = R^2 rho0 f`` (ghosts included)."""
        return self.D_omega_theta(self.C_theta_omega(self.B_omega(self.A_theta(F))))

    def stencil(self) -> Stencil:
        return self.apply(Stencil.identity(self.g))


# -- functional front end ------------------------------------------------------------

def _work_in(u, grid):
    if isinstance(u, GridFunction):
        return u.work()
    u = np.asarray(u, dtype=float)
    return grid.to_work(u) if u.shape == grid.shape else u


def _node_out(grid, work):
    return GridFunction(grid.from_work(work), grid)


def apply_compact(kind, v, coeffs: CoefficientFields, **opts) -> GridFunction:
    """Apply one of ``COMPACT_KINDS`` to node data."""
    sch = Scheme(coeffs, **opts)
    return _node_out(coeffs.grid, sch.compact(kind, _work_in(v, coeffs.grid)))


def apply_block(kind, u, coeffs: CoefficientFields, **opts) -> GridFunction:
    """Apply one scheme block (``"L"``, ``"A"``, ``"B"``, ``"C"``, ``"S"``)."""
    sch = Scheme(coeffs, **opts)
    return _node_out(coeffs.grid, sch.block(kind, _work_in(u, coeffs.grid)))


def scheme_apply(u, coeffs: CoefficientFields, **opts) -> GridFunction:
    """``(L + A + B + S - C) u`` at all nodes; only interior rows are equations."""
    sch = Scheme(coeffs, **opts)
    return _node_out(coeffs.grid, sch.apply(_work_in(u, coeffs.grid)))


def scaled_source_work(coeffs: CoefficientFields, f_work, rhs_ghost="analytic"):
    """``R^2 rho0 f`` on the work layout, with the requested ghost treatment."""
    if rhs_ghost not in RHS_GHOSTS:
        raise InvalidParams(f"rhs_ghost must be one of {RHS_GHOSTS}")
    g = coeffs.grid
    F = coeffs.node["R"] ** 2 * coeffs.node["rho0"] * np.asarray(f_work, dtype=float)
    if rhs_ghost == "zero" and not g.periodic:
        F = F.copy()
        F[:, :g.p] = 0.0
        F[:, g.p + g.N + 1:] = 0.0
    return F


def build_rhs(f, coeffs: CoefficientFields, rhs_ghost="analytic", **opts) -> GridFunction:
    """``g = D_wt C_tw B_w A_t (R^2 rho0 f)``.

    ``f`` is a work array (values at ghost columns used as given), a node
    array (ghosts zero), or a callable ``f(theta, omega)`` sampled on the
    whole work layout.
    """
    g = coeffs.grid
    if callable(f):
        T, W = g.work_coords("node")
        f_work = np.asarray(f(T, W), dtype=float) * np.ones(g.work_shape)
    else:
        f_work = _work_in(f, g)
    sch = Scheme(coeffs, **opts)
    return _node_out(g, sch.rhs(scaled_source_work(coeffs, f_work, rhs_ghost)))
