"""Uniform (theta, omega) grids, grid functions and difference operators.

All difference operators are written once in terms of :func:`shift` and
arithmetic, so they act both on numpy arrays (matrix-free application) and
on :class:`Stencil` objects (symbolic accumulation of a linear operator,
used for sparse assembly).

Storage
-------
Operators work on *work arrays* of shape ``(M, W)``.  Theta is periodic and
shifts wrap.  In periodic-omega mode ``W = N`` and omega wraps too.  In
Dirichlet mode the node columns ``j = 0..N`` are surrounded by ``pad``
ghost columns on each side (column ``c = j + pad``); shifting past the
array edge fills zeros.  Half-node values ``(i+1/2, j)`` and ``(i, j+1/2)``
are stored at the lower index ``(i, j)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParams, StaggeringMismatch

STAGGERINGS = ("node", "theta_half", "omega_half")
DEFAULT_PAD = 4


@dataclass(frozen=True)
class Grid:
    """Uniform lattice ``theta_i = i*h_theta``, ``omega_j = omega_l + j*h_omega``.

    Parameters
    ----------
    M, N : int
        Number of theta intervals (periodic) and omega intervals.
    omega_range : (float, float)
    periodic : bool
        Periodic in omega (nodes ``j = 0..N-1``) instead of Dirichlet
        (nodes ``j = 0..N`` with zero boundary values).
    pad : int
        Ghost columns per side in Dirichlet mode.
    """

    M: int
    N: int
    omega_range: tuple = (0.0, 2 * math.pi)
    periodic: bool = False
    pad: int = DEFAULT_PAD

    def __post_init__(self):
        if self.M < 3 or self.N < 2:
            raise InvalidParams(f"grid too small: M={self.M}, N={self.N}")
        if not self.omega_range[1] > self.omega_range[0]:
            raise InvalidParams("omega_range must be increasing")

    @classmethod
    def for_pipe(cls, pipe, M, N, pad=DEFAULT_PAD):
        return cls(int(M), int(N), tuple(pipe.omega_range), pipe.periodic, pad)

    # -- sizes --------------------------------------------------------------
    @property
    def h_theta(self) -> float:
        return 2 * math.pi / self.M

    @property
    def h_omega(self) -> float:
        return (self.omega_range[1] - self.omega_range[0]) / self.N

    @property
    def h(self) -> float:
        return max(self.h_theta, self.h_omega)

    @property
    def quasi_uniformity(self) -> float:
        return self.h / min(self.h_theta, self.h_omega)

    @property
    def n_omega_nodes(self) -> int:
        return self.N if self.periodic else self.N + 1

    @property
    def shape(self) -> tuple:
        """Shape of node arrays: ``(M, N+1)`` Dirichlet, ``(M, N)`` periodic."""
        return (self.M, self.n_omega_nodes)

    @property
    def p(self) -> int:
        """Ghost columns actually in use (0 when periodic)."""
        return 0 if self.periodic else self.pad

    @property
    def work_shape(self) -> tuple:
        return (self.M, self.n_omega_nodes + 2 * self.p)

    @property
    def theta(self) -> np.ndarray:
        return self.h_theta * np.arange(self.M)

    @property
    def omega(self) -> np.ndarray:
        return self.omega_range[0] + self.h_omega * np.arange(self.n_omega_nodes)

    def work_coords(self, staggering="node"):
        """``(theta, omega)`` 2-D coordinate arrays of the work layout."""
        if staggering not in STAGGERINGS:
            raise StaggeringMismatch(f"unknown staggering {staggering!r}")
        t = self.theta + (0.5 * self.h_theta if staggering == "theta_half" else 0.0)
        cols = np.arange(self.work_shape[1]) - self.p
        w = self.omega_range[0] + self.h_omega * (cols + (0.5 if staggering == "omega_half" else 0.0))
        return np.meshgrid(t, w, indexing="ij")

    # -- layout conversions -------------------------------------------------
    def to_work(self, values) -> np.ndarray:
        """Embed node values into a work array (ghost columns zero)."""
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise StaggeringMismatch(f"expected node array {self.shape}, got {values.shape}")
        if self.periodic:
            return values.copy()
        out = np.zeros(self.work_shape)
        out[:, self.p:self.p + self.n_omega_nodes] = values
        return out

    def from_work(self, work) -> np.ndarray:
        """Extract the node columns of a work array."""
        return np.asarray(work)[:, self.p:self.p + self.n_omega_nodes].copy()

    @property
    def interior(self) -> tuple:
        """Slice of unknown nodes inside a node array."""
        return (slice(None), slice(0, self.N) if self.periodic else slice(1, self.N))

    @property
    def interior_work(self) -> tuple:
        """Slice of unknown nodes inside a work array."""
        if self.periodic:
            return (slice(None), slice(0, self.N))
        return (slice(None), slice(self.p + 1, self.p + self.N))

    @property
    def n_unknowns(self) -> int:
        return self.M * (self.N if self.periodic else self.N - 1)

    def vector_to_work(self, x) -> np.ndarray:
        """Unknown vector (row-major over ``(i, j)``) to a work array."""
        out = np.zeros(self.work_shape)
        out[self.interior_work] = np.asarray(x, dtype=float).reshape(self.M, -1)
        return out

    def work_to_vector(self, work) -> np.ndarray:
        return np.asarray(work)[self.interior_work].reshape(-1).copy()

    # -- shifting ------------------------------------------------------------
    def shift(self, x, di=0, dj=0):
        """Value at ``(i+di, j+dj)`` stored at ``(i, j)``."""
        if isinstance(x, Stencil):
            return x.shifted(self, di, dj)
        return shift_array(x, di, dj, self.periodic)


def shift_array(x, di, dj, periodic):
    """Shift a work array; theta wraps, omega wraps or zero-fills."""
    y = np.roll(x, -di, axis=0) if di else x
    if not dj:
        return y if di else x.copy()
    if periodic:
        return np.roll(y, -dj, axis=1)
    out = np.zeros_like(y)
    if dj > 0:
        out[:, :-dj] = y[:, dj:]
    else:
        out[:, -dj:] = y[:, :dj]
    return out


# -- stencil algebra ------------------------------------------------------------

class Stencil:
    """Linear operator as ``{(di, dj): coefficient work array}``.

    ``(S u)(i, j) = sum_k S[k](i, j) * u(i + k_i, j + k_j)``.  Arithmetic
    with numbers and coefficient arrays (left multiplication) mirrors the
    action on grid functions, so operator code runs unchanged on both.
    """

    __array_ufunc__ = None     # keep numpy from broadcasting into the dict

    def __init__(self, terms=None):
        self.terms = dict(terms or {})

    @classmethod
    def identity(cls, grid: Grid):
        return cls({(0, 0): np.ones(grid.work_shape)})

    def shifted(self, grid, di, dj):
        return Stencil({(k[0] + di, k[1] + dj): shift_array(c, di, dj, grid.periodic)
                        for k, c in self.terms.items()})

    def _combine(self, other, sign):
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + sign * c if k in out else sign * c
        return Stencil(out)

    def __add__(self, other):
        if isinstance(other, Stencil):
            return self._combine(other, 1.0)
        if np.isscalar(other) and other == 0:
            return self
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Stencil):
            return self._combine(other, -1.0)
        return NotImplemented

    def __neg__(self):
        return Stencil({k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Stencil):
            raise TypeError("stencil products are not linear operators on u")
        return Stencil({k: c * other for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Stencil({k: c / other for k, c in self.terms.items()})

    @property
    def width(self) -> tuple:
        """Maximum |di| and |dj| over the stored offsets."""
        return (max(abs(k[0]) for k in self.terms), max(abs(k[1]) for k in self.terms))

    def apply(self, grid: Grid, u_work):
        out = np.zeros(grid.work_shape)
        for (di, dj), c in self.terms.items():
            out += c * grid.shift(u_work, di, dj)
        return out

    def to_csr(self, grid: Grid, rows_mask=None) -> sp.csr_matrix:
        """Sparse matrix acting on unknown vectors (zero boundary and ghosts)."""
        M = grid.M
        n_w = grid.N if grid.periodic else grid.N - 1
        j0 = 0 if grid.periodic else 1
        I, J = np.meshgrid(np.arange(M), np.arange(n_w), indexing="ij")
        row = (I * n_w + J).ravel()
        rows, cols, vals = [], [], []
        for (di, dj), c in self.terms.items():
            coef = c[grid.interior_work].ravel()
            ii = (I + di) % M
            jj = J + j0 + dj
            if grid.periodic:
                jj = jj % grid.N
                ok = np.ones(coef.shape, dtype=bool)
            else:
                ok = ((jj >= 1) & (jj <= grid.N - 1)).ravel()
            ok &= coef != 0.0
            col = (ii * n_w + (jj - j0)).ravel()
            rows.append(row[ok])
            cols.append(col[ok])
            vals.append(coef[ok])
        n = grid.n_unknowns
        A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        return A.tocsr()


# -- difference operators (generic over arrays and stencils) ------------------

def d_theta(g: Grid, u):
    """``delta_theta u`` at ``(i+1/2, j)``."""
    return (g.shift(u, 1, 0) - u) / g.h_theta


def d_omega(g: Grid, u):
    """``delta_omega u`` at ``(i, j+1/2)``."""
    return (g.shift(u, 0, 1) - u) / g.h_omega


def d_theta_back(g: Grid, v):
    """Node difference of theta-half data: ``(v_{i+1/2} - v_{i-1/2}) / h_theta``."""
    return (v - g.shift(v, -1, 0)) / g.h_theta


def d_omega_back(g: Grid, v):
    """Node difference of omega-half data."""
    return (v - g.shift(v, 0, -1)) / g.h_omega


def nabla_theta(g: Grid, u):
    return (g.shift(u, 1, 0) - g.shift(u, -1, 0)) / (2 * g.h_theta)


def nabla_omega(g: Grid, u):
    return (g.shift(u, 0, 1) - g.shift(u, 0, -1)) / (2 * g.h_omega)


def d2_theta(g: Grid, u):
    return (g.shift(u, 1, 0) - 2 * u + g.shift(u, -1, 0)) / g.h_theta**2


def d2_omega(g: Grid, u):
    return (g.shift(u, 0, 1) - 2 * u + g.shift(u, 0, -1)) / g.h_omega**2


def d2_omega_theta(g: Grid, u):
    return nabla_omega(g, nabla_theta(g, u))


def div_theta(g: Grid, phi_half, u):
    """``delta_theta(phi delta_theta u)`` with ``phi`` on theta-half nodes."""
    return d_theta_back(g, phi_half * d_theta(g, u))


def div_omega(g: Grid, phi_half, u):
    """``delta_omega(phi delta_omega u)`` with ``phi`` on omega-half nodes."""
    return d_omega_back(g, phi_half * d_omega(g, u))


_DIFF = {
    "d_theta": (d_theta, "theta_half"),
    "d_omega": (d_omega, "omega_half"),
    "nabla_theta": (nabla_theta, "node"),
    "nabla_omega": (nabla_omega, "node"),
    "d2_theta": (d2_theta, "node"),
    "d2_omega": (d2_omega, "node"),
    "d2_omega_theta": (d2_omega_theta, "node"),
}
DIFF_KINDS = tuple(_DIFF)


# -- grid functions ---------------------------------------------------------------

@dataclass
class GridFunction:
    """Values on a grid at one staggering.

    Node and theta-half data have shape ``grid.shape``; omega-half data has
    ``N`` columns (``j + 1/2`` for ``j = 0..N-1``) in both modes.
    """

    values: np.ndarray
    grid: Grid
    staggering: str = "node"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.staggering not in STAGGERINGS:
            raise StaggeringMismatch(f"unknown staggering {self.staggering!r}")
        want = staggered_shape(self.grid, self.staggering)
        if self.values.shape != want:
            raise StaggeringMismatch(f"{self.staggering} data needs shape {want}, got {self.values.shape}")

    @classmethod
    def from_function(cls, grid: Grid, fn, staggering="node"):
        T, W = grid.work_coords(staggering)
        work = np.asarray(fn(T, W), dtype=float) * np.ones(grid.work_shape)
        return cls(_cut(grid, work, staggering), grid, staggering)

    def work(self) -> np.ndarray:
        """Node data as a work array (zero ghosts)."""
        if self.staggering != "node":
            raise StaggeringMismatch("only node data embeds into work arrays")
        return self.grid.to_work(self.values)

    def satisfies_boundary(self, tol=0.0) -> bool:
        if self.grid.periodic:
            return True
        return bool(np.all(np.abs(self.values[:, [0, -1]]) <= tol))

    def __add__(self, other):
        _check_same(self, other)
        return GridFunction(self.values + other.values, self.grid, self.staggering)

    def __sub__(self, other):
        _check_same(self, other)
        return GridFunction(self.values - other.values, self.grid, self.staggering)

    def __mul__(self, a):
        return GridFunction(self.values * a, self.grid, self.staggering)

    __rmul__ = __mul__

    def to_csv(self) -> str:
        """Rows ``i, j, theta, omega, value`` (omega-major order)."""
        T, W = self.grid.work_coords(self.staggering)
        T, W = _cut(self.grid, T, self.staggering), _cut(self.grid, W, self.staggering)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["i", "j", "theta", "omega", "value"])
        M, n = self.values.shape
        for j in range(n):
            for i in range(M):
                wr.writerow([i, j, repr(float(T[i, j])), repr(float(W[i, j])),
                             repr(float(self.values[i, j]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, grid: Grid, staggering="node"):
        vals = np.zeros(staggered_shape(grid, staggering))
        rows = csv.DictReader(io.StringIO(text))
        for r in rows:
            vals[int(r["i"]), int(r["j"])] = float(r["value"])
        return cls(vals, grid, staggering)


def staggered_shape(grid: Grid, staggering: str) -> tuple:
    if staggering == "omega_half":
        return (grid.M, grid.N)
    return grid.shape


def _cut(grid: Grid, work, staggering):
    p = grid.p
    n = grid.N if staggering == "omega_half" else grid.n_omega_nodes
    return np.asarray(work)[:, p:p + n].copy()


def _check_same(a, b):
    if a.staggering != b.staggering:
        raise StaggeringMismatch(f"{a.staggering} vs {b.staggering}")
    if a.grid != b.grid:
        raise StaggeringMismatch("grid functions live on different grids")


def diff(kind: str, u: GridFunction) -> GridFunction:
    """Apply one of ``DIFF_KINDS`` to node data.

    Omega neighbors outside the node range are zero (ghost policy).
    """
    if kind not in _DIFF:
        raise InvalidParams(f"unknown difference kind {kind!r}; expected one of {DIFF_KINDS}")
    if u.staggering != "node":
        raise StaggeringMismatch("difference operators take node data")
    fn, out_stag = _DIFF[kind]
    g = u.grid
    return GridFunction(_cut(g, fn(g, u.work()), out_stag), g, out_stag)


# -- inner products and norms ------------------------------------------------------

def _sum_range(grid: Grid, staggering: str) -> slice:
    if grid.periodic or staggering == "omega_half":
        return slice(0, grid.N)
    return slice(1, grid.N)


def inner(u, v, weight=1.0, staggering=None) -> float:
    """Weighted discrete inner product.

    Sums over ``i = 0..M-1`` and ``j = 1..N-1`` for node and theta-half
    data, ``j = 0..N-1`` for omega-half data (all ``j`` when periodic).
    ``u`` and ``v`` are :class:`GridFunction` objects or plain arrays (then
    ``staggering`` and ``weight`` must be given consistently and the grid is
    taken from ``weight`` if it is a GridFunction).
    """
    grid = None
    stags = set()
    for x in (u, v, weight):
        if isinstance(x, GridFunction):
            stags.add(x.staggering)
            if grid is not None and x.grid != grid:
                raise StaggeringMismatch("inner product of data on different grids")
            grid = x.grid
    if staggering is not None:
        stags.add(staggering)
    if len(stags) > 1:
        raise StaggeringMismatch(f"mixed staggerings {sorted(stags)}")
    if grid is None:
        raise InvalidParams("inner needs at least one GridFunction to know the grid")
    stag = stags.pop()
    vals = [x.values if isinstance(x, GridFunction) else x for x in (u, v, weight)]
    sl = _sum_range(grid, stag)
    prod = vals[0][:, sl] * vals[1][:, sl]
    w = vals[2]
    if np.ndim(w):
        prod = prod * np.asarray(w)[:, sl]
    else:
        prod = prod * w
    # pairwise (numpy) summation for reproducibility
    return float(grid.h_theta * grid.h_omega * np.sum(prod))


def norm(u: GridFunction, weight=1.0) -> float:
    return math.sqrt(inner(u, u, weight))


def norm_h1(u: GridFunction, weight=1.0, weight_theta=None, weight_omega=None) -> float:
    """Weighted discrete H1 norm ``sqrt(|u|^2 + |d_theta u|^2 + |d_omega u|^2)``.

    ``weight`` is a node field or scalar; staggered weights default to it
    when it is a scalar.
    """
    wt = weight if weight_theta is None else weight_theta
    ww = weight if weight_omega is None else weight_omega
    if np.ndim(getattr(wt, "values", wt)) and weight_theta is None:
        raise InvalidParams("pass staggered weights explicitly for non-constant weights")
    dt = diff("d_theta", u)
    dw = diff("d_omega", u)
    total = inner(u, u, weight) + inner(dt, dt, wt) + inner(dw, dw, ww)
    return math.sqrt(total)
