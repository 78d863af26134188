"""Surface mesh export (Wavefront OBJ and legacy VTK)."""
from __future__ import annotations

import io
import math

import numpy as np

from ..errors import InvalidParams, IoFailure
from .pipe import PipeGeometry, surface_point


def mesh_nodes(pipe: PipeGeometry, M: int, N: int):
    """Parameter nodes of the export lattice.

    Returns ``theta`` (M values, seam welded) and ``omega`` (N values when
    periodic, else N + 1 including both ends).
    """
    lo, hi = pipe.omega_range
    theta = 2 * math.pi * np.arange(M) / M
    n_w = N if pipe.periodic else N + 1
    omega = lo + (hi - lo) * np.arange(n_w) / N
    return theta, omega


def _fmt(x: float) -> str:
    return repr(float(x))


def export_mesh(pipe: PipeGeometry, M: int, N: int, fmt: str = "obj", field=None,
                field_name: str = "u") -> bytes:
    """Serialize the surface ``r = 1`` sampled on an ``M x N`` lattice.

    OBJ output welds the theta seam and, for periodic pipes, the omega seam;
    faces are quads ordered so their normals point outward.  VTK output is a
    legacy ASCII STRUCTURED_GRID; structured grids cannot weld, so the seam
    rows are duplicated there.  ``field`` (shape ``(M, n_omega)``) is
    attached as point data in VTK and ignored by OBJ.
    """
    if M < 3 or N < 2:
        raise InvalidParams(f"mesh export needs M >= 3 and N >= 2, got M={M}, N={N}")
    theta, omega = mesh_nodes(pipe, M, N)
    T, W = np.meshgrid(theta, omega, indexing="ij")
    X = surface_point(pipe, 1.0, T, W)              # (M, n_w, 3)
    if fmt == "obj":
        return _obj(X, pipe.periodic)
    if fmt == "vtk":
        return _vtk(X, pipe.periodic, field, field_name)
    raise InvalidParams(f"unknown mesh format {fmt!r}")


def _obj(X, periodic) -> bytes:
    M, n_w = X.shape[:2]
    out = io.StringIO()
    out.write("# pipe surface\n")
    # vertex id = j*M + i (omega-major)
    for j in range(n_w):
        for i in range(M):
            x = X[i, j]
            out.write(f"v {_fmt(x[0])} {_fmt(x[1])} {_fmt(x[2])}\n")
    n_faces_w = n_w if periodic else n_w - 1
    for j in range(n_faces_w):
        j1 = (j + 1) % n_w
        for i in range(M):
            i1 = (i + 1) % M
            a, b, c, d = j * M + i, j * M + i1, j1 * M + i1, j1 * M + i
            out.write(f"f {a + 1} {b + 1} {c + 1} {d + 1}\n")
    return out.getvalue().encode()


def _vtk(X, periodic, field, field_name) -> bytes:
    M, n_w = X.shape[:2]
    idx_t = np.r_[np.arange(M), 0]
    idx_w = np.r_[np.arange(n_w), 0] if periodic else np.arange(n_w)
    P = X[idx_t][:, idx_w]
    nt, nw = P.shape[:2]
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\npipe surface\nASCII\nDATASET STRUCTURED_GRID\n")
    out.write(f"DIMENSIONS {nt} {nw} 1\nPOINTS {nt * nw} double\n")
    # VTK structured points run fastest along the first dimension
    for j in range(nw):
        for i in range(nt):
            x = P[i, j]
            out.write(f"{_fmt(x[0])} {_fmt(x[1])} {_fmt(x[2])}\n")
    if field is not None:
        F = np.asarray(field, dtype=float)
        if F.shape != (M, n_w):
            raise InvalidParams(f"field shape {F.shape} does not match mesh nodes {(M, n_w)}")
        F = F[idx_t][:, idx_w]
        out.write(f"POINT_DATA {nt * nw}\nSCALARS {field_name} double 1\nLOOKUP_TABLE default\n")
        for j in range(nw):
            for i in range(nt):
                out.write(_fmt(F[i, j]) + "\n")
    return out.getvalue().encode()


def write_bytes(path, data: bytes) -> None:
    """Write an artifact, mapping OS errors to :class:`IoFailure`."""
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
