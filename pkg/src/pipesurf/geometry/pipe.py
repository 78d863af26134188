"""Pipe coordinate map, metric tensors and geometric validity checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams, NonPositiveJacobian
from .curves import Centerline, frenet_frame
from .sections import CrossSection

BOUNDARY_MODES = ("dirichlet_omega", "periodic_omega")


@dataclass(frozen=True, eq=False)
class PipeGeometry:
    """A centerline swept by a cross-section.

    The omega interval is the centerline's domain.  ``periodic_omega`` is
    only allowed for curves declared closed.
    """

    centerline: Centerline
    cross_section: CrossSection
    boundary_mode: str = "dirichlet_omega"

    def __post_init__(self):
        if self.boundary_mode not in BOUNDARY_MODES:
            raise InvalidParams(f"boundary_mode must be one of {BOUNDARY_MODES}")
        if self.boundary_mode == "periodic_omega" and not self.centerline.closed:
            raise InvalidParams(f"periodic_omega needs a closed centerline, got {self.centerline.kind}")

    @property
    def periodic(self) -> bool:
        return self.boundary_mode == "periodic_omega"

    @property
    def omega_range(self) -> tuple[float, float]:
        return self.centerline.domain


def surface_point(pipe: PipeGeometry, r, theta, omega) -> np.ndarray:
    """Cartesian point ``r_c(omega) + r*R*(cos(theta) e2 + sin(theta) e3)``.

    Examples
    --------
    >>> from pipesurf.geometry import catalog_centerline, catalog_cross_section
    >>> torus = PipeGeometry(catalog_centerline("circle", a=2.0),
    ...                      catalog_cross_section("circular", R0=0.5))
    >>> surface_point(torus, 1.0, 0.0, 0.0).round(12)
    array([1.5, 0. , 0. ])
    """
    r, theta, omega = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, theta, omega)))
    fr = frenet_frame(pipe.centerline, omega)
    rR = r * pipe.cross_section(theta, omega)
    radial = np.cos(theta)[..., None] * fr.e2 + np.sin(theta)[..., None] * fr.e3
    return pipe.centerline.position(omega) + np.asarray(rR)[..., None] * radial


@dataclass(frozen=True)
class MetricData:
    """Jacobian matrix, its determinant and both metric tensors.

    Arrays carry the sample shape in front: ``jacobian_matrix`` is
    ``S + (3, 3)`` with columns ``dx/dr``, ``dx/dtheta``, ``dx/domega``.
    """

    jacobian_matrix: np.ndarray
    jacobian_det: np.ndarray
    covariant: np.ndarray
    contravariant: np.ndarray
    rho: np.ndarray


def metric_tensors(pipe: PipeGeometry, r, theta, omega, check=True) -> MetricData:
    """Closed-form metric data of the pipe map at ``(r, theta, omega)``.

    Raises
    ------
    NonPositiveJacobian
        If the determinant is not positive at some sample (when ``check``).
    """
    r, theta, omega = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r, theta, omega)))
    cs = pipe.cross_section
    fr = frenet_frame(pipe.centerline, omega)
    s, kap, tau = fr.speed, fr.kappa, fr.tau
    R = np.asarray(cs(theta, omega))
    Rt = np.asarray(cs.Rt(theta, omega))
    Rw = np.asarray(cs.Rw(theta, omega))
    c, sn = np.cos(theta), np.sin(theta)
    ts = tau * s
    rho = s * (1.0 - r * kap * R * c)

    # columns in the moving frame, then rotated to Cartesian axes
    col_r = np.stack([np.zeros_like(R), R * c, R * sn], axis=-1)
    col_t = np.stack([np.zeros_like(R), r * (Rt * c - R * sn), r * (Rt * sn + R * c)], axis=-1)
    col_w = np.stack([rho, r * (Rw * c - R * ts * sn), r * (Rw * sn + R * ts * c)], axis=-1)
    E = np.stack([fr.e1, fr.e2, fr.e3], axis=-1)          # frame vectors as columns
    J_tnb = np.stack([col_r, col_t, col_w], axis=-1)
    J = E @ J_tnb

    det = r * R**2 * rho
    if check and np.any(det <= 0):
        raise NonPositiveJacobian(f"Jacobian min {float(np.min(det)):.3e} <= 0")

    r2 = r * r
    Rtil = R**2 + Rt**2
    Rhat = Rw - ts * Rt
    G = np.empty(R.shape + (3, 3))
    G[..., 0, 0] = R**2
    G[..., 1, 1] = r2 * Rtil
    G[..., 2, 2] = rho**2 + r2 * ts**2 * R**2 + r2 * Rw**2
    G[..., 0, 1] = G[..., 1, 0] = r * R * Rt
    G[..., 0, 2] = G[..., 2, 0] = r * R * Rw
    G[..., 1, 2] = G[..., 2, 1] = r2 * ts * R**2 + r2 * Rt * Rw

    Gi = np.empty_like(G)
    rho2 = rho**2
    Gi[..., 0, 0] = Rtil / R**4 + r2 * Rhat**2 / (rho2 * R**2)
    Gi[..., 1, 1] = 1.0 / (r2 * R**2) + ts**2 / rho2
    Gi[..., 2, 2] = 1.0 / rho2
    Gi[..., 0, 1] = Gi[..., 1, 0] = -Rt / (r * R**3) + r * ts * Rhat / (rho2 * R)
    Gi[..., 0, 2] = Gi[..., 2, 0] = -r * Rhat / (rho2 * R)
    Gi[..., 1, 2] = Gi[..., 2, 1] = -ts / rho2
    return MetricData(J, det, G, Gi, rho)


# -- validity ------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    detail: str = ""


@dataclass
class ValidityReport:
    """Outcome of the sampled validity checks; advisory only."""

    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            lines.append(f"{flag}  {c.name:<20} value={c.value:.6g} bound={c.bound:.6g}  {c.detail}")
        lines.append("validity: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def validate_geometry(pipe: PipeGeometry, n_theta: int = 1024, n_omega: int = 1024) -> ValidityReport:
    """Scan the sufficient validity conditions on a sample lattice.

    Checks Jacobian positivity at ``r = 1`` and ``r = 1/2``, the
    cross-section bound ``kappa*R*cos(theta) < 1`` (i.e. ``R < sec(theta)/kappa``
    where ``cos(theta) > 0``) and, for cylindrical helices, the pitch
    (collision avoidance) inequality.
    """
    if n_theta < 64 or n_omega < 64:
        raise InvalidParams("validity scan needs at least 64 samples per direction")
    lo, hi = pipe.omega_range
    theta = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
    omega = np.linspace(lo, hi, n_omega, endpoint=not pipe.periodic)
    fr = frenet_frame(pipe.centerline, omega)
    T, W = np.meshgrid(theta, omega, indexing="ij")
    R = np.asarray(pipe.cross_section(T, W))
    kRc = fr.kappa[None, :] * R * np.cos(T)
    report = ValidityReport()

    for r in (1.0, 0.5):
        det = r * R**2 * fr.speed[None, :] * (1.0 - r * kRc)
        k = np.unravel_index(np.argmin(det), det.shape)
        report.checks.append(CheckResult(
            f"jacobian_r={r:g}", bool(det[k] > 0), float(det[k]), 0.0,
            f"min at theta={theta[k[0]]:.4f}, omega={omega[k[1]]:.4f}"))
    report.checks.append(CheckResult(
        "min_radius", bool(R.min() > 0), float(R.min()), 0.0, "R > 0"))

    k = np.unravel_index(np.argmax(kRc), kRc.shape)
    kappa_k = float(fr.kappa[k[1]])
    sec_bound = (1.0 / (kappa_k * math.cos(theta[k[0]]))
                 if kappa_k * math.cos(theta[k[0]]) > 0 else math.inf)
    report.checks.append(CheckResult(
        "section_bound", bool(kRc[k] < 1.0), float(R[k]), sec_bound,
        f"need R < sec(theta)/kappa = {sec_bound:.6g} (R < a = 1/kappa at theta=0); "
        f"worst at theta={theta[k[0]]:.4f}, omega={omega[k[1]]:.4f}"))

    cl = pipe.centerline
    if cl.kind == "cylindrical-helix":
        a, b = cl.params["a"], cl.params["b"]
        shift = 2 * math.pi * a * a / (a * a + b * b)
        pitch = 2 * math.pi * a * abs(b) / math.hypot(a, b)
        pair = R + np.asarray(pipe.cross_section(T, W - shift))
        worst = float(pair.max())
        report.checks.append(CheckResult(
            "pitch", worst < pitch, worst, pitch, f"margin {pitch - worst:.6g}"))
    return report
