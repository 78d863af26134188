"""Cross-section profiles R(theta, omega) and their catalog."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParams, UnknownKind
from ..expr import Expr


@dataclass(frozen=True, eq=False)
class CrossSection:
    """Radius profile of the pipe, 2*pi-periodic in theta.

    The profile is an :class:`Expr`; all partial derivatives are exact.
    ``R_tilde`` and ``R_hat`` are the combinations entering the metric.
    """

    R: Expr
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text, kind="custom", params=None):
        return cls(Expr(text), kind, dict(params or {}))

    def __call__(self, theta, omega):
        return self.R(theta, omega)

    def partial(self, which: str):
        """Partial derivative by a string of ``t``/``w`` letters, e.g. ``"tw"``."""
        ex = self.R
        for ch in which:
            ex = ex.d({"t": "theta", "w": "omega"}[ch])
        return ex

    def derivative(self, which: str, theta, omega):
        """Evaluate a partial derivative.

        At cusps of low-regularity profiles (``|x|^g`` with ``g < 1`` at
        ``x = 0``) the one-sided derivative is infinite; such non-finite
        values are replaced by 0, the symmetric (principal) value.
        """
        val = self.partial(which)(theta, omega)
        if np.ndim(val) == 0:
            return float(val) if np.isfinite(val) else 0.0
        return np.where(np.isfinite(val), val, 0.0)

    def Rt(self, theta, omega):
        return self.derivative("t", theta, omega)

    def Rw(self, theta, omega):
        return self.derivative("w", theta, omega)

    def Rtt(self, theta, omega):
        return self.derivative("tt", theta, omega)

    def Rww(self, theta, omega):
        return self.derivative("ww", theta, omega)

    def Rtw(self, theta, omega):
        return self.derivative("tw", theta, omega)

    def R_tilde(self, theta, omega):
        """``R^2 + R_theta^2``."""
        return self.R(theta, omega) ** 2 + self.Rt(theta, omega) ** 2

    def R_hat(self, theta, omega, beta):
        """``R_omega - beta*R_theta`` where ``beta = tau*|r_c'|``."""
        return self.Rw(theta, omega) - beta * self.Rt(theta, omega)

    @property
    def depends_on_omega(self) -> bool:
        return self.R.depends_on("omega")


SECTION_KINDS = ("circular", "cardioid", "butterfly", "star", "sine", "random", "superellipse")


def random_section_terms(K=10, sigma=12.0, seed=0, max_freq=None):
    """Amplitudes, integer frequencies and phases of the random profile.

    ``A_n = 1/(sigma*n)``; ``a_n`` and ``b_n`` are drawn uniformly from
    ``1..max_freq`` (default ``K``) and ``c_n`` from ``[0, 2*pi]``.
    """
    if K < 1 or sigma <= 0:
        raise InvalidParams("random section needs K >= 1 and sigma > 0")
    max_freq = int(max_freq or K)
    rng = np.random.default_rng(seed)
    n = np.arange(1, K + 1)
    A = 1.0 / (sigma * n)
    a = rng.integers(1, max_freq + 1, size=K)
    b = rng.integers(1, max_freq + 1, size=K)
    c = rng.uniform(0.0, 2 * math.pi, size=K)
    return A, a, b, c


def catalog_cross_section(kind: str, **params) -> CrossSection:
    """Tabulated cross-section.

    Examples
    --------
    >>> round(catalog_cross_section("star")(np.pi / 10, 0.0), 12)
    0.675
    """
    if kind == "circular":
        R0 = float(params.get("R0", 0.5))
        if R0 <= 0:
            raise InvalidParams(f"R0 must be positive, got {R0}")
        return CrossSection(Expr(R0), kind, {"R0": R0})
    if kind == "cardioid":
        return CrossSection.from_text("2/5 - 1/3*sin(theta)", kind)
    if kind == "butterfly":
        # |sin(theta/2)|^5 equals sin^5(theta/2) on [0, 2*pi) and is periodic
        return CrossSection.from_text(
            "1/5*exp(cos(theta)) - 1/5*cos(4*theta) + 3/5*abs(sin(theta/2))^5", kind)
    if kind == "star":
        return CrossSection.from_text("3/5 + 3/40*sin(5*theta)", kind)
    if kind == "sine":
        A = float(params.get("A", 0.3))
        k = float(params.get("k", 8))
        if not abs(A) < 1:
            raise InvalidParams(f"sine section needs |A| < 1 for R > 0, got {A}")
        return CrossSection.from_text(f"1/2 + {A / 2!r}*sin({k!r}*omega)", kind, {"A": A, "k": k})
    if kind == "random":
        K = int(params.get("K", 10))
        sigma = float(params.get("sigma", 12.0))
        seed = int(params.get("seed", 0))
        max_freq = params.get("max_freq")
        A, a, b, c = random_section_terms(K, sigma, seed, max_freq)
        if np.sum(np.abs(A)) / 2 >= 0.5:
            raise InvalidParams("random section amplitudes too large for R > 0")
        terms = " + ".join(f"{float(A_n) / 2!r}*sin({int(a_n)}*theta + {int(b_n)}*omega + {float(c_n)!r})"
                           for A_n, a_n, b_n, c_n in zip(A, a, b, c))
        return CrossSection.from_text("1/2 + " + terms, kind,
                                      {"K": K, "sigma": sigma, "seed": seed,
                                       "max_freq": int(max_freq or K)})
    if kind == "superellipse":
        gamma = float(params.get("gamma", 4.0))
        if not gamma > 0:
            raise InvalidParams(f"superellipse exponent gamma must be positive, got {gamma}")
        return CrossSection.from_text(
            f"(abs(cos(theta))^{gamma!r} + abs(sin(theta))^{gamma!r})^({-1.0 / gamma!r})",
            kind, {"gamma": gamma})
    raise UnknownKind(f"unknown cross-section kind {kind!r}; expected one of {SECTION_KINDS}")
