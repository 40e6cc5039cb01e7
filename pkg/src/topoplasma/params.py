"""Parameter records for the magnetized cold-plasma wave model.

The bulk model is controlled by the triple (Omega, omega_p, k_z): cyclotron
frequency (signed), plasma frequency (>= 0) and the fixed out-of-plane
wavenumber, all in units with c = 1.  A high-wavenumber regularization may
additionally damp Omega or omega_p as functions of the in-plane wavenumber
k = |k_perp|; the damping controls the limit

    sigma_bar = lim_{k->inf} |Omega(k)| / omega_p(k),

which decides whether band projectors of two phases can be glued at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter

__all__ = ["RegularizationScheme", "PlasmaParams", "WaveVector"]


@dataclass(frozen=True)
class RegularizationScheme:
    """High-wavenumber damping of the constitutive coefficients.

    kind:
        "none"         -- constant coefficients; sigma_bar = |Omega|/omega_p
        "omega-decay"  -- Omega(k) = Omega(0) / sqrt(1 + eta k^2); sigma_bar = 0
        "plasma-decay" -- omega_p(k) = omega_p(0) / sqrt(1 + eta k^2);
                          sigma_bar = +inf for Omega != 0
    """

    kind: str = "none"
    eta: float = 0.0

    _KINDS = ("none", "omega-decay", "plasma-decay")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidParameter(f"unknown regularization kind {self.kind!r}")
        if self.kind != "none" and not (self.eta > 0 and math.isfinite(self.eta)):
            raise InvalidParameter("regularization eta must be positive and finite")

    def damping(self, k):
        """Factor (1 + eta k^2)^(-1/2) applied to the decaying coefficient."""
        k = np.asarray(k, dtype=float)
        if self.kind == "none":
            return np.ones_like(k)
        return 1.0 / np.sqrt(1.0 + self.eta * k * k)

    def coefficients(self, omega_c: float, omega_p: float, k):
        """(Omega(k), omega_p(k)) for in-plane wavenumber magnitude(s) k."""
        d = self.damping(k)
        if self.kind == "omega-decay":
            return omega_c * d, omega_p * np.ones_like(d)
        if self.kind == "plasma-decay":
            return omega_c * np.ones_like(d), omega_p * d
        return omega_c * np.ones_like(d), omega_p * np.ones_like(d)

    def sigma_bar(self, omega_c: float, omega_p: float) -> float:
        """lim_{k->inf} |Omega(k)|/omega_p(k) for constant base coefficients."""
        if self.kind == "omega-decay":
            return 0.0
        if self.kind == "plasma-decay":
            return math.inf if omega_c != 0.0 else 0.0
        if omega_p == 0.0:
            return math.inf if omega_c != 0.0 else 0.0
        return abs(omega_c) / omega_p


@dataclass(frozen=True)
class PlasmaParams:
    """Physical knob set: (Omega, omega_p, k_z) plus regularization."""

    omega_c: float
    omega_p: float
    k_z: float
    reg: RegularizationScheme = field(default_factory=RegularizationScheme)

    def __post_init__(self):
        for name in ("omega_c", "omega_p", "k_z"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise InvalidParameter(f"{name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise InvalidParameter(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if self.omega_p < 0:
            raise InvalidParameter("omega_p must be >= 0")

    @property
    def sigma_bar(self) -> float:
        return self.reg.sigma_bar(self.omega_c, self.omega_p)

    def coefficients_at(self, k):
        """Regularized (Omega(k), omega_p(k)) at in-plane |k_perp| = k."""
        return self.reg.coefficients(self.omega_c, self.omega_p, k)

    def with_(self, **kw) -> "PlasmaParams":
        data = {
            "omega_c": self.omega_c,
            "omega_p": self.omega_p,
            "k_z": self.k_z,
            "reg": self.reg,
        }
        data.update(kw)
        return PlasmaParams(**data)


@dataclass(frozen=True)
class WaveVector:
    """In-plane wavevector in polar form; k_z is carried by PlasmaParams."""

    k: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.k) and math.isfinite(self.theta)):
            raise InvalidParameter("wavevector components must be finite")
        if self.k < 0:
            raise InvalidParameter("k = |k_perp| must be >= 0")

    @property
    def k_x(self) -> float:
        return self.k * math.cos(self.theta)

    @property
    def k_y(self) -> float:
        return self.k * math.sin(self.theta)

    def k3(self, k_z: float) -> np.ndarray:
        """Full 3-vector (k_x, k_y, k_z)."""
        return np.array([self.k_x, self.k_y, k_z])
