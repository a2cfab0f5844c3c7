"""Nuclear charge models: point charge and normalized Gaussian distribution.

The Gaussian model replaces -Z/r by the finite potential -Z*erf(sqrt(eta)*r)/r,
with eta fixed by the root-mean-square charge radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "NucleusModel",
    "point_nucleus",
    "gaussian_nucleus",
    "rms_radius_bohr",
    "eta_from_rms",
    "potential_at",
    "potential_origin_limit",
]

BOHR_IN_FM = 52917.7249  # 1 bohr expressed in femtometers


@dataclass(frozen=True)
class NucleusModel:
    """Immutable nuclear model: variant 'point' or 'gaussian' (then eta > 0)."""

    variant: str
    Z: float
    eta: float | None = None

    def __post_init__(self):
        if self.variant not in ("point", "gaussian"):
            raise ValueError(f"unknown nucleus variant {self.variant!r}")
        if self.Z <= 0:
            raise ValueError("nuclear charge Z must be positive")
        if self.variant == "gaussian":
            if self.eta is None or self.eta <= 0:
                raise ValueError("gaussian nucleus requires eta > 0")
        elif self.eta is not None:
            raise ValueError("point nucleus carries no eta")

    @property
    def is_point(self) -> bool:
        return self.variant == "point"


def point_nucleus(Z: float) -> NucleusModel:
    return NucleusModel("point", Z)


def gaussian_nucleus(Z: float, eta: float) -> NucleusModel:
    return NucleusModel("gaussian", Z, eta)


def rms_radius_bohr(mass_number: float) -> float:
    """Empirical RMS charge radius 0.836*A^(1/3) + 0.570 fm, in bohr."""
    if mass_number < 1:
        raise ValueError("mass number must be >= 1")
    rms_fm = 0.836 * mass_number ** (1.0 / 3.0) + 0.570
    return rms_fm / BOHR_IN_FM


def eta_from_rms(rms: float) -> float:
    """Gaussian exponent eta = 3/(2<r^2>) reproducing the given RMS radius (bohr)."""
    if rms <= 0:
        raise ValueError("rms radius must be positive")
    return 1.5 / (rms * rms)


def potential_at(model: NucleusModel, r) -> float:
    """Electron-nucleus potential at r > 0 (hartree, r in bohr).

    Accepts scalars or numpy arrays for r.
    """
    import numpy as np

    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("potential_at requires r > 0; the origin limit is separate")
    if model.is_point:
        out = -model.Z / r_arr
    else:
        from scipy.special import erf

        out = -model.Z * erf(np.sqrt(model.eta) * r_arr) / r_arr
    return float(out) if np.isscalar(r) or out.ndim == 0 else out


def potential_origin_limit(model: NucleusModel) -> float:
    """r -> 0 limit of the potential: -inf for point, finite for gaussian."""
    if model.is_point:
        return -math.inf
    return -2.0 * model.Z * math.sqrt(model.eta / math.pi)
