"""Conversion of dimensionless times to laboratory units."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..model import SystemParams

__all__ = ["PhysicalTime", "CESIUM_RABI_MHZ", "CESIUM_DECAY_MHZ", "angular_mhz", "to_physical_units"]

# Omega_r / 2 pi and gamma / 2 pi for a 133Cs implementation
CESIUM_RABI_MHZ = 4.0
CESIUM_DECAY_MHZ = 0.007


def angular_mhz(f_mhz: float) -> float:
    """Angular frequency in rad/s for a frequency ``f / 2 pi`` in MHz."""
    return 2.0 * math.pi * f_mhz * 1e6


@dataclass(frozen=True)
class PhysicalTime:
    t_ms: float
    omega_r: float  # rad/s
    gamma_ratio: float  # gamma / Omega_r used in the simulation
    gamma: float  # rad/s implied by that ratio

    def __str__(self) -> str:
        return (
            f"t = {self.t_ms:.6g} ms at Omega_r/2pi = {self.omega_r / (2 * math.pi * 1e6):.6g} MHz "
            f"(gamma/Omega_r = {self.gamma_ratio:.6g}, gamma/2pi = {self.gamma / (2 * math.pi * 1e6):.6g} MHz)"
        )


def to_physical_units(t_dimensionless: float, p: SystemParams, omega_r_physical: float) -> PhysicalTime:
    """Convert ``Omega_r t`` to milliseconds for an angular Rabi frequency in rad/s."""
    if not omega_r_physical > 0:
        raise ValueError("the physical Rabi frequency must be positive")
    ratio = p.gamma / p.omega_r
    return PhysicalTime(1e3 * t_dimensionless / omega_r_physical, omega_r_physical, ratio, ratio * omega_r_physical)
