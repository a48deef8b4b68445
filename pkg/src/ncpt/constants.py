"""CODATA constants and unit conversions used throughout the package.

Internal convention: SI for everything except level energies and widths,
which are carried in eV and converted where rates or wave numbers are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar  # J s
    c: float = _sc.c  # m / s
    eps0: float = _sc.epsilon_0  # F / m
    e: float = _sc.e  # C
    mu_N: float = _sc.physical_constants["nuclear magneton"][0]  # J / T


CONST = PhysicalConstants()

EV = _sc.e  # J per eV
KEV = 1e3 * EV
FM = 1e-15  # m
W_PER_CM2 = 1e4  # W/m^2 per W/cm^2

HBAR_EV_S = CONST.hbar / EV  # eV s
HBAR_C_EV_M = CONST.hbar * CONST.c / EV  # eV m


def width_to_rate(width_ev: float) -> float:
    """Convert an energy width in eV to a decay rate in 1/s."""
    return width_ev / HBAR_EV_S


def energy_to_omega(energy_ev: float) -> float:
    """Angular frequency (rad/s) of a photon or transition of given energy."""
    return energy_ev / HBAR_EV_S
