"""Relativistic resonance kinematics for nuclei moving against x-ray beams.

The pump always meets the nuclei head-on (theta = 0); the Stokes beam either
copropagates with it (different lab photon energy) or crosses it at an angle
theta_S with the same photon energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from .constants import HBAR_C_EV_M, HBAR_EV_S

GEOMETRIES = ("copro", "crossed")


class KinematicsError(ValueError):
    """Resonance condition has no physical solution."""


@dataclass(frozen=True)
class LaserPulse:
    """Lab-frame description of one Gaussian x-ray pulse.

    Energies in eV, intensity in W/m^2, times in s.  ``tau`` is the envelope
    peak time in the nuclear rest frame.
    """

    E_photon: float
    I_peak: float
    T: float
    bandwidth: float
    theta: float = 0.0
    tau: float = 0.0

    def __post_init__(self) -> None:
        if not (self.E_photon > 0 and self.I_peak >= 0 and self.T > 0 and self.bandwidth > 0):
            raise KinematicsError(f"invalid pulse parameters: {self}")
        if not 0.0 <= self.theta <= math.pi:
            raise KinematicsError(f"beam angle {self.theta} outside [0, pi]")

    def replace(self, **changes) -> "LaserPulse":
        return replace(self, **changes)


@dataclass(frozen=True)
class LaserProfile:
    """Facility defaults: pump photon energy, duration and bandwidth."""

    name: str
    E_photon: float  # eV
    T: float  # s
    bandwidth: float  # eV


LASERS = {
    "sxfel": LaserProfile("sxfel", E_photon=12.4e3, T=0.1e-12, bandwidth=10e-3),
    "xfelo": LaserProfile("xfelo", E_photon=25e3, T=1e-12, bandwidth=1e-3),
}


def beta_of(gamma: float) -> float:
    if gamma < 1:
        raise KinematicsError(f"gamma must be >= 1, got {gamma}")
    # (g-1)(g+1) avoids the cancellation in 1 - 1/g^2 near g = 1
    return math.sqrt((gamma - 1.0) * (gamma + 1.0)) / gamma


def one_minus_beta(gamma: float) -> float:
    """1 - beta without cancellation at large gamma."""
    return 1.0 / (gamma * gamma * (1.0 + beta_of(gamma)))


@dataclass(frozen=True)
class FrameParams:
    gamma: float
    beta: float
    D_pump: float
    D_stokes: float

    @classmethod
    def from_gamma(cls, gamma: float, theta_stokes: float = 0.0) -> "FrameParams":
        return cls(gamma, beta_of(gamma), doppler_factor(gamma, 0.0), doppler_factor(gamma, theta_stokes))


def doppler_factor(gamma: float, theta: float) -> float:
    """D = gamma (1 + beta cos theta): lab to rest-frame photon energy boost."""
    return gamma * (1.0 + beta_of(gamma) * math.cos(theta))


def solve_gamma(E_transition: float, E_photon: float) -> float:
    """Lorentz factor making a head-on photon resonant: gamma (1 + beta) = x."""
    x = E_transition / E_photon
    if not x > 1:
        raise KinematicsError(
            f"transition energy {E_transition} must exceed photon energy {E_photon} for a forward boost"
        )
    return (x * x + 1.0) / (2.0 * x)


def solve_stokes_angle(E32: float, E_photon: float, gamma: float) -> float:
    """Crossing angle that makes a same-colour Stokes beam resonant with E32."""
    beta = beta_of(gamma)
    f = E32 / (E_photon * gamma)
    if beta == 0.0:
        if abs(f - 1.0) > 1e-12:
            raise KinematicsError("stationary nucleus: only E32 == E_photon is reachable")
        return 0.0
    c = (f - 1.0) / beta
    # resolve roundoff at the copropagating end (E32 == E31)
    if 1.0 < c <= 1.0 + 1e-12:
        c = 1.0
    if not -1.0 <= c <= 1.0:
        raise KinematicsError(
            f"Stokes resonance unreachable: required factor {f:.6g} outside "
            f"[{1 - beta:.6g}, {1 + beta:.6g}]"
        )
    return math.acos(c)


def solve_stokes_energy(E32: float, gamma: float) -> float:
    """Lab Stokes photon energy for a copropagating (theta = 0) beam."""
    return E32 / (gamma * (1.0 + beta_of(gamma)))


def detuning(pulse: LaserPulse, gamma: float, k_transition: float) -> float:
    """Rest-frame angular-frequency detuning D*omega - c*k (rad/s)."""
    D = doppler_factor(gamma, pulse.theta)
    return (D * pulse.E_photon - k_transition * HBAR_C_EV_M) / HBAR_EV_S


class RestFramePulse(NamedTuple):
    omega: float  # rad/s
    bandwidth: float  # eV
    T: float  # s
    I_peak: float  # W/m^2
    D: float


def to_rest_frame(pulse: LaserPulse, gamma: float) -> RestFramePulse:
    D = doppler_factor(gamma, pulse.theta)
    return RestFramePulse(
        omega=D * pulse.E_photon / HBAR_EV_S,
        bandwidth=D * pulse.bandwidth,
        T=pulse.T / D,
        I_peak=D * D * pulse.I_peak,
        D=D,
    )


class Plan(NamedTuple):
    """Resonant beam setup for one nucleus, laser and geometry."""

    geometry: str
    E_pump: float  # eV
    E_stokes: float  # eV, lab
    gamma: float
    theta_S: float
    frame: FrameParams


def plan(E31: float, E32: float, E_pump: float, geometry: str) -> Plan:
    """Solve the two resonance conditions for a given geometry."""
    gamma = solve_gamma(E31, E_pump)
    if geometry == "copro":
        theta, E_s = 0.0, solve_stokes_energy(E32, gamma)
    elif geometry == "crossed":
        theta, E_s = solve_stokes_angle(E32, E_pump, gamma), E_pump
    else:
        raise KinematicsError(f"unknown geometry {geometry!r}; expected one of {GEOMETRIES}")
    return Plan(geometry, E_pump, E_s, gamma, theta, FrameParams.from_gamma(gamma, theta))
