"""Rest-frame density-matrix dynamics of the driven nuclear Lambda system.

Levels are indexed 0, 1, 2 for |1>, |2>, |3>.  The Hamiltonian is already in
the rotating frame, so time steps only need to resolve pulse envelopes and
Rabi frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .constants import CONST, HBAR_EV_S, width_to_rate
from .kinematics import FrameParams, LaserPulse, detuning, to_rest_frame
from .nuclear import MultipoleTransition, NuclearSystem, double_factorial

HERMITIAN_TOL = 1e-8
TRACE_TOL = 1e-6
POSITIVITY_TOL = 1e-8

INTENSITY_MODES = ("strict", "rest")


class IntegrationError(RuntimeError):
    """The integrator gave up; ``t_fail`` is the rest-frame time reached."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(f"{message} at t = {t_fail:.6e} s")
        self.t_fail = t_fail


class InvariantError(RuntimeError):
    """A sampled density matrix left the physical set beyond tolerance."""


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    t: float
    p_loss: float

    def violations(self) -> dict[str, float]:
        """Deviations of each invariant; all must be within tolerance."""
        rho = self.rho
        return {
            "hermiticity": float(np.abs(rho - rho.conj().T).max()),
            "trace": float(abs(np.trace(rho).real + self.p_loss - 1.0)),
            "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()),
        }

    def check(self) -> None:
        v = self.violations()
        diag = np.real(np.diag(self.rho))
        if (
            v["hermiticity"] > HERMITIAN_TOL
            or v["trace"] > TRACE_TOL
            or v["min_eigenvalue"] < -POSITIVITY_TOL
            or diag.max() > 1.0 + POSITIVITY_TOL
        ):
            raise InvariantError(f"density matrix invalid at t={self.t:.6e} s: {v}")


class PulseDrive(NamedTuple):
    """Rest-frame drive of one transition.

    ``width`` is the 1/e half-width of the Rabi envelope, sqrt(2) T_lab / D.
    """

    Omega0: float  # rad/s
    tau: float  # s
    width: float  # s
    Delta: float  # rad/s
    flat: bool = False


class DriveConfig(NamedTuple):
    pump: PulseDrive
    stokes: PulseDrive


class DecayRates(NamedTuple):
    """Relaxation rates in 1/s."""

    g3: float = 0.0
    g31: float = 0.0
    g32: float = 0.0
    g2: float = 0.0
    dephasing: float = 0.0

    @classmethod
    def of(cls, system: NuclearSystem, dephasing: float = 0.0) -> "DecayRates":
        return cls(
            width_to_rate(system.Gamma3),
            width_to_rate(system.Gamma31),
            width_to_rate(system.Gamma32),
            width_to_rate(system.Gamma2),
            dephasing,
        )


LOSSLESS = DecayRates()


def effective_intensity(I_peak: float, Gamma_nuc: float, bandwidth: float) -> float:
    """Scale an intensity by the fraction of photons within the nuclear line.

    ``Gamma_nuc`` and ``bandwidth`` are both rest-frame widths; the ratio is
    clamped at one so broad nuclear lines see the nominal intensity.
    """
    return I_peak * min(1.0, Gamma_nuc / bandwidth)


def rabi_peak(I_eff: float, transition: MultipoleTransition, D: float = 1.0) -> float:
    """Peak Rabi frequency (rad/s) for an effective intensity in W/m^2.

    With ``D = 1`` the intensity is taken as already boosted to the rest
    frame; otherwise the lab intensity is boosted here by ``D**2``.
    """
    L = transition.L
    amp = math.sqrt(D * D * I_eff * (L + 1) * transition.B_si / (CONST.c * CONST.eps0 * L))
    return 4.0 * math.sqrt(math.pi) / CONST.hbar * amp * transition.k ** (L - 1) / double_factorial(2 * L + 1)


def rabi_envelope(t, Omega0: float, tau: float, T_lab: float, D: float):
    x = D * (np.asarray(t) - tau) / (math.sqrt(2.0) * T_lab)
    return Omega0 * np.exp(-x * x)


def hamiltonian(t: float, drives: DriveConfig) -> np.ndarray:
    """Interaction Hamiltonian divided by hbar (rad/s), levels |1>,|2>,|3>."""
    Op = _envelope_value(t, drives.pump)
    Os = _envelope_value(t, drives.stokes)
    dp, ds = drives.pump.Delta, drives.stokes.Delta
    M = np.array(
        [
            [0.0, 0.0, np.conj(Op)],
            [0.0, 2.0 * (dp - ds), np.conj(Os)],
            [Op, Os, 2.0 * dp],
        ],
        dtype=complex,
    )
    return -0.5 * M


def _envelope_value(t: float, d: PulseDrive) -> float:
    if d.flat:
        return d.Omega0
    x = (t - d.tau) / d.width
    return d.Omega0 * math.exp(-x * x)


def relaxation(rho: np.ndarray, rates: DecayRates) -> tuple[np.ndarray, float]:
    """Spontaneous-decay part of d rho/dt and the loss accrual rate."""
    g3, g31, g32, g2, gd = rates
    p33, p22 = rho[2, 2].real, rho[1, 1].real
    level = np.array([0.0, g2, g3])
    damp = 0.5 * (level[:, None] + level[None, :]) + gd
    np.fill_diagonal(damp, 0.0)
    drho = -damp * rho
    drho[0, 0] += g31 * p33
    drho[1, 1] += g32 * p33 - g2 * p22
    drho[2, 2] -= g3 * p33
    return drho, (g3 - g31 - g32) * p33 + g2 * p22


def liouvillian_rhs(t: float, rho: np.ndarray, drives: DriveConfig, rates: DecayRates) -> np.ndarray:
    """Reference d rho/dt built from :func:`hamiltonian` and :func:`relaxation`."""
    H = hamiltonian(t, drives)
    return -1j * (H @ rho - rho @ H) + relaxation(rho, rates)[0]


def pulse_drive(
    pulse: LaserPulse,
    transition: MultipoleTransition,
    gamma: float,
    Gamma_nuc: float,
    mode: str = "strict",
) -> PulseDrive:
    """Rest-frame drive for a lab pulse on one nuclear transition.

    ``mode="strict"`` scales the lab intensity by the linewidth ratio and
    boosts it once inside :func:`rabi_peak`; ``mode="rest"`` boosts first and
    hands :func:`rabi_peak` a rest-frame intensity.  Both give the same Omega.
    """
    rest = to_rest_frame(pulse, gamma)
    if mode == "strict":
        I_eff = effective_intensity(pulse.I_peak, Gamma_nuc, rest.bandwidth)
        Omega0 = rabi_peak(I_eff, transition, rest.D)
    elif mode == "rest":
        I_eff = effective_intensity(rest.I_peak, Gamma_nuc, rest.bandwidth)
        Omega0 = rabi_peak(I_eff, transition, 1.0)
    else:
        raise ValueError(f"unknown intensity mode {mode!r}; expected one of {INTENSITY_MODES}")
    return PulseDrive(
        Omega0=Omega0,
        tau=pulse.tau,
        width=math.sqrt(2.0) * rest.T,
        Delta=detuning(pulse, gamma, transition.k),
    )


def make_drives(
    system: NuclearSystem,
    frame: FrameParams | float,
    pump: LaserPulse,
    stokes: LaserPulse,
    mode: str = "strict",
) -> DriveConfig:
    gamma = frame.gamma if isinstance(frame, FrameParams) else float(frame)
    return DriveConfig(
        pulse_drive(pump, system.t31, gamma, system.Gamma3, mode),
        pulse_drive(stokes, system.t32, gamma, system.Gamma3 + system.Gamma2, mode),
    )


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    rho: np.ndarray  # (n, 3, 3)
    p_loss: np.ndarray
    max_rho33: float
    n_steps: int
    n_rejected: int
    backend: str

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.rho[i], float(self.t[i]), float(self.p_loss[i]))

    @property
    def final(self) -> DensityMatrix:
        return self[-1]

    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.rho, axis1=1, axis2=2))

    def max_violations(self) -> dict[str, float]:
        rho = self.rho
        herm = np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))).max(axis=(1, 2))
        trace = np.abs(np.real(np.trace(rho, axis1=1, axis2=2)) + self.p_loss - 1.0)
        eig = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))).min(axis=1)
        return {
            "hermiticity": float(herm.max()),
            "trace": float(trace.max()),
            "min_eigenvalue": float(eig.min()),
        }

    def check(self) -> None:
        v = self.max_violations()
        if (
            v["hermiticity"] > HERMITIAN_TOL
            or v["trace"] > TRACE_TOL
            or v["min_eigenvalue"] < -POSITIVITY_TOL
        ):
            raise InvariantError(f"trajectory left the physical set: {v}")


def initial_state() -> np.ndarray:
    y = np.zeros(_kernels.N_STATE, dtype=np.complex128)
    y[0] = 1.0
    return y


def default_span(drives: DriveConfig, n_widths: float = 6.0) -> tuple[float, float]:
    active = [d for d in drives if not d.flat and d.Omega0 > 0] or [d for d in drives if not d.flat]
    if not active:
        raise ValueError("flat drives need an explicit t_span")
    w = max(d.width for d in active)
    lo = min(d.tau for d in active) - n_widths * w
    hi = max(d.tau for d in active) + n_widths * w
    return lo, hi


def _param_vector(drives: DriveConfig, rates: DecayRates, h_sign: float) -> np.ndarray:
    p, s = drives.pump, drives.stokes
    return np.array(
        [
            p.Omega0, p.tau, p.width, s.Omega0, s.tau, s.width,
            p.Delta, s.Delta,
            rates.g3, rates.g31, rates.g32, rates.g2, rates.dephasing,
            h_sign, float(p.flat), float(s.flat),
        ],
        dtype=np.float64,
    )


def evolve_drives(
    drives: DriveConfig,
    rates: DecayRates = LOSSLESS,
    t_span: tuple[float, float] | None = None,
    *,
    n_samples: int = 201,
    t_eval: np.ndarray | None = None,
    rho0: np.ndarray | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    fixed_step: float | None = None,
    h_sign: float = 1.0,
    check: bool = True,
) -> Trajectory:
    """Integrate the master equation for explicit rest-frame drives.

    Raises :class:`IntegrationError` on step-size underflow and
    :class:`InvariantError` if a sample breaks hermiticity, trace or
    positivity beyond tolerance.
    """
    if t_eval is None:
        lo, hi = t_span if t_span is not None else default_span(drives)
        t_eval = np.linspace(lo, hi, max(int(n_samples), 2))
    y0 = initial_state()
    if rho0 is not None:
        y0[:9] = np.asarray(rho0, dtype=complex).ravel()
        y0[9] = 1.0 - np.trace(rho0).real
    widths = [d.width for d in drives if not d.flat and d.Omega0 > 0]
    # cap the step so a quiet stretch cannot jump over a pulse
    h_max = 0.25 * min(widths) if widths else np.inf
    out, status, t_fail, n_acc, n_rej, max33 = _kernels.integrate(
        y0, t_eval, _param_vector(drives, rates, h_sign), rtol, atol, h_max, fixed_step or 0.0
    )
    if status == _kernels.STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow (stiff or singular drive)", t_fail)
    if status == _kernels.STATUS_MAX_STEPS:
        raise IntegrationError("step budget exhausted", t_fail)
    traj = Trajectory(
        t=np.asarray(t_eval, dtype=float),
        rho=out[:, :9].reshape(-1, 3, 3),
        p_loss=out[:, 9].real.copy(),
        max_rho33=float(max33),
        n_steps=int(n_acc),
        n_rejected=int(n_rej),
        backend=_kernels.backend(),
    )
    if check:
        traj.check()
    return traj


def evolve(
    system: NuclearSystem,
    frame: FrameParams | float,
    pump: LaserPulse,
    stokes: LaserPulse,
    t_span: tuple[float, float] | None = None,
    *,
    lossless: bool = False,
    gamma_dephasing: float = 0.0,
    mode: str = "strict",
    **step_control,
) -> Trajectory:
    """Evolve rho(0) = |1><1| under the two lab pulses in the rest frame."""
    drives = make_drives(system, frame, pump, stokes, mode)
    rates = LOSSLESS if lossless else DecayRates.of(system, gamma_dephasing)
    return evolve_drives(drives, rates, t_span, **step_control)


def transfer_efficiency(trajectory: Trajectory) -> float:
    """Final population of |2>."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    return float(min(max(trajectory.rho[-1, 1, 1].real, 0.0), 1.0))


def detuning_energy(Delta: float) -> float:
    """Angular-frequency detuning expressed in eV."""
    return Delta * HBAR_EV_S
