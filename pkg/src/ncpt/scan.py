"""Intensity sweeps, delay optimisation and robustness scans.

All intensities at this level are lab-frame pump intensities in W/cm^2.
The delay is ``tau_p - tau_S`` in the nuclear rest frame: negative means the
pump comes first (sequential pi pulses), positive means the counterintuitive
Stokes-first ordering used for STIRAP.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .constants import W_PER_CM2
from .dynamics import (
    LOSSLESS,
    DecayRates,
    DriveConfig,
    IntegrationError,
    InvariantError,
    Trajectory,
    evolve_drives,
    make_drives,
    pulse_drive,
    transfer_efficiency,
)
from .kinematics import LASERS, FrameParams, LaserProfile, LaserPulse, Plan, plan
from .nuclear import NuclearSystem

PLATEAU_THRESHOLD = 0.99
MIXED_BAND = 0.1  # |delay| below this many pulse widths counts as overlapping
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SweepSpecError(ValueError):
    pass


@dataclass(frozen=True)
class ScanContext:
    """Everything needed to turn (I_p, delay) into a transfer efficiency.

    ``dgamma_rel`` and ``dtheta`` perturb the nuclear Lorentz factor and the
    Stokes beam angle away from the resonant plan; ``detuning_eV`` adds equal
    rest-frame detunings to both drives by shifting the lab photon energies.
    """

    system: NuclearSystem
    laser: LaserProfile
    geometry: str
    ratio: float
    window: float = 6.0
    n_coarse: int = 61
    rtol: float = 1e-9
    atol: float = 1e-12
    dgamma_rel: float = 0.0
    dtheta: float = 0.0
    detuning_eV: float = 0.0
    gamma_dephasing: float = 0.0
    lossless: bool = False
    mode: str = "strict"
    resonance: Plan = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.ratio > 0:
            raise SweepSpecError(f"Stokes/pump intensity ratio must be positive, got {self.ratio}")
        if self.window <= 0 or self.n_coarse < 3:
            raise SweepSpecError("delay window must be positive with at least 3 coarse points")
        object.__setattr__(
            self, "resonance", plan(self.system.E31, self.system.E32, self.laser.E_photon, self.geometry)
        )

    def replace(self, **changes) -> "ScanContext":
        return replace(self, **changes)

    @property
    def gamma(self) -> float:
        return self.resonance.gamma * (1.0 + self.dgamma_rel)

    @property
    def frame(self) -> FrameParams:
        return FrameParams.from_gamma(self.gamma, self.resonance.theta_S + self.dtheta)

    @property
    def rates(self) -> DecayRates:
        return LOSSLESS if self.lossless else DecayRates.of(self.system, self.gamma_dephasing)

    def pulses(self, I_p: float, delay: float) -> tuple[LaserPulse, LaserPulse]:
        res = self.resonance
        las = self.laser
        E_p, E_s = res.E_pump, res.E_stokes
        if self.detuning_eV:
            E_p += self.detuning_eV / res.frame.D_pump
            E_s += self.detuning_eV / res.frame.D_stokes
        pump = LaserPulse(E_p, I_p * W_PER_CM2, las.T, las.bandwidth, 0.0, 0.5 * delay)
        stokes = LaserPulse(
            E_s,
            self.ratio * I_p * W_PER_CM2,
            las.T,
            las.bandwidth,
            min(max(res.theta_S + self.dtheta, 0.0), math.pi),
            -0.5 * delay,
        )
        return pump, stokes

    def drives(self, I_p: float, delay: float) -> DriveConfig:
        pump, stokes = self.pulses(I_p, delay)
        return make_drives(self.system, self.gamma, pump, stokes, self.mode)

    @property
    def pulse_width(self) -> float:
        """Longer of the two rest-frame Rabi envelope 1/e half-widths (s)."""
        d = self.drives(1.0, 0.0)
        return max(d.pump.width, d.stokes.width)

    def trajectory(self, I_p: float, delay: float, **kw) -> Trajectory:
        kw.setdefault("n_samples", 2)
        return evolve_drives(self.drives(I_p, delay), self.rates, rtol=self.rtol, atol=self.atol, **kw)

    def eta(self, I_p: float, delay: float) -> float:
        return transfer_efficiency(self.trajectory(I_p, delay))


def make_context(
    system: NuclearSystem, laser: str | LaserProfile, geometry: str, ratio: float, **kw
) -> ScanContext:
    profile = LASERS[laser] if isinstance(laser, str) else laser
    return ScanContext(system, profile, geometry, ratio, **kw)


def golden_max(f: Callable[[float], float], a: float, b: float, xtol: float) -> tuple[float, float]:
    """Golden-section search for a maximum of a unimodal ``f`` on [a, b]."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


@dataclass(frozen=True)
class DelayOptimum:
    delay: float
    eta: float
    coarse_eta: float
    window_exhausted: bool
    n_evals: int


def optimize_delay(ctx: ScanContext, I_p: float, xtol_widths: float = 1e-4) -> DelayOptimum:
    """Delay maximising the transfer efficiency at pump intensity ``I_p``.

    A uniform coarse grid over +-``ctx.window`` pulse widths is refined by a
    golden-section search between the neighbours of the best grid point.  A
    best point on the window edge sets ``window_exhausted``.
    """
    width = ctx.pulse_width
    grid = np.linspace(-ctx.window * width, ctx.window * width, ctx.n_coarse)
    etas = np.array([ctx.eta(I_p, d) for d in grid])
    i = int(np.argmax(etas))
    best_d, best_e = float(grid[i]), float(etas[i])
    n_evals = len(grid)
    exhausted = i in (0, len(grid) - 1) and best_e > 0.0
    if best_e > 0.0:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        calls = [0]

        def f(d: float) -> float:
            calls[0] += 1
            return ctx.eta(I_p, d)

        d_ref, e_ref = golden_max(f, float(lo), float(hi), xtol_widths * width)
        n_evals += calls[0]
        if e_ref > best_e:
            best_d, best_e = d_ref, e_ref
    return DelayOptimum(best_d, best_e, float(etas[i]), exhausted, n_evals)


def regime_label(delay: float, width: float) -> str:
    if delay < -MIXED_BAND * width:
        return "pi-pulse"
    if delay > MIXED_BAND * width:
        return "stirap"
    return "mixed"


def peak_effective_rabi(drives: DriveConfig, n: int = 2001) -> float:
    """Peak over time of sqrt(Omega_p^2 + Omega_S^2) (rad/s)."""
    p, s = drives.pump, drives.stokes
    w = max(p.width, s.width)
    t = np.linspace(min(p.tau, s.tau) - 3 * w, max(p.tau, s.tau) + 3 * w, n)
    op = p.Omega0 * np.exp(-(((t - p.tau) / p.width) ** 2))
    os_ = s.Omega0 * np.exp(-(((t - s.tau) / s.width) ** 2))
    return float(np.sqrt(op**2 + os_**2).max())


@dataclass(frozen=True)
class SweepRow:
    I_p: float  # W/cm^2
    delay: float  # s
    eta: float
    regime: str
    omega_p_peak: float
    omega_s_peak: float
    adiabaticity: float
    max_rho33: float
    window_exhausted: bool = False
    error: str = ""

    CSV_COLUMNS = (
        "I_p_Wcm2", "delay_s", "eta", "regime",
        "omega_p_peak", "omega_s_peak", "adiabaticity", "max_rho33",
    )

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def csv_row(self) -> dict:
        return dict(
            zip(
                self.CSV_COLUMNS,
                (self.I_p, self.delay, self.eta, self.regime, self.omega_p_peak,
                 self.omega_s_peak, self.adiabaticity, self.max_rho33),
            )
        )


def sweep_row(ctx: ScanContext, I_p: float) -> SweepRow:
    """One sweep point: optimise the delay, then record diagnostics there."""
    try:
        opt = optimize_delay(ctx, I_p)
        if opt.window_exhausted:
            wider = optimize_delay(ctx.replace(window=2.0 * ctx.window), I_p)
            if wider.eta >= opt.eta:
                opt = wider
        drives = ctx.drives(I_p, opt.delay)
        traj = evolve_drives(drives, ctx.rates, rtol=ctx.rtol, atol=ctx.atol, n_samples=2)
    except (IntegrationError, InvariantError) as exc:
        nan = float("nan")
        return SweepRow(I_p, nan, nan, "failed", nan, nan, nan, nan, error=str(exc))
    return SweepRow(
        I_p=float(I_p),
        delay=opt.delay,
        eta=opt.eta,
        regime=regime_label(opt.delay, ctx.pulse_width),
        omega_p_peak=drives.pump.Omega0,
        omega_s_peak=drives.stokes.Omega0,
        adiabaticity=peak_effective_rabi(drives) * abs(opt.delay),
        max_rho33=traj.max_rho33,
        window_exhausted=opt.window_exhausted,
    )


@dataclass(frozen=True)
class SweepSpec:
    intensities: tuple[float, ...]  # W/cm^2, lab pump
    ratio: float
    geometry: str
    laser: str
    window: float = 6.0
    n_coarse: int = 61

    def __post_init__(self) -> None:
        grid = np.asarray(self.intensities, dtype=float)
        if grid.size == 0:
            raise SweepSpecError("intensity grid is empty")
        if not np.all(grid > 0):
            raise SweepSpecError("intensity grid must be strictly positive")
        if np.any(np.diff(grid) <= 0):
            raise SweepSpecError("intensity grid must be strictly increasing")
        if not self.ratio > 0:
            raise SweepSpecError("ratio must be positive")
        if self.window <= 0:
            raise SweepSpecError("delay window must be positive")

    @classmethod
    def log_grid(cls, I_min: float, I_max: float, n: int, **kw) -> "SweepSpec":
        if not (0 < I_min <= I_max) or n < 1:
            raise SweepSpecError(f"invalid log grid [{I_min}, {I_max}] x {n}")
        return cls(tuple(float(x) for x in np.logspace(np.log10(I_min), np.log10(I_max), n)), **kw)


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    plateau_I: float | None
    ratio_input: float
    ratio_pi: float


def plateau_onset(rows: Sequence[SweepRow], threshold: float = PLATEAU_THRESHOLD) -> float | None:
    """Lowest intensity from which every later row keeps eta >= threshold."""
    onset = None
    for row in reversed(rows):
        if row.failed or not row.eta >= threshold:
            break
        onset = row.I_p
    return onset


def worker_count(default: int = 1) -> int:
    env = os.environ.get("NCPT_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, int(default))


def _row_task(args: tuple[ScanContext, float]) -> SweepRow:
    ctx, I_p = args
    return sweep_row(ctx, I_p)


def map_ordered(fn, items: Sequence, workers: int) -> list:
    """Map preserving input order, in worker processes when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def context_for(spec: SweepSpec, base: ScanContext) -> ScanContext:
    return base.replace(
        ratio=spec.ratio,
        geometry=spec.geometry,
        # keep a customised profile (duration, bandwidth overrides) under its preset name
        laser=base.laser if spec.laser == base.laser.name else LASERS[spec.laser],
        window=spec.window,
        n_coarse=spec.n_coarse,
    )


def intensity_sweep(spec: SweepSpec, context: ScanContext, workers: int | None = None) -> SweepResult:
    """Optimise the delay at every grid intensity; rows keep grid order."""
    ctx = context_for(spec, context)
    n = worker_count(1 if workers is None else workers)
    rows = map_ordered(_row_task, [(ctx, float(I)) for I in spec.intensities], n)
    return SweepResult(
        rows=rows,
        plateau_I=plateau_onset(rows),
        ratio_input=spec.ratio,
        ratio_pi=pi_ratio(ctx),
    )


def pi_pulse_intensity(
    system: NuclearSystem,
    frame: FrameParams | float,
    pulse_template: LaserPulse,
    which_transition: str = "pump",
) -> float:
    """Lab intensity (W/cm^2) giving a rest-frame pulse area of pi.

    The Rabi chain is linear in sqrt(I), so it is inverted by evaluating it at
    a unit intensity and rescaling.
    """
    gamma = frame.gamma if isinstance(frame, FrameParams) else float(frame)
    if which_transition == "pump":
        transition, width = system.t31, system.Gamma3
    elif which_transition == "stokes":
        transition, width = system.t32, system.Gamma3 + system.Gamma2
    else:
        raise ValueError(f"which_transition must be 'pump' or 'stokes', got {which_transition!r}")
    unit = pulse_drive(pulse_template.replace(I_peak=W_PER_CM2), transition, gamma, width)
    if not unit.Omega0 > 0:
        raise ValueError("Rabi frequency vanishes; pi-pulse intensity undefined")
    area_unit = unit.Omega0 * math.sqrt(math.pi) * unit.width
    return (math.pi / area_unit) ** 2


def pi_intensities(ctx: ScanContext) -> tuple[float, float]:
    pump, stokes = ctx.pulses(1.0, 0.0)
    return (
        pi_pulse_intensity(ctx.system, ctx.gamma, pump, "pump"),
        pi_pulse_intensity(ctx.system, ctx.gamma, stokes, "stokes"),
    )


def pi_ratio(ctx: ScanContext) -> float:
    """Stokes/pump intensity ratio making both pulses pi pulses."""
    ip, is_ = pi_intensities(ctx)
    return is_ / ip


@dataclass(frozen=True)
class DetuningCurve:
    delta_eV: np.ndarray
    eta: np.ndarray
    baseline: float
    delay: float

    @property
    def rel_drop(self) -> np.ndarray:
        return (self.baseline - self.eta) / self.baseline

    @property
    def max_rel_drop(self) -> float:
        return float(self.rel_drop.max())


def detuning_robustness(
    ctx: ScanContext, I_p: float, delta_grid_eV: Sequence[float], delay: float | None = None
) -> DetuningCurve:
    """Efficiency under equal pump and Stokes detunings at a fixed delay.

    The delay defaults to the optimum at zero detuning, i.e. the frequency
    jump is not compensated.
    """
    base_ctx = ctx.replace(detuning_eV=0.0)
    if delay is None:
        delay = optimize_delay(base_ctx, I_p).delay
    baseline = base_ctx.eta(I_p, delay)
    etas = np.array([ctx.replace(detuning_eV=float(d)).eta(I_p, delay) for d in delta_grid_eV])
    return DetuningCurve(np.asarray(delta_grid_eV, dtype=float), etas, baseline, delay)


@dataclass(frozen=True)
class MismatchSurface:
    dtheta: np.ndarray
    dgamma_rel: np.ndarray
    eta: np.ndarray  # (n_theta, n_gamma)
    I_p: float
    restore_multiplier: float | None
    restore_min_eta: float | None

    @property
    def min_eta(self) -> float:
        return float(self.eta.min())


def _cell_task(args: tuple[ScanContext, float, bool, float]) -> float:
    ctx, I_p, reoptimize, delay = args
    if reoptimize:
        return optimize_delay(ctx, I_p).eta
    return ctx.eta(I_p, delay)


def mismatch_surface(
    ctx: ScanContext,
    I_p: float,
    dtheta_grid: Sequence[float],
    dgamma_grid: Sequence[float],
    reoptimize: bool = True,
    workers: int | None = None,
) -> np.ndarray:
    delay = optimize_delay(ctx, I_p).delay if not reoptimize else 0.0
    tasks = [
        (ctx.replace(dtheta=float(a), dgamma_rel=float(b)), I_p, reoptimize, delay)
        for a in dtheta_grid
        for b in dgamma_grid
    ]
    n = worker_count(1 if workers is None else workers)
    return np.array(map_ordered(_cell_task, tasks, n)).reshape(len(dtheta_grid), len(dgamma_grid))


def mismatch_robustness(
    ctx: ScanContext,
    I_p: float,
    dtheta_grid: Sequence[float] = (-1e-5, 0.0, 1e-5),
    dgamma_grid: Sequence[float] = (-1e-6, 0.0, 1e-6),
    multipliers: Sequence[float] = (2.0, 3.0, 5.0, 10.0, 30.0, 100.0),
    reoptimize: bool = True,
    workers: int | None = None,
) -> MismatchSurface:
    """Efficiency over a box of Stokes-angle and Lorentz-factor errors.

    Angle and gamma errors shift the two rest-frame detunings unequally.  The
    summary also finds the smallest intensity multiplier in ``multipliers``
    that lifts the box minimum to the plateau threshold.
    """
    if ctx.geometry != "crossed":
        raise SweepSpecError("mismatch robustness needs the crossed-beam geometry")
    surf = mismatch_surface(ctx, I_p, dtheta_grid, dgamma_grid, reoptimize, workers)
    restore, restore_min = None, None
    if surf.min() >= PLATEAU_THRESHOLD:
        restore, restore_min = 1.0, float(surf.min())
    else:
        for m in multipliers:
            mn = float(mismatch_surface(ctx, m * I_p, dtheta_grid, dgamma_grid, reoptimize, workers).min())
            if mn >= PLATEAU_THRESHOLD:
                restore, restore_min = float(m), mn
                break
    return MismatchSurface(
        np.asarray(dtheta_grid, dtype=float),
        np.asarray(dgamma_grid, dtype=float),
        surf,
        I_p,
        restore,
        restore_min,
    )
