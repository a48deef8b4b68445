"""``ncpt`` command-line entry point.

Exit status: 0 on success, 2 for configuration or physics-input errors,
3 when the integrator fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import yaml

from . import __version__
from .constants import HBAR_EV_S
from .config import ConfigError, RunConfig, parse_config
from .csvio import emit_csv, provenance_lines
from .dynamics import IntegrationError, InvariantError, transfer_efficiency
from .kinematics import LASERS, KinematicsError, plan, to_rest_frame
from .nuclear import PRESETS, NuclearDataError, preset
from .scan import (
    ScanContext,
    SweepSpec,
    SweepRow,
    SweepSpecError,
    detuning_robustness,
    intensity_sweep,
    mismatch_robustness,
    optimize_delay,
    pi_intensities,
    regime_label,
)

log = logging.getLogger("ncpt")

EXIT_SPEC = 2
EXIT_INTEGRATION = 3

_GEOMETRY_ALIASES = {"copro": "copro", "copropagating": "copro", "crossed": "crossed"}

TRAJECTORY_COLUMNS = (
    "t_s", "rho11", "rho22", "rho33", "re_rho12", "im_rho12",
    "re_rho13", "im_rho13", "re_rho23", "im_rho23", "p_loss",
)
PLAN_COLUMNS = ("nucleus", "geometry", "E_pump_keV", "gamma", "theta_S_rad", "E_S_keV", "D_pump", "D_stokes")


def _geometry(text: str) -> str:
    try:
        return _GEOMETRY_ALIASES[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError(f"geometry must be one of {sorted(_GEOMETRY_ALIASES)}") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--laser", choices=sorted(LASERS))
    p.add_argument("--geometry", type=_geometry, help="copro or crossed")
    p.add_argument("--ratio", type=float, help="Stokes/pump intensity ratio")
    p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncpt", description="Nuclear coherent population transfer toolkit")
    parser.add_argument("--version", action="version", version=f"ncpt {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="resonance kinematics (gamma, theta_S, E_S)")
    _common(p)
    p.add_argument("--photon-keV", type=float, help="pump photon energy (keV)")

    p = sub.add_parser("simulate", help="single evolution, trajectory CSV")
    _common(p)
    p.add_argument("--intensity", type=float, help="pump intensity (W/cm^2)")
    p.add_argument("--delay", type=float, help="tau_p - tau_S in s (default: optimised)")
    p.add_argument("--samples", type=int, default=401)

    p = sub.add_parser("sweep", help="pump-intensity sweep with delay optimisation")
    _common(p)
    p.add_argument("--I-min", type=float, dest="I_min")
    p.add_argument("--I-max", type=float, dest="I_max")
    p.add_argument("--points", type=int)

    p = sub.add_parser("pipulse", help="pi-pulse intensities and ratio")
    _common(p)

    p = sub.add_parser("robust-detuning", help="equal-detuning robustness")
    _common(p)
    p.add_argument("--intensity", type=float, help="operating pump intensity (W/cm^2)")
    p.add_argument("--delta-meV", type=float, nargs="+")

    p = sub.add_parser("robust-mismatch", help="Stokes-angle / gamma mismatch robustness")
    _common(p)
    p.add_argument("--intensity", type=float, help="operating pump intensity (W/cm^2)")

    p = sub.add_parser("presets", help="print built-in nuclear data")
    p.add_argument("--out", type=Path)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    text = args.config.read_text() if getattr(args, "config", None) else ""
    overrides: dict[str, Any] = {
        "preset": args.preset,
        "geometry": args.geometry,
        "ratio": args.ratio,
        "workers": args.workers,
        "output": str(args.out) if args.out else None,
        "integrator": {"rtol": args.rtol, "atol": args.atol},
        "laser": {"profile": args.laser, "photon_keV": getattr(args, "photon_keV", None)},
        "delay_s": getattr(args, "delay", None),
        "sweep": {
            "I_min_Wcm2": getattr(args, "I_min", None),
            "I_max_Wcm2": getattr(args, "I_max", None),
            "n_points": getattr(args, "points", None),
        },
        "robust": {
            "intensity_Wcm2": getattr(args, "intensity", None) if args.command.startswith("robust") else None,
            "delta_meV": getattr(args, "delta_meV", None),
        },
    }
    if args.command == "simulate":
        overrides["laser"]["intensity_Wcm2"] = args.intensity
    overrides["integrator"] = {k: v for k, v in overrides["integrator"].items() if v is not None} or None
    for key in ("laser", "sweep", "robust"):
        overrides[key] = {k: v for k, v in overrides[key].items() if v is not None} or None
    return parse_config(text, overrides)


def context_from(cfg: RunConfig) -> ScanContext:
    system = cfg.system()
    ctx = ScanContext(
        system,
        cfg.laser_profile(),
        cfg.geometry,
        ratio=cfg.default_ratio() or 1.0,
        window=cfg.sweep["window_widths"],
        n_coarse=cfg.sweep["n_coarse"],
        rtol=cfg.integrator["rtol"],
        atol=cfg.integrator["atol"],
        gamma_dephasing=cfg.gamma_dephasing_per_s,
        mode=cfg.intensity_mode,
    )
    if cfg.default_ratio() is None:
        ip, is_ = pi_intensities(ctx)
        ctx = ctx.replace(ratio=is_ / ip)
    return ctx


def _emit(rows, columns, cfg: RunConfig | None, command: str, extra: Sequence[str] = (), out: Path | None = None) -> None:
    comments = provenance_lines(command, cfg.effective() if cfg else None, cfg.preset_ids if cfg else PRESETS)
    comments += list(extra)
    path = out if out is not None else (Path(cfg.output) if cfg and cfg.output else None)
    emit_csv(rows, path, columns, comments, stream=sys.stdout)


def _summary(cfg: RunConfig, line: str) -> None:
    # keep stdout pure CSV when it carries the table
    print(line, file=sys.stdout if cfg.output else sys.stderr)


def _geometry_given(args: argparse.Namespace) -> bool:
    if args.geometry:
        return True
    if args.config:
        raw = yaml.safe_load(args.config.read_text()) or {}
        return "geometry" in raw
    return False


def cmd_plan(cfg: RunConfig, args: argparse.Namespace) -> int:
    system = cfg.system()
    las = cfg.laser_profile()
    geometries = [cfg.geometry] if _geometry_given(args) else ["copro", "crossed"]
    rows, extra = [], []
    for geo in geometries:
        res = plan(system.E31, system.E32, las.E_photon, geo)
        rows.append(
            {
                "nucleus": system.name,
                "geometry": geo,
                "E_pump_keV": res.E_pump / 1e3,
                "gamma": res.gamma,
                "theta_S_rad": res.theta_S,
                "E_S_keV": res.E_stokes / 1e3,
                "D_pump": res.frame.D_pump,
                "D_stokes": res.frame.D_stokes,
            }
        )
        ctx = ScanContext(system, las, geo, ratio=1.0)
        pump, stokes = ctx.pulses(1.0, 0.0)
        for label, pulse in (("pump", pump), ("stokes", stokes)):
            r = to_rest_frame(pulse, res.gamma)
            extra.append(
                f"{geo} {label}: beta={res.frame.beta:.12g} D={r.D:.12g} E_rest_keV={r.omega * HBAR_EV_S / 1e3:.12g} "
                f"T_rest_s={r.T:.6e} bandwidth_rest_eV={r.bandwidth:.6e} I_gain={r.D**2:.6e}"
            )
    _emit(rows, PLAN_COLUMNS, cfg, "plan", extra)
    return 0


def cmd_simulate(cfg: RunConfig, args: argparse.Namespace) -> int:
    ctx = context_from(cfg)
    I_p = cfg.laser.get("intensity_Wcm2") or pi_intensities(ctx)[0]
    delay = cfg.delay_s
    if delay is None:
        delay = optimize_delay(ctx, I_p).delay
    traj = ctx.trajectory(I_p, delay, n_samples=max(args.samples, 2))
    rho = traj.rho
    rows = [
        dict(zip(TRAJECTORY_COLUMNS, (
            float(traj.t[i]),
            float(rho[i, 0, 0].real), float(rho[i, 1, 1].real), float(rho[i, 2, 2].real),
            float(rho[i, 0, 1].real), float(rho[i, 0, 1].imag),
            float(rho[i, 0, 2].real), float(rho[i, 0, 2].imag),
            float(rho[i, 1, 2].real), float(rho[i, 1, 2].imag),
            float(traj.p_loss[i]),
        )))
        for i in range(len(traj))
    ]
    eta = transfer_efficiency(traj)
    extra = [f"I_p_Wcm2={I_p:.11e} delay_s={delay:.11e} ratio={ctx.ratio:.11e} backend={traj.backend}"]
    _emit(rows, TRAJECTORY_COLUMNS, cfg, "simulate", extra)
    _summary(cfg, f"eta={eta:.11e} regime={regime_label(delay, ctx.pulse_width)} max_rho33={traj.max_rho33:.6e}")
    return 0


def default_grid(cfg: RunConfig, ctx: ScanContext) -> tuple[float, float]:
    lo, hi = cfg.sweep["I_min_Wcm2"], cfg.sweep["I_max_Wcm2"]
    if lo is None or hi is None:
        ip = pi_intensities(ctx)[0]
        lo = lo or ip / 10.0
        hi = hi or max(ip * 1e3, lo)
    return lo, hi


def run_sweep(cfg: RunConfig, ctx: ScanContext):
    lo, hi = default_grid(cfg, ctx)
    spec = SweepSpec.log_grid(
        lo, hi, cfg.sweep["n_points"], ratio=ctx.ratio, geometry=cfg.geometry,
        laser=cfg.laser["profile"], window=ctx.window, n_coarse=ctx.n_coarse,
    )
    return intensity_sweep(spec, ctx, workers=cfg.workers)


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    ctx = context_from(cfg)
    result = run_sweep(cfg, ctx)
    plateau = "none" if result.plateau_I is None else f"{result.plateau_I:.11e}"
    extra = [f"ratio_input={result.ratio_input:.11e} ratio_pi={result.ratio_pi:.11e} plateau_I_Wcm2={plateau}"]
    _emit(result.rows, SweepRow.CSV_COLUMNS, cfg, "sweep", extra)
    failed = [r for r in result.rows if r.failed]
    for r in failed:
        log.error("row I_p=%.3e failed: %s", r.I_p, r.error)
    return EXIT_INTEGRATION if failed else 0


def cmd_pipulse(cfg: RunConfig, args: argparse.Namespace) -> int:
    ctx = context_from(cfg)
    ip, is_ = pi_intensities(ctx)
    row = {
        "nucleus": ctx.system.name,
        "laser": ctx.laser.name,
        "geometry": ctx.geometry,
        "I_pi_pump_Wcm2": ip,
        "I_pi_stokes_Wcm2": is_,
        "ratio_pi": is_ / ip,
        "ratio_input": ctx.ratio,
    }
    _emit([row], list(row), cfg, "pipulse")
    return 0


def operating_intensity(cfg: RunConfig, ctx: ScanContext) -> float:
    I = cfg.robust["intensity_Wcm2"] or cfg.laser.get("intensity_Wcm2")
    if I:
        return I
    result = run_sweep(cfg, ctx)
    if result.plateau_I is None:
        raise SweepSpecError("no plateau found in the sweep; pass --intensity")
    return result.plateau_I


def cmd_robust_detuning(cfg: RunConfig, args: argparse.Namespace) -> int:
    ctx = context_from(cfg)
    I_p = operating_intensity(cfg, ctx)
    deltas = [1e-3 * d for d in cfg.robust["delta_meV"]]
    curve = detuning_robustness(ctx, I_p, deltas)
    rows = [
        {"delta_meV": 1e3 * d, "eta": float(e), "rel_drop": float(r)}
        for d, e, r in zip(curve.delta_eV, curve.eta, curve.rel_drop)
    ]
    extra = [f"I_p_Wcm2={I_p:.11e} delay_s={curve.delay:.11e} baseline={curve.baseline:.11e}"]
    _emit(rows, ("delta_meV", "eta", "rel_drop"), cfg, "robust-detuning", extra)
    _summary(cfg, f"max_rel_drop={curve.max_rel_drop:.6e}")
    return 0


def cmd_robust_mismatch(cfg: RunConfig, args: argparse.Namespace) -> int:
    ctx = context_from(cfg)
    if ctx.geometry != "crossed":
        raise SweepSpecError("robust-mismatch requires --geometry crossed")
    I_p = operating_intensity(cfg, ctx)
    surf = mismatch_robustness(
        ctx, I_p, cfg.robust["dtheta_rad"], cfg.robust["dgamma_rel"],
        cfg.robust["multipliers"], cfg.robust["reoptimize_delay"], workers=cfg.workers,
    )
    rows = [
        {"dtheta_rad": float(a), "dgamma_rel": float(b), "eta": float(surf.eta[i, j])}
        for i, a in enumerate(surf.dtheta)
        for j, b in enumerate(surf.dgamma_rel)
    ]
    mult = "none" if surf.restore_multiplier is None else f"{surf.restore_multiplier:g}"
    extra = [f"I_p_Wcm2={I_p:.11e} min_eta={surf.min_eta:.11e} restore_multiplier={mult}"]
    _emit(rows, ("dtheta_rad", "dgamma_rel", "eta"), cfg, "robust-mismatch", extra)
    _summary(cfg, f"min_eta={surf.min_eta:.6e} restore_multiplier={mult}")
    return 0


def cmd_presets(args: argparse.Namespace) -> int:
    rows = []
    for key, data in PRESETS.items():
        s = preset(key)
        rows.append(
            {
                "preset": key,
                "nucleus": s.name,
                "A": s.A,
                "E1_keV": s.E1 / 1e3,
                "E2_keV": s.E2 / 1e3,
                "E3_keV": s.E3 / 1e3,
                "t31": s.t31.label,
                "B31_wu": s.t31.B_wu,
                "t32": s.t32.label,
                "B32_wu": s.t32.B_wu,
                "Gamma31_eV": s.Gamma31,
                "Gamma32_eV": s.Gamma32,
                "Gamma3_eV": s.Gamma3,
                "ratio_crossed": float(data["ratio"]["crossed"]),
                "ratio_copro": float(data["ratio"]["copro"]),
            }
        )
    comments = provenance_lines("presets", None, list(PRESETS))
    emit_csv(rows, args.out, list(rows[0]), comments, stream=sys.stdout)
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "pipulse": cmd_pipulse,
    "robust-detuning": cmd_robust_detuning,
    "robust-mismatch": cmd_robust_mismatch,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "presets":
            return cmd_presets(args)
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, NuclearDataError, KinematicsError, SweepSpecError, OSError) as exc:
        print(f"ncpt: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (IntegrationError, InvariantError) as exc:
        print(f"ncpt: integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
