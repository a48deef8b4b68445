"""Run configuration: a strict YAML schema with defaults and line-numbered errors.

Example::

    preset: gd154
    laser: xfelo            # or {profile: xfelo, photon_keV: 25, duration_ps: 1, ...}
    geometry: copro
    sweep: {I_min_Wcm2: 1.0e+17, I_max_Wcm2: 1.0e+19, n_points: 21}
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Mapping

import yaml

from .kinematics import GEOMETRIES, LASERS, LaserProfile
from .nuclear import PRESETS, NuclearDataError, NuclearSystem, build_system, preset_config, preset_ratio


class ConfigError(ValueError):
    def __init__(self, key: str, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}: {message}{where}")
        self.key = key
        self.line = line


def _positive(x: float) -> bool:
    return x > 0


def _nonneg(x: float) -> bool:
    return x >= 0


# key -> (type, default, check, message)
_Spec = tuple[type, Any, Callable[[Any], bool] | None, str]

_TOP: dict[str, _Spec] = {
    "preset": (str, None, lambda v: v.lower() in PRESETS, f"must be one of {sorted(PRESETS)}"),
    "geometry": (str, "copro", lambda v: v in GEOMETRIES, f"must be one of {list(GEOMETRIES)}"),
    "ratio": (float, None, _positive, "must be positive"),
    "delay_s": (float, None, None, ""),
    "gamma_dephasing_per_s": (float, 0.0, _nonneg, "must be non-negative"),
    "intensity_mode": (str, "strict", lambda v: v in ("strict", "rest"), "must be 'strict' or 'rest'"),
    "output": (str, None, None, ""),
    "workers": (int, 1, _positive, "must be a positive integer"),
}
_LASER: dict[str, _Spec] = {
    "profile": (str, "sxfel", lambda v: v in LASERS, f"must be one of {sorted(LASERS)}"),
    "photon_keV": (float, None, _positive, "must be positive"),
    "intensity_Wcm2": (float, None, _positive, "must be positive"),
    "duration_ps": (float, None, _positive, "must be positive"),
    "bandwidth_meV": (float, None, _positive, "must be positive"),
}
_SWEEP: dict[str, _Spec] = {
    "I_min_Wcm2": (float, None, _positive, "must be positive"),
    "I_max_Wcm2": (float, None, _positive, "must be positive"),
    "n_points": (int, 21, _positive, "must be a positive integer"),
    "window_widths": (float, 6.0, _positive, "must be positive"),
    "n_coarse": (int, 61, lambda v: v >= 3, "must be at least 3"),
}
_ROBUST: dict[str, _Spec] = {
    "intensity_Wcm2": (float, None, _positive, "must be positive"),
    "delta_meV": (list, [-10.0, -5.0, 0.0, 5.0, 10.0], None, ""),
    "dtheta_rad": (list, [-1e-5, 0.0, 1e-5], None, ""),
    "dgamma_rel": (list, [-1e-6, 0.0, 1e-6], None, ""),
    "multipliers": (list, [2.0, 3.0, 5.0, 10.0, 30.0, 100.0], None, ""),
    "reoptimize_delay": (bool, True, None, ""),
}
_INTEGRATOR: dict[str, _Spec] = {
    "rtol": (float, 1e-9, _positive, "must be positive"),
    "atol": (float, 1e-12, _positive, "must be positive"),
}
_TRANSITION: dict[str, _Spec] = {
    "kind": (str, None, lambda v: v.upper() in ("E", "M"), "must be 'E' or 'M'"),
    "L": (int, None, _positive, "must be a positive integer"),
    "B_wu": (float, None, _positive, "must be positive"),
}
_NUCLEUS: dict[str, _Spec] = {
    "name": (str, None, None, ""),
    "A": (int, None, _positive, "must be a positive integer"),
    "E1_keV": (float, None, _nonneg, "must be non-negative"),
    "E2_keV": (float, None, _positive, "must be positive"),
    "E3_keV": (float, None, _positive, "must be positive"),
    "t31": (dict, None, None, ""),
    "t32": (dict, None, None, ""),
    "extra_loss_eV": (float, None, _nonneg, "must be non-negative"),
    "Gamma3_eV": (float, None, _positive, "must be positive"),
    "Gamma2_eV": (float, None, _nonneg, "must be non-negative"),
}
_SECTIONS = {"laser": _LASER, "sweep": _SWEEP, "robust": _ROBUST, "integrator": _INTEGRATOR}


@dataclass
class RunConfig:
    preset: str | None = None
    nucleus: dict[str, Any] | None = None
    laser: dict[str, Any] = field(default_factory=dict)
    geometry: str = "copro"
    ratio: float | None = None
    delay_s: float | None = None
    sweep: dict[str, Any] = field(default_factory=dict)
    robust: dict[str, Any] = field(default_factory=dict)
    integrator: dict[str, Any] = field(default_factory=dict)
    gamma_dephasing_per_s: float = 0.0
    intensity_mode: str = "strict"
    output: str | None = None
    workers: int = 1

    def effective(self) -> dict[str, Any]:
        """Post-default configuration, as echoed into output headers."""
        return asdict(self)

    def system(self) -> NuclearSystem:
        cfg: dict[str, Any] = {}
        if self.preset:
            cfg.update(preset_config(self.preset))
        if self.nucleus:
            cfg.update(copy.deepcopy(self.nucleus))
        try:
            return build_system(cfg, name=cfg.get("name"))
        except NuclearDataError as exc:
            raise ConfigError("nucleus", str(exc)) from None

    def laser_profile(self) -> LaserProfile:
        base = LASERS[self.laser["profile"]]
        las = self.laser
        return LaserProfile(
            name=base.name,
            E_photon=1e3 * las["photon_keV"] if las.get("photon_keV") else base.E_photon,
            T=1e-12 * las["duration_ps"] if las.get("duration_ps") else base.T,
            bandwidth=1e-3 * las["bandwidth_meV"] if las.get("bandwidth_meV") else base.bandwidth,
        )

    def default_ratio(self) -> float | None:
        """Configured ratio, else the preset's ratio for this geometry."""
        if self.ratio is not None:
            return self.ratio
        if self.preset and not self.nucleus:
            return preset_ratio(self.preset, self.geometry)
        return None

    @property
    def preset_ids(self) -> list[str]:
        return [self.preset] if self.preset else []


def _line_map(node: yaml.Node, prefix: str = "", out: dict[str, int] | None = None) -> dict[str, int]:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}{k.value}"
            out[path] = k.start_mark.line + 1
            _line_map(v, path + ".", out)
    return out


def _coerce(key: str, value: Any, spec: _Spec, lines: Mapping[str, int]) -> Any:
    typ, _default, check, msg = spec
    line = lines.get(key)
    if value is None:
        return None
    try:
        if typ is float:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
        elif typ is int:
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            value = int(float(value))
        elif typ is str:
            if not isinstance(value, str):
                raise TypeError
        elif typ is bool:
            if not isinstance(value, bool):
                raise TypeError
        elif typ is list:
            if not isinstance(value, list):
                raise TypeError
            value = [float(x) for x in value]
        elif typ is dict:
            if not isinstance(value, dict):
                raise TypeError
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {typ.__name__}, got {value!r}", line) from None
    if check is not None and not check(value):
        raise ConfigError(key, msg or "invalid value", line)
    return value


def _section(raw: Any, schema: Mapping[str, _Spec], prefix: str, lines: Mapping[str, int], defaults: bool = True) -> dict:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(prefix.rstrip("."), "expected a mapping", lines.get(prefix.rstrip(".")))
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        key = prefix + str(unknown[0])
        raise ConfigError(key, f"unknown key (allowed: {sorted(schema)})", lines.get(key))
    out = {}
    for name, spec in schema.items():
        if name in raw:
            out[name] = _coerce(prefix + name, raw[name], spec, lines)
        elif defaults:
            out[name] = copy.deepcopy(spec[1])
    return out


def validate(raw: Mapping[str, Any], lines: Mapping[str, int] | None = None) -> RunConfig:
    """Validate a plain mapping against the schema and apply defaults."""
    lines = lines or {}
    raw = dict(raw or {})
    if isinstance(raw.get("laser"), str):
        raw["laser"] = {"profile": raw["laser"]}
    allowed = set(_TOP) | set(_SECTIONS) | {"nucleus"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(str(unknown[0]), f"unknown key (allowed: {sorted(allowed)})", lines.get(str(unknown[0])))
    top = _section({k: v for k, v in raw.items() if k in _TOP}, _TOP, "", lines)
    sections = {name: _section(raw.get(name), schema, name + ".", lines) for name, schema in _SECTIONS.items()}
    nucleus = None
    if raw.get("nucleus") is not None:
        nucleus = _section(raw["nucleus"], _NUCLEUS, "nucleus.", lines, defaults=False)
        for t in ("t31", "t32"):
            if t in nucleus:
                nucleus[t] = _section(nucleus[t], _TRANSITION, f"nucleus.{t}.", lines)
                for key, val in nucleus[t].items():
                    if val is None:
                        raise ConfigError(f"nucleus.{t}.{key}", "required", lines.get(f"nucleus.{t}"))
        if not top["preset"]:
            missing = [k for k in ("A", "E1_keV", "E2_keV", "E3_keV", "t31", "t32") if k not in nucleus]
            if missing:
                raise ConfigError(f"nucleus.{missing[0]}", "required without a preset", lines.get("nucleus"))
    elif not top["preset"]:
        raise ConfigError("preset", "either 'preset' or 'nucleus' is required", None)
    if top["preset"]:
        top["preset"] = top["preset"].lower()
    sw = sections["sweep"]
    if sw["I_min_Wcm2"] and sw["I_max_Wcm2"] and sw["I_min_Wcm2"] > sw["I_max_Wcm2"]:
        raise ConfigError("sweep.I_max_Wcm2", "must be >= sweep.I_min_Wcm2", lines.get("sweep.I_max_Wcm2"))
    cfg = RunConfig(nucleus=nucleus, **top, **sections)
    if cfg.nucleus is not None:
        cfg.system()  # surface nuclear data errors at parse time
    return cfg


def parse_config(text: str, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Parse YAML text into a validated :class:`RunConfig`.

    ``overrides`` (e.g. from command-line flags) are merged over the parsed
    mapping before validation.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<document>", f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<document>", "top level must be a mapping", 1)
    if overrides:
        raw = merge(raw, overrides)
    return validate(raw, _line_map(node) if node is not None else {})


def merge(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Recursive dict merge; ``None`` values in ``overrides`` are skipped."""
    out = copy.deepcopy(dict(base))
    for k, v in overrides.items():
        if v is None:
            continue
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = merge(out[k], v)
        elif isinstance(v, Mapping) and isinstance(out.get(k), str) and k == "laser":
            out[k] = merge({"profile": out[k]}, v)
        else:
            out[k] = copy.deepcopy(v)
    return out
