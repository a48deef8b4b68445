"""Nuclear level schemes, Weisskopf estimates and radiative widths.

Reduced transition probabilities are stored in the conventional nuclear units
(e^2 fm^2L for electric, mu_N^2 fm^(2L-2) for magnetic multipoles); the
``B_si`` property gives the SI value used in rate and Rabi formulas, with
magnetic strengths divided by c^2 so both kinds share one expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Literal, Mapping

from .constants import CONST, EV, FM, HBAR_C_EV_M

Kind = Literal["E", "M"]


class NuclearDataError(ValueError):
    """Invalid nuclear configuration (ordering, widths, multipolarity)."""


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def _norm_kind(kind: str) -> Kind:
    k = str(kind).strip().upper()
    if k in ("E", "ELECTRIC"):
        return "E"
    if k in ("M", "MAGNETIC"):
        return "M"
    raise NuclearDataError(f"unknown multipole kind {kind!r}; expected 'E' or 'M'")


def weisskopf_unit(kind: str, L: int, A: int) -> float:
    """Single-particle (Weisskopf) estimate of B(sigma L).

    Returns e^2 fm^2L for electric and mu_N^2 fm^(2L-2) for magnetic
    multipoles, using the nuclear radius R = 1.2 A^(1/3) fm.
    """
    kind = _norm_kind(kind)
    if int(L) != L or L < 1:
        raise NuclearDataError(f"multipole order must be a positive integer, got L={L}")
    if A < 1:
        raise NuclearDataError(f"mass number must be >= 1, got A={A}")
    radius = 1.2 * A ** (1.0 / 3.0)
    shape = (3.0 / (L + 3.0)) ** 2
    if kind == "E":
        return shape * radius ** (2 * L) / (4.0 * math.pi)
    return 10.0 / math.pi * shape * radius ** (2 * L - 2)


def to_absolute(B_wu: float, kind: str, L: int, A: int) -> float:
    """Convert a strength in Weisskopf units to absolute nuclear units."""
    if not B_wu > 0:
        raise NuclearDataError(f"B_wu must be positive, got {B_wu}")
    return B_wu * weisskopf_unit(kind, L, A)


@dataclass(frozen=True)
class MultipoleTransition:
    kind: Kind
    L: int
    B_wu: float
    B_abs: float
    k: float  # 1/m

    def __post_init__(self) -> None:
        if self.L < 1 or not (self.B_wu > 0 and self.B_abs > 0 and self.k > 0):
            raise NuclearDataError(f"invalid transition {self}")

    @property
    def label(self) -> str:
        return f"{self.kind}{self.L}"

    @property
    def B_si(self) -> float:
        """B in SI: C^2 m^2L (electric) or (J/T)^2 m^(2L-2) / c^2 (magnetic)."""
        if self.kind == "E":
            return self.B_abs * CONST.e**2 * FM ** (2 * self.L)
        return self.B_abs * CONST.mu_N**2 * FM ** (2 * self.L - 2) / CONST.c**2

    @property
    def energy_ev(self) -> float:
        return self.k * HBAR_C_EV_M


def partial_width(k: float, transition: MultipoleTransition) -> float:
    """Radiative width (eV) of a multipole transition with wave number ``k``.

    Standard single-photon rate
    ``lambda = 8 pi (L+1) / (L [(2L+1)!!]^2) * k^(2L+1) B / (4 pi eps0 hbar)``
    written in SI; the returned width is ``hbar * lambda``.
    """
    if not k > 0:
        raise NuclearDataError(f"wave number must be positive, got {k}")
    L = transition.L
    pref = 8.0 * math.pi * (L + 1) / (L * double_factorial(2 * L + 1) ** 2)
    width_j = pref * k ** (2 * L + 1) * transition.B_si / (4.0 * math.pi * CONST.eps0)
    return width_j / EV


@dataclass(frozen=True)
class NuclearSystem:
    """Three-level Lambda scheme; energies and widths in eV.

    ``t31`` couples |1> to |3> (pump), ``t32`` couples |2> to |3> (Stokes).
    """

    name: str
    A: int
    E1: float
    E2: float
    E3: float
    t31: MultipoleTransition
    t32: MultipoleTransition
    Gamma31: float
    Gamma32: float
    Gamma3: float
    Gamma2: float = 0.0
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not (self.E3 > self.E2 > self.E1 >= 0):
            raise NuclearDataError(
                f"{self.name}: level ordering E3 > E2 > E1 >= 0 violated "
                f"(E1={self.E1}, E2={self.E2}, E3={self.E3})"
            )
        if not (self.Gamma31 > 0 and self.Gamma32 > 0 and self.Gamma2 >= 0):
            raise NuclearDataError(f"{self.name}: widths must be positive")
        if self.Gamma3 < (self.Gamma31 + self.Gamma32) * (1 - 1e-12):
            raise NuclearDataError(
                f"{self.name}: Gamma3={self.Gamma3} eV below partial sum "
                f"{self.Gamma31 + self.Gamma32} eV"
            )

    @property
    def E31(self) -> float:
        return self.E3 - self.E1

    @property
    def E32(self) -> float:
        return self.E3 - self.E2

    @property
    def loss_width(self) -> float:
        """Width of |3> decays leaving the Lambda system."""
        return max(self.Gamma3 - self.Gamma31 - self.Gamma32, 0.0)

    def with_widths(self, **widths: float) -> "NuclearSystem":
        return replace(self, **widths)


def build_system(config: Mapping[str, Any], name: str | None = None) -> NuclearSystem:
    """Build a :class:`NuclearSystem` from a nucleus config mapping.

    Keys: ``A``, ``E1_keV``, ``E2_keV``, ``E3_keV``, ``t31`` and ``t32``
    (each ``{kind, L, B_wu}``) and optionally ``extra_loss_eV``,
    ``Gamma3_eV`` and ``Gamma2_eV``.
    """
    try:
        A = int(config["A"])
        E1 = 1e3 * float(config["E1_keV"])
        E2 = 1e3 * float(config["E2_keV"])
        E3 = 1e3 * float(config["E3_keV"])
        raw31, raw32 = config["t31"], config["t32"]
    except KeyError as exc:
        raise NuclearDataError(f"nucleus config missing key {exc.args[0]!r}") from None
    name = name or str(config.get("name", f"A={A}"))
    if not (E3 > E2 > E1 >= 0):
        raise NuclearDataError(
            f"{name}: level ordering E3 > E2 > E1 >= 0 violated (E1={E1}, E2={E2}, E3={E3} eV)"
        )

    def transition(raw: Mapping[str, Any], energy: float) -> MultipoleTransition:
        kind = _norm_kind(raw["kind"])
        L = int(raw["L"])
        B_wu = float(raw["B_wu"])
        return MultipoleTransition(
            kind=kind, L=L, B_wu=B_wu, B_abs=to_absolute(B_wu, kind, L, A), k=energy / HBAR_C_EV_M
        )

    t31 = transition(raw31, E3 - E1)
    t32 = transition(raw32, E3 - E2)
    g31 = partial_width(t31.k, t31)
    g32 = partial_width(t32.k, t32)
    if config.get("Gamma3_eV") is not None:
        g3 = float(config["Gamma3_eV"])
        if g3 < g31 + g32:
            raise NuclearDataError(
                f"{name}: Gamma3 override {g3} eV below radiative partial sum {g31 + g32} eV"
            )
    else:
        extra = float(config.get("extra_loss_eV") or 0.0)
        if extra < 0:
            raise NuclearDataError(f"{name}: extra_loss_eV must be >= 0")
        g3 = g31 + g32 + extra
    return NuclearSystem(
        name=name,
        A=A,
        E1=E1,
        E2=E2,
        E3=E3,
        t31=t31,
        t32=t32,
        Gamma31=g31,
        Gamma32=g32,
        Gamma3=g3,
        Gamma2=float(config.get("Gamma2_eV") or 0.0),
        meta=dict(config),
    )


# Level scheme data (keV, Weisskopf units) and the Stokes/pump intensity
# ratios used for each geometry.
PRESETS: dict[str, dict[str, Any]] = {
    "re185": {
        "name": "Re-185",
        "A": 185,
        "E1_keV": 0.0,
        "E2_keV": 125.0,
        "E3_keV": 284.0,
        "t31": {"kind": "E", "L": 2, "B_wu": 64.0},
        "t32": {"kind": "M", "L": 1, "B_wu": 0.37},
        "ratio": {"crossed": 0.02, "copro": 0.03},
        "regime": "i",
    },
    "tc97": {
        "name": "Tc-97",
        "A": 97,
        "E1_keV": 96.57,
        "E2_keV": 324.0,
        "E3_keV": 657.0,
        "t31": {"kind": "E", "L": 2, "B_wu": 500.0},
        "t32": {"kind": "E", "L": 1, "B_wu": 6.7e-5},
        "ratio": {"crossed": 20.82, "copro": 35.06},
        "regime": "i",
    },
    "gd154": {
        "name": "Gd-154",
        "A": 154,
        "E1_keV": 0.0,
        "E2_keV": 123.0,
        "E3_keV": 1241.0,
        "t31": {"kind": "E", "L": 1, "B_wu": 4.4e-2},
        "t32": {"kind": "E", "L": 1, "B_wu": 4.9e-2},
        "ratio": {"crossed": 0.81, "copro": 0.90},
        "regime": "ii",
    },
    "er168": {
        "name": "Er-168",
        "A": 168,
        "E1_keV": 0.0,
        "E2_keV": 79.0,
        "E3_keV": 1786.0,
        "t31": {"kind": "E", "L": 1, "B_wu": 3.2e-3},
        "t32": {"kind": "E", "L": 1, "B_wu": 9.1e-3},
        "ratio": {"crossed": 0.34, "copro": 0.35},
        "regime": "ii",
    },
}

_NUCLEUS_KEYS = ("name", "A", "E1_keV", "E2_keV", "E3_keV", "t31", "t32")


def preset_config(key: str) -> dict[str, Any]:
    try:
        data = PRESETS[key.lower()]
    except KeyError:
        raise NuclearDataError(f"unknown preset {key!r}; choose from {sorted(PRESETS)}") from None
    return {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items() if k in _NUCLEUS_KEYS}


def preset(key: str, **overrides: Any) -> NuclearSystem:
    """Build a shipped preset; ``overrides`` replace nucleus config keys."""
    cfg = preset_config(key)
    cfg.update(overrides)
    return build_system(cfg, name=cfg["name"])


def preset_ratio(key: str, geometry: str) -> float:
    return float(PRESETS[key.lower()]["ratio"][geometry])
