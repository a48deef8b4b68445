"""Nuclear coherent population transfer in a three-level Lambda scheme driven
by two x-ray laser pulses in the rest frame of accelerated nuclei."""

__version__ = "0.1.0"

from .nuclear import NuclearSystem, build_system, preset  # noqa: E402
from .kinematics import LASERS, FrameParams, LaserPulse, plan  # noqa: E402
from .dynamics import evolve, transfer_efficiency  # noqa: E402
from .scan import ScanContext, SweepSpec, intensity_sweep, make_context, optimize_delay  # noqa: E402

__all__ = [
    "LASERS",
    "FrameParams",
    "LaserPulse",
    "NuclearSystem",
    "ScanContext",
    "SweepSpec",
    "build_system",
    "evolve",
    "intensity_sweep",
    "make_context",
    "optimize_delay",
    "plan",
    "preset",
    "transfer_efficiency",
]
