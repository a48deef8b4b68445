"""Shared fixtures and the acceptance-criteria summary."""

from __future__ import annotations

import pytest

from ncpt import dynamics, nuclear

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (bool(passed), detail)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernel once so per-test timings exclude JIT cost."""
    drives = dynamics.DriveConfig(
        dynamics.PulseDrive(1.0, 0.0, 1.0, 0.0), dynamics.PulseDrive(1.0, 0.0, 1.0, 0.0)
    )
    dynamics.evolve_drives(drives, n_samples=2)


@pytest.fixture(params=sorted(nuclear.PRESETS))
def preset_key(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} - {detail}")
