import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint

from ncpt import _kernels, dynamics as dyn
from ncpt.constants import CONST
from ncpt.dynamics import DecayRates, DriveConfig, PulseDrive
from ncpt.kinematics import LaserPulse, solve_gamma, to_rest_frame
from ncpt.nuclear import MultipoleTransition, preset

OFF = PulseDrive(0.0, 0.0, 1.0, 0.0)


def gaussian_pair(O_p, O_s, width, delay, Dp=0.0, Ds=0.0):
    """Pump centred at +delay/2, Stokes at -delay/2 (positive delay = Stokes first)."""
    return DriveConfig(PulseDrive(O_p, delay / 2, width, Dp), PulseDrive(O_s, -delay / 2, width, Ds))


# -- Rabi frequency and envelope -------------------------------------------------

def _dims(**exps):
    return np.array([exps.get(k, 0) for k in ("kg", "m", "s", "A")], dtype=float)


def test_rabi_frequency_dimensions():
    """Omega = (1/hbar) sqrt(I B k^(2L-2) / (c eps0)) must come out in 1/s."""
    I = _dims(kg=1, s=-3)
    c = _dims(m=1, s=-1)
    eps0 = _dims(kg=-1, m=-3, s=4, A=2)
    hbar = _dims(kg=1, m=2, s=-1)
    k = _dims(m=-1)
    for L in (1, 2, 3):
        B_el = _dims(A=2, s=2, m=2 * L)  # e^2 m^2L
        omega = 0.5 * (I + B_el + (2 * L - 2) * k - c - eps0) - hbar
        assert np.allclose(omega, _dims(s=-1)), L


def test_rabi_e1_closed_form():
    t = MultipoleTransition("E", 1, 1.0, 0.5, 6.0e12)
    I = 1e22
    expected = 4 * math.sqrt(math.pi) / CONST.hbar * math.sqrt(2 * I * t.B_si / (CONST.c * CONST.eps0)) / 3
    assert dyn.rabi_peak(I, t) == pytest.approx(expected, rel=1e-14)
    assert dyn.rabi_peak(I, t, D=7.0) == pytest.approx(7.0 * expected, rel=1e-14)
    assert dyn.rabi_peak(4 * I, t) == pytest.approx(2 * expected, rel=1e-14)


def test_effective_intensity_clamps():
    assert dyn.effective_intensity(10.0, 1.0, 4.0) == 2.5
    assert dyn.effective_intensity(10.0, 5.0, 4.0) == 10.0


def test_strict_and_rest_modes_agree():
    s = preset("gd154")
    gamma = solve_gamma(s.E31, 12.4e3)
    pulse = LaserPulse(12.4e3, 1e22, 1e-13, 1e-2)
    strict = dyn.pulse_drive(pulse, s.t31, gamma, s.Gamma3, "strict")
    rest = dyn.pulse_drive(pulse, s.t31, gamma, s.Gamma3, "rest")
    assert rest.Omega0 == pytest.approx(strict.Omega0, rel=1e-12)
    with pytest.raises(ValueError):
        dyn.pulse_drive(pulse, s.t31, gamma, s.Gamma3, "bogus")


def test_envelope_shape_and_area():
    O0, tau, T, D = 3.0e15, 2e-16, 1e-13, 50.0
    r = to_rest_frame(LaserPulse(1e4, 1.0, T, 1e-2), solve_gamma(50 * 1e4, 1e4))
    w = math.sqrt(2) * T / D
    assert dyn.rabi_envelope(tau, O0, tau, T, D) == O0
    assert dyn.rabi_envelope(tau + w, O0, tau, T, D) == pytest.approx(O0 / math.e, rel=1e-12)
    area, _ = sint.quad(lambda t: dyn.rabi_envelope(t, O0, tau, T, D), tau - 20 * w, tau + 20 * w, points=[tau])
    assert area == pytest.approx(O0 * w * math.sqrt(math.pi), rel=1e-10)
    assert r.T == pytest.approx(T / r.D)


# -- Hamiltonian and relaxation --------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(
    Op=st.floats(0, 1e16), Os=st.floats(0, 1e16), dp=st.floats(-1e15, 1e15),
    ds=st.floats(-1e15, 1e15), t=st.floats(-1e-14, 1e-14),
)
def test_hamiltonian_hermitian(Op, Os, dp, ds, t):
    drives = DriveConfig(PulseDrive(Op, 0.0, 1e-15, dp), PulseDrive(Os, 1e-15, 2e-15, ds))
    H = dyn.hamiltonian(t, drives)
    assert np.allclose(H, H.conj().T, rtol=0, atol=0)


def test_hamiltonian_two_photon_resonance():
    H = dyn.hamiltonian(0.0, gaussian_pair(1e15, 2e15, 1e-15, 0.0, Dp=5e13, Ds=5e13))
    assert H[1, 1] == 0
    assert H[2, 2] == pytest.approx(-5e13)
    assert H[2, 0] == pytest.approx(-0.5e15) and H[2, 1] == pytest.approx(-1e15)


def _random_rho(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = a @ a.conj().T
    return 0.9 * rho / np.trace(rho).real


@pytest.mark.parametrize("rhs", ["numpy", "numba"])
def test_kernel_rhs_matches_reference(rhs):
    rng = np.random.default_rng(1)
    fn = _kernels.rhs_numpy if rhs == "numpy" else _kernels.rhs_numba
    for _ in range(20):
        drives = gaussian_pair(*rng.uniform(0, 1e15, 2), 1e-15, rng.uniform(-2e-15, 2e-15),
                               *rng.uniform(-1e14, 1e14, 2))
        rates = DecayRates(*rng.uniform(0, 1e14, 5))
        rates = rates._replace(g3=rates.g31 + rates.g32 + rates.g3)
        rho = _random_rho(rng)
        t = rng.uniform(-2e-15, 2e-15)
        y = np.zeros(10, complex)
        y[:9] = rho.ravel()
        dy = np.zeros(10, complex)
        fn(t, y, dyn._param_vector(drives, rates, 1.0), dy)
        ref = dyn.liouvillian_rhs(t, rho, drives, rates)
        scale = np.abs(ref).max()
        assert np.abs(dy[:9].reshape(3, 3) - ref).max() <= 1e-13 * scale
        # trace of rho plus loss is conserved by the generator
        assert abs(np.trace(dy[:9].reshape(3, 3)) + dy[9]) <= 1e-13 * scale


def test_decay_branching_closed_form():
    g31, g32, loss = 3e12, 1e12, 0.5e12
    rates = DecayRates(g31 + g32 + loss, g31, g32, 0.0, 2e11)
    g3 = rates.g3
    rho0 = np.zeros((3, 3), complex)
    rho0[0, 0] = rho0[2, 2] = 0.5
    rho0[0, 2] = rho0[2, 0] = 0.5
    t = np.linspace(0, 3e-12, 31)
    traj = dyn.evolve_drives(DriveConfig(OFF, OFF), rates, t_eval=t, rho0=rho0)
    decayed = 0.5 * (1 - np.exp(-g3 * t))
    pops = traj.populations()
    assert np.allclose(pops[:, 0], 0.5 + g31 / g3 * decayed, atol=1e-9)
    assert np.allclose(pops[:, 1], g32 / g3 * decayed, atol=1e-9)
    assert np.allclose(pops[:, 2], 0.5 * np.exp(-g3 * t), atol=1e-9)
    assert np.allclose(traj.p_loss, loss / g3 * decayed, atol=1e-9)
    assert np.allclose(traj.rho[:, 0, 2], 0.5 * np.exp(-(0.5 * g3 + 2e11) * t), atol=1e-9)


# -- coherent evolution oracles --------------------------------------------------

def test_rabi_oscillation_constant_drive():
    omega = 2e15
    period = 2 * math.pi / omega
    drives = DriveConfig(PulseDrive(omega, 0.0, 1.0, 0.0, flat=True), OFF)
    t = np.linspace(0, 10 * period, 2001)
    traj = dyn.evolve_drives(drives, t_eval=t)
    err = np.abs(traj.populations()[:, 2] - np.sin(omega * t / 2) ** 2).max()
    assert err < 1e-6


@pytest.mark.parametrize("area,expect_peak,expect_final", [(math.pi, 1.0, 1.0), (2 * math.pi, 1.0, 0.0)])
def test_pulse_area_theorem(area, expect_peak, expect_final):
    w = 1e-15
    drives = DriveConfig(PulseDrive(area / (math.sqrt(math.pi) * w), 0.0, w, 0.0), OFF)
    traj = dyn.evolve_drives(drives, n_samples=401)
    assert traj.max_rho33 == pytest.approx(expect_peak, abs=1e-4)
    assert traj.final.rho[2, 2].real == pytest.approx(expect_final, abs=1e-4)


def test_stirap_counterintuitive_transfer():
    w = 1e-15
    O = 60 / w
    traj = dyn.evolve_drives(gaussian_pair(O, O, w, 1.2 * w))
    assert dyn.transfer_efficiency(traj) >= 0.999
    assert traj.max_rho33 < 0.05  # the dark state keeps |3> nearly empty


def test_sequential_pi_pulses_transfer():
    w = 1e-15
    O = math.sqrt(math.pi) / w
    traj = dyn.evolve_drives(gaussian_pair(O, O, w, -8 * w))
    assert dyn.transfer_efficiency(traj) >= 0.999
    assert traj.max_rho33 == pytest.approx(1.0, abs=1e-3)


def test_dark_state_is_conserved():
    w, delay = 1e-15, 1.0e-15
    O = 200 / w
    drives = gaussian_pair(O, O, w, delay)
    traj = dyn.evolve_drives(drives, n_samples=801)
    t = traj.t
    # tan(Theta) = Omega_p / Omega_S for equal widths and amplitudes
    log_ratio = -(((t - delay / 2) / w) ** 2) + ((t + delay / 2) / w) ** 2
    theta = np.arctan(np.exp(np.clip(log_ratio, -700, 700)))
    dark = np.stack([np.cos(theta), -np.sin(theta), np.zeros_like(t)], axis=1)
    p_dark = np.einsum("ni,nij,nj->n", dark, traj.rho, dark).real
    assert p_dark.min() >= 1 - 1e-3


def test_time_reversal_recovers_initial_state():
    w = 1e-15
    drives = gaussian_pair(2.1 / w, 3.3 / w, w, 0.7 * w, Dp=4e14, Ds=-2e14)
    t0, t1 = -6 * w, 6 * w
    fwd = dyn.evolve_drives(drives, t_span=(t0, t1), n_samples=2, rtol=1e-11, atol=1e-14)
    mirrored = DriveConfig(drives.pump._replace(tau=-drives.pump.tau), drives.stokes._replace(tau=-drives.stokes.tau))
    back = dyn.evolve_drives(
        mirrored, t_span=(-t1, -t0), n_samples=2, rho0=fwd.final.rho, h_sign=-1.0, rtol=1e-11, atol=1e-14
    )
    assert np.abs(back.final.rho - dyn.initial_state()[:9].reshape(3, 3)).max() < 1e-6


# -- integrator behaviour --------------------------------------------------------

def _gd_drives(I=1e19):
    s = preset("gd154")
    gamma = solve_gamma(s.E31, 25e3)
    stokes_E = s.E32 / (s.E31 / 25e3)
    tau = 1e-14
    return s, dyn.make_drives(
        s, gamma,
        LaserPulse(25e3, I * 1e4, 1e-12, 1e-3, tau=-tau),
        LaserPulse(stokes_E, 0.9 * I * 1e4, 1e-12, 1e-3, tau=tau),
    )


def test_tolerance_halving_converges():
    s, drives = _gd_drives()
    rates = DecayRates.of(s)
    coarse = dyn.evolve_drives(drives, rates, rtol=1e-8, atol=1e-11)
    fine = dyn.evolve_drives(drives, rates, rtol=5e-9, atol=5e-12)
    # global error is bounded by the accumulated local tolerance
    bound = coarse.n_steps * 1e-8
    assert abs(dyn.transfer_efficiency(fine) - dyn.transfer_efficiency(coarse)) < bound


def test_fixed_step_matches_adaptive():
    s, drives = _gd_drives()
    rates = DecayRates.of(s)
    adaptive = dyn.evolve_drives(drives, rates)
    lo, hi = dyn.default_span(drives)
    fixed = dyn.evolve_drives(drives, rates, fixed_step=(hi - lo) / 20000)
    assert dyn.transfer_efficiency(fixed) == pytest.approx(dyn.transfer_efficiency(adaptive), abs=1e-7)


def test_backends_agree():
    s, drives = _gd_drives()
    p = dyn._param_vector(drives, DecayRates.of(s), 1.0)
    t = np.linspace(*dyn.default_span(drives), 51)
    y0 = dyn.initial_state()
    a = _kernels.integrate_numpy(y0, t, p, 1e-9, 1e-12, 0.25 * drives.pump.width, 0.0, 10**6)
    b = _kernels.integrate_numba(y0, t, p, 1e-9, 1e-12, 0.25 * drives.pump.width, 0.0, 10**6)
    assert a[1] == b[1] == _kernels.STATUS_OK
    assert np.abs(a[0] - b[0]).max() < 1e-12


def test_backend_flag(monkeypatch):
    monkeypatch.setenv("NCPT_NUMBA", "0")
    assert _kernels.backend() == "numpy"
    traj = dyn.evolve_drives(gaussian_pair(1e15, 1e15, 1e-15, 0.0), n_samples=3)
    assert traj.backend == "numpy"
    monkeypatch.setenv("NCPT_NUMBA", "1")
    assert _kernels.backend() == ("numba" if _kernels.HAVE_NUMBA else "numpy")


def test_step_underflow_raises():
    drives = DriveConfig(PulseDrive(1e40, 0.0, 1.0, 0.0), OFF)
    with pytest.raises(dyn.IntegrationError) as info:
        dyn.evolve_drives(drives, t_span=(-1.0, 1.0))
    assert info.value.t_fail is not None


def test_step_budget_status():
    drives = gaussian_pair(1e15, 1e15, 1e-15, 0.0)
    p = dyn._param_vector(drives, dyn.LOSSLESS, 1.0)
    res = _kernels.integrate(dyn.initial_state(), np.linspace(-6e-15, 6e-15, 3), p, max_steps=5)
    assert res[1] == _kernels.STATUS_MAX_STEPS


def test_invariant_violation_detected():
    bad = dyn.DensityMatrix(np.diag([1.2, -0.2, 0.0]).astype(complex), 0.0, 0.0)
    assert bad.violations()["min_eigenvalue"] < 0
    with pytest.raises(dyn.InvariantError):
        bad.check()


def test_evolution_is_fast():
    s, drives = _gd_drives()
    rates = DecayRates.of(s)
    start = time.perf_counter()
    for _ in range(10):
        dyn.evolve_drives(drives, rates, n_samples=2)
    assert (time.perf_counter() - start) / 10 < 0.5
