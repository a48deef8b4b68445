import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncpt import kinematics as K
from ncpt.constants import HBAR_C_EV_M, HBAR_EV_S
from ncpt.nuclear import preset
from reference_data import TABLE1, TOL_ES_KEV, TOL_GAMMA, TOL_THETA


@settings(max_examples=100, deadline=None)
@given(x=st.floats(1.01, 1e4))
def test_solve_gamma_round_trip(x):
    gamma = K.solve_gamma(x * 1e4, 1e4)
    assert gamma >= 1
    assert gamma * (1 + K.beta_of(gamma)) == pytest.approx(x, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(eps=st.floats(1e-6, 1e-2))
def test_solve_gamma_round_trip_near_threshold(eps):
    # d(gamma(1+beta))/d(gamma) ~ 1/sqrt(2(gamma-1)) diverges at rest, so the
    # achievable round-trip accuracy degrades like machine eps / (x - 1)
    x = 1.0 + eps
    gamma = K.solve_gamma(x, 1.0)
    assert gamma * (1 + K.beta_of(gamma)) == pytest.approx(x, abs=1e-15 / eps)


def test_solve_gamma_examples():
    assert K.solve_gamma(284e3, 12.4e3) == pytest.approx(11.47, abs=5e-3)
    assert K.solve_gamma(1786e3, 12.4e3) == pytest.approx(72.0, abs=0.05)
    assert K.solve_gamma(1.0 + 1e-9, 1.0) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(K.KinematicsError):
        K.solve_gamma(10e3, 12.4e3)


@pytest.mark.parametrize("laser", ["sxfel", "xfelo"])
def test_table1_values(preset_key, laser):
    s = preset(preset_key)
    E = K.LASERS[laser].E_photon
    g_ref, th_ref, es_ref = TABLE1[preset_key][laser]
    gamma = K.solve_gamma(s.E31, E)
    assert gamma == pytest.approx(g_ref, abs=TOL_GAMMA)
    assert K.solve_stokes_angle(s.E32, E, gamma) == pytest.approx(th_ref, abs=TOL_THETA)
    assert K.solve_stokes_energy(s.E32, gamma) / 1e3 == pytest.approx(es_ref, abs=TOL_ES_KEV)


def test_stokes_angle_resonance_and_limits():
    gamma = K.solve_gamma(1241e3, 12.4e3)
    theta = K.solve_stokes_angle(1118e3, 12.4e3, gamma)
    assert K.doppler_factor(gamma, theta) * 12.4e3 == pytest.approx(1118e3, rel=1e-12)
    assert K.solve_stokes_angle(1241e3, 12.4e3, gamma) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(K.KinematicsError, match="unreachable"):
        K.solve_stokes_angle(2000e3, 12.4e3, gamma)


def test_stokes_angle_monotonic_in_e32():
    gamma = K.solve_gamma(1241e3, 12.4e3)
    angles = [K.solve_stokes_angle(E, 12.4e3, gamma) for E in (1200e3, 1000e3, 600e3, 200e3)]
    assert all(a < b for a, b in zip(angles, angles[1:]))


def test_stokes_energy_examples():
    assert K.solve_stokes_energy(333e3, K.solve_gamma(560.43e3, 12.4e3)) / 1e3 == pytest.approx(7.37, abs=0.01)
    assert K.solve_stokes_energy(5e3, 1.0) == 5e3


def test_detuning_zero_on_resonance():
    s = preset("gd154")
    p = K.plan(s.E31, s.E32, 12.4e3, "crossed")
    pump = K.LaserPulse(p.E_pump, 1.0, 1e-13, 1e-2, theta=0.0)
    stokes = K.LaserPulse(p.E_stokes, 1.0, 1e-13, 1e-2, theta=p.theta_S)
    assert abs(K.detuning(pump, p.gamma, s.t31.k)) * HBAR_EV_S < 1e-6
    assert abs(K.detuning(stokes, p.gamma, s.t32.k)) * HBAR_EV_S < 1e-6


def test_detuning_linear_in_lab_shift():
    # gamma (1 + beta) = 22.9, lab photon shifted by +10 meV
    gamma = K.solve_gamma(22.9, 1.0)
    E = 12.4e3
    k = 22.9 * E / HBAR_C_EV_M
    shifted = K.LaserPulse(E + 0.01, 1.0, 1e-13, 1e-2)
    assert K.detuning(shifted, gamma, k) * HBAR_EV_S == pytest.approx(0.229, rel=1e-6)


def test_detuning_angle_derivative():
    gamma, theta, E = 50.0, 0.64, 12.4e3
    k = K.doppler_factor(gamma, theta) * E / HBAR_C_EV_M
    omega = E / HBAR_EV_S
    d = 1e-7
    pulse = K.LaserPulse(E, 1.0, 1e-13, 1e-2, theta=theta + d)
    analytic = -gamma * K.beta_of(gamma) * math.sin(theta) * omega * d
    assert K.detuning(pulse, gamma, k) == pytest.approx(analytic, rel=1e-5)


def test_rest_frame_transform():
    s = preset("er168")
    gamma = K.solve_gamma(s.E31, 12.4e3)
    pulse = K.LaserPulse(12.4e3, 1e20, 1e-13, 1e-2)
    r = K.to_rest_frame(pulse, gamma)
    assert r.D == pytest.approx(144.03, abs=0.01)
    assert r.omega * HBAR_EV_S == pytest.approx(s.E31, rel=1e-12)
    assert r.T == pytest.approx(0.694e-15, abs=1e-18)
    assert r.bandwidth == pytest.approx(r.D * 1e-2)
    assert r.I_peak == pytest.approx(r.D**2 * 1e20)
    # head-on D(0) and D(pi) = 1/D(0)
    assert K.doppler_factor(gamma, 0.0) * K.doppler_factor(gamma, math.pi) == pytest.approx(1.0, rel=1e-9)
    assert K.to_rest_frame(pulse, 1.0).I_peak == pulse.I_peak


def test_beta_precision_near_one():
    assert K.beta_of(1.0) == 0.0
    assert K.one_minus_beta(1e4) == pytest.approx(5e-9, rel=1e-6)
    with pytest.raises(K.KinematicsError):
        K.beta_of(0.5)


def test_plan_geometries():
    s = preset("tc97")
    copro = K.plan(s.E31, s.E32, 25e3, "copro")
    crossed = K.plan(s.E31, s.E32, 25e3, "crossed")
    assert copro.theta_S == 0 and crossed.E_stokes == 25e3
    assert copro.frame.D_stokes * copro.E_stokes == pytest.approx(s.E32, rel=1e-12)
    assert crossed.frame.D_stokes * 25e3 == pytest.approx(s.E32, rel=1e-12)
    with pytest.raises(K.KinematicsError):
        K.plan(s.E31, s.E32, 25e3, "sideways")


def test_laser_pulse_validation():
    with pytest.raises(K.KinematicsError):
        K.LaserPulse(-1.0, 1.0, 1e-13, 1e-2)
    with pytest.raises(K.KinematicsError):
        K.LaserPulse(1.0, -1.0, 1e-13, 1e-2)
