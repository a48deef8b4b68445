"""Adaptive Dormand-Prince 5(4) integration of the three-level Liouville equation.

One driver is written in plain Python and instantiated twice: compiled with
numba around a scalar-loop right-hand side, and interpreted around a
vectorised numpy right-hand side.  ``NCPT_NUMBA=0`` (or a missing numba)
selects the numpy path.

State vector ``y`` (complex, length 10): rho in row-major order followed by
the accumulated loss population.  Parameter vector ``p`` (float, length 16)::

    0 Omega_p   1 tau_p   2 w_p   3 Omega_S   4 tau_S   5 w_S
    6 Delta_p   7 Delta_S 8 g3    9 g31      10 g32    11 g2
    12 g_deph  13 h_sign 14 flat_p 15 flat_S

Envelopes are ``Omega * exp(-((t - tau) / w)^2)`` unless the flat flag is set.
"""

from __future__ import annotations

import math
import os

import numpy as np

N_STATE = 10
N_PARAM = 16

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th minus embedded 4th order weights
_E1 = 71 / 57600
_E3 = -71 / 16695
_E4 = 71 / 1920
_E5 = -17253 / 339200
_E6 = 22 / 525
_E7 = -1 / 40


def _rhs_loops(t, y, p, dy):
    Op = p[0]
    if p[14] == 0.0:
        x = (t - p[1]) / p[2]
        Op = Op * math.exp(-x * x)
    Os = p[3]
    if p[15] == 0.0:
        x = (t - p[4]) / p[5]
        Os = Os * math.exp(-x * x)
    m11 = 2.0 * (p[6] - p[7])
    m22 = 2.0 * p[6]
    half = 0.5j * p[13]
    r00, r01, r02 = y[0], y[1], y[2]
    r10, r11, r12 = y[3], y[4], y[5]
    r20, r21, r22 = y[6], y[7], y[8]
    # d rho / dt = (i/2)[M, rho] with M = [[0,0,Op],[0,m11,Os],[Op,Os,m22]]
    dy[0] = half * (Op * r20 - r02 * Op)
    dy[1] = half * (Op * r21 - r01 * m11 - r02 * Os)
    dy[2] = half * (Op * r22 - r00 * Op - r01 * Os - r02 * m22)
    dy[3] = half * (m11 * r10 + Os * r20 - r12 * Op)
    dy[4] = half * (m11 * r11 + Os * r21 - r11 * m11 - r12 * Os)
    dy[5] = half * (m11 * r12 + Os * r22 - r10 * Op - r11 * Os - r12 * m22)
    dy[6] = half * (Op * r00 + Os * r10 + m22 * r20 - r22 * Op)
    dy[7] = half * (Op * r01 + Os * r11 + m22 * r21 - r21 * m11 - r22 * Os)
    dy[8] = half * (Op * r02 + Os * r12 + m22 * r22 - r20 * Op - r21 * Os - r22 * m22)
    g3, g31, g32, g2, gd = p[8], p[9], p[10], p[11], p[12]
    p33 = r22.real
    p22 = r11.real
    dy[0] += g31 * p33
    dy[4] += g32 * p33 - g2 * p22
    dy[8] -= g3 * p33
    d12 = 0.5 * g2 + gd
    d13 = 0.5 * g3 + gd
    d23 = 0.5 * (g3 + g2) + gd
    dy[1] -= d12 * r01
    dy[3] -= d12 * r10
    dy[2] -= d13 * r02
    dy[6] -= d13 * r20
    dy[5] -= d23 * r12
    dy[7] -= d23 * r21
    dy[9] = (g3 - g31 - g32) * p33 + g2 * p22


_DEPH_MASK = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])


def _rhs_numpy(t, y, p, dy):
    Op = p[0] if p[14] else p[0] * math.exp(-(((t - p[1]) / p[2]) ** 2))
    Os = p[3] if p[15] else p[3] * math.exp(-(((t - p[4]) / p[5]) ** 2))
    M = np.array([[0.0, 0.0, Op], [0.0, 2.0 * (p[6] - p[7]), Os], [Op, Os, 2.0 * p[6]]])
    rho = y[:9].reshape(3, 3)
    drho = 0.5j * p[13] * (M @ rho - rho @ M)
    g3, g31, g32, g2, gd = p[8], p[9], p[10], p[11], p[12]
    # coherence damping: half-sum of level decay rates plus pure dephasing
    level = np.array([0.0, g2, g3])
    drho -= (0.5 * (level[:, None] + level[None, :]) + gd * _DEPH_MASK) * rho * (1.0 - np.eye(3))
    p33, p22 = rho[2, 2].real, rho[1, 1].real
    drho[0, 0] += g31 * p33
    drho[1, 1] += g32 * p33 - g2 * p22
    drho[2, 2] -= g3 * p33
    dy[:9] = drho.ravel()
    dy[9] = (g3 - g31 - g32) * p33 + g2 * p22


def _make_driver(rhs):
    def integrate(y0, t_eval, p, rtol, atol, h_max, h_fixed, max_steps):
        n_out = t_eval.shape[0]
        out = np.zeros((n_out, N_STATE), dtype=np.complex128)
        y = y0.copy()
        out[0, :] = y
        k1 = np.zeros(N_STATE, dtype=np.complex128)
        k2 = np.zeros(N_STATE, dtype=np.complex128)
        k3 = np.zeros(N_STATE, dtype=np.complex128)
        k4 = np.zeros(N_STATE, dtype=np.complex128)
        k5 = np.zeros(N_STATE, dtype=np.complex128)
        k6 = np.zeros(N_STATE, dtype=np.complex128)
        k7 = np.zeros(N_STATE, dtype=np.complex128)
        ytmp = np.zeros(N_STATE, dtype=np.complex128)
        ynew = np.zeros(N_STATE, dtype=np.complex128)
        t = t_eval[0]
        span = abs(t_eval[n_out - 1] - t_eval[0])
        adaptive = h_fixed <= 0.0
        if adaptive:
            h = min(h_max, span) * 1e-2
        else:
            h = h_fixed
        if h <= 0.0:
            h = 1.0
        max_r33 = y[8].real
        n_steps = 0
        n_rej = 0
        status = STATUS_OK
        t_fail = 0.0
        rhs(t, y, p, k1)
        for i_out in range(1, n_out):
            t_target = t_eval[i_out]
            while t < t_target:
                if n_steps + n_rej >= max_steps:
                    status = STATUS_MAX_STEPS
                    t_fail = t
                    break
                step = min(h, t_target - t)
                last = step >= t_target - t
                for i in range(N_STATE):
                    ytmp[i] = y[i] + step * _A21 * k1[i]
                rhs(t + _C2 * step, ytmp, p, k2)
                for i in range(N_STATE):
                    ytmp[i] = y[i] + step * (_A31 * k1[i] + _A32 * k2[i])
                rhs(t + _C3 * step, ytmp, p, k3)
                for i in range(N_STATE):
                    ytmp[i] = y[i] + step * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
                rhs(t + _C4 * step, ytmp, p, k4)
                for i in range(N_STATE):
                    ytmp[i] = y[i] + step * (
                        _A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i]
                    )
                rhs(t + _C5 * step, ytmp, p, k5)
                for i in range(N_STATE):
                    ytmp[i] = y[i] + step * (
                        _A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i]
                    )
                rhs(t + step, ytmp, p, k6)
                for i in range(N_STATE):
                    ynew[i] = y[i] + step * (
                        _B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i]
                    )
                rhs(t + step, ynew, p, k7)
                err = 0.0
                if adaptive:
                    for i in range(N_STATE):
                        e = step * (
                            _E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                            + _E6 * k6[i] + _E7 * k7[i]
                        )
                        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                        r = abs(e) / sc
                        if r > err:
                            err = r
                if err <= 1.0:
                    n_steps += 1
                    if last:
                        t = t_target
                    else:
                        t = t + step
                    for i in range(N_STATE):
                        y[i] = ynew[i]
                        k1[i] = k7[i]
                    if y[8].real > max_r33:
                        max_r33 = y[8].real
                    if adaptive:
                        if err == 0.0:
                            fac = 5.0
                        else:
                            fac = min(5.0, 0.9 * err ** -0.2)
                        if not last:
                            h = min(step * fac, h_max)
                        elif fac < 1.0:
                            # clipped step landing on an output time
                            h = min(h, step * fac)
                else:
                    n_rej += 1
                    h = step * max(0.2, 0.9 * err ** -0.2)
                    if h < 1e-14 * max(abs(t), span):
                        status = STATUS_UNDERFLOW
                        t_fail = t
                        break
            if status != STATUS_OK:
                break
            out[i_out, :] = y
        return out, status, t_fail, n_steps, n_rej, max_r33

    return integrate


integrate_numpy = _make_driver(_rhs_numpy)
rhs_numpy = _rhs_numpy


def _use_numba() -> bool:
    flag = os.environ.get("NCPT_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None

HAVE_NUMBA = _nb is not None

if HAVE_NUMBA:
    rhs_numba = _nb.njit(cache=True)(_rhs_loops)
    integrate_numba = _nb.njit(cache=True)(_make_driver(rhs_numba))
else:  # pragma: no cover
    rhs_numba = _rhs_loops
    integrate_numba = None


def backend() -> str:
    return "numba" if HAVE_NUMBA and _use_numba() else "numpy"


def integrate(y0, t_eval, p, rtol=1e-9, atol=1e-12, h_max=np.inf, h_fixed=0.0, max_steps=10_000_000):
    """Integrate from ``t_eval[0]`` and sample at every ``t_eval``.

    Returns ``(samples, status, t_fail, n_accepted, n_rejected, max_rho33)``.
    """
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    t_eval = np.ascontiguousarray(t_eval, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    fn = integrate_numba if backend() == "numba" else integrate_numpy
    return fn(y0, t_eval, p, float(rtol), float(atol), float(h_max), float(h_fixed), int(max_steps))
