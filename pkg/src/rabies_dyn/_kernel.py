"""Compiled fast path: the model RHS and a sampled Dormand-Prince loop.

Mirrors ``model.rhs_values`` and ``integrator._run`` operation-for-operation so
results agree with the pure-Python path to rounding. Parameters travel as a
float64 array in ``model.PARAM_NAMES`` order.
"""
import math

import numpy as np
from numba import njit

# Positions in the parameter array (PARAM_NAMES order).
(THETA1, THETA2, THETA3, TAU1, TAU2, TAU3, KAPPA1, KAPPA2, KAPPA3, PSI1, PSI2, PSI3,
 BETA1, BETA2, BETA3, GAMMA, GAMMA1, GAMMA2, GAMMA3, MU1, MU2, MU3, MU4,
 SIGMA1, SIGMA2, SIGMA3, NU1, NU2, NU3, RHO1, RHO2, RHO3, C) = range(33)

# Forced-rate slots, in the order of forcing.FORCEABLE.
FORCED_SLOTS = np.array([TAU1, TAU2, TAU3, KAPPA1, KAPPA2, KAPPA3,
                         PSI1, PSI2, PSI3, NU1, NU2, NU3], dtype=np.int64)

_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

STATUS_OK = 0
STATUS_BUDGET = 1
STATUS_NONFINITE = 2
STATUS_UNDERFLOW = 3


@njit(cache=True)
def _rates_at(p, forcing, mask, t):
    # forcing = (amplitude, period, phase)
    if forcing[0] == 0.0:
        return p
    q = p.copy()
    factor = 1.0 + forcing[0] * math.sin(2.0 * math.pi * np.fmod(t, forcing[1]) / forcing[1]
                                          + forcing[2])
    for j in range(12):
        if mask[j]:
            q[FORCED_SLOTS[j]] = p[FORCED_SLOTS[j]] * factor
    return q


@njit(cache=True)
def rhs_kernel(t, y, p, forcing, mask):
    q = _rates_at(p, forcing, mask, t)
    s_h, e_h, i_h, r_h = y[0], y[1], y[2], y[3]
    s_f, e_f, i_f = y[4], y[5], y[6]
    s_d, e_d, i_d, r_d = y[7], y[8], y[9], y[10]
    m = y[11]
    lam = m / (m + q[C])
    chi1 = (q[TAU1] * i_f + q[TAU2] * i_d + q[TAU3] * lam) * s_h
    chi2 = (q[KAPPA1] * i_f + q[KAPPA2] * i_d + q[KAPPA3] * lam) * s_f
    chi3 = (
        q[PSI1] * i_f / (1.0 + q[RHO1])
        + q[PSI2] * i_d / (1.0 + q[RHO2])
        + q[PSI3] * lam / (1.0 + q[RHO3])
    ) * s_d
    out = np.empty(12)
    out[0] = q[THETA1] + q[BETA3] * r_h - q[MU1] * s_h - chi1
    out[1] = chi1 - (q[MU1] + q[BETA1] + q[BETA2]) * e_h
    out[2] = q[BETA1] * e_h - (q[SIGMA1] + q[MU1]) * i_h
    out[3] = q[BETA2] * e_h - (q[BETA3] + q[MU1]) * r_h
    out[4] = q[THETA2] - chi2 - q[MU2] * s_f
    out[5] = chi2 - (q[MU2] + q[GAMMA]) * e_f
    out[6] = q[GAMMA] * e_f - (q[MU2] + q[SIGMA2]) * i_f
    out[7] = q[THETA3] - q[MU3] * s_d - chi3 + q[GAMMA3] * r_d
    out[8] = chi3 - (q[MU3] + q[GAMMA1] + q[GAMMA2]) * e_d
    out[9] = q[GAMMA1] * e_d - (q[MU3] + q[SIGMA3]) * i_d
    out[10] = q[GAMMA2] * e_d - (q[MU3] + q[GAMMA3]) * r_d
    out[11] = (q[NU1] * i_h + q[NU2] * i_f + q[NU3] * i_d) - q[MU4] * m
    return out


@njit(cache=True)
def integrate_samples(y0, times, p, forcing, mask, rtol, atol, h_init, h_max, max_steps):
    """Returns ``(states, status, last_time)``; rows past a failure are NaN."""
    n = times.shape[0]
    states = np.full((n, 12), np.nan)
    y = y0.copy()
    states[0] = y
    t = times[0]
    k1 = rhs_kernel(t, y, p, forcing, mask)
    h = h_init
    err_prev = 1.0
    steps = 0
    rejected_last = False
    eps = np.finfo(np.float64).eps
    for s in range(1, n):
        stop = times[s]
        while t < stop:
            if steps >= max_steps:
                return states, STATUS_BUDGET, t
            h = min(h, h_max)
            remaining = stop - t
            hit_stop = h >= remaining * (1.0 - 1e-12)
            h_try = remaining if hit_stop else h
            if h_try <= 16 * eps * max(1.0, abs(t)):
                return states, STATUS_UNDERFLOW, t
            k2 = rhs_kernel(t + _C2 * h_try, y + h_try * (_A21 * k1), p, forcing, mask)
            k3 = rhs_kernel(t + _C3 * h_try, y + h_try * (_A31 * k1 + _A32 * k2), p, forcing, mask)
            k4 = rhs_kernel(t + _C4 * h_try, y + h_try * (_A41 * k1 + _A42 * k2 + _A43 * k3),
                            p, forcing, mask)
            k5 = rhs_kernel(t + _C5 * h_try,
                            y + h_try * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
                            p, forcing, mask)
            k6 = rhs_kernel(t + h_try,
                            y + h_try * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
                            p, forcing, mask)
            y_new = y + h_try * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            k7 = rhs_kernel(t + h_try, y_new, p, forcing, mask)
            err_vec = h_try * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            steps += 1
            err = 0.0
            finite = True
            for i in range(12):
                if not np.isfinite(y_new[i]):
                    finite = False
                sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
                e = abs(err_vec[i]) / sc
                if not np.isfinite(e):
                    finite = False
                elif e > err:
                    err = e
            if not finite:
                if h_try < 1e-10 * max(1.0, abs(t)):
                    return states, STATUS_NONFINITE, t
                h = h_try * 0.2
                rejected_last = True
                continue
            if err <= 1.0:
                t = stop if hit_stop else t + h_try
                y = y_new
                k1 = k7
                err_c = max(err, 1e-4)
                fac = 0.9 * err_c ** (-(0.2 - 0.75 * 0.04)) * err_prev ** 0.04
                fac = min(10.0, max(0.2, fac))
                if rejected_last:
                    fac = min(fac, 1.0)
                h = max(h_try * fac, h) if hit_stop else h_try * fac
                err_prev = err_c
                rejected_last = False
            else:
                fac = max(0.2, 0.9 * err ** (-(0.2 - 0.75 * 0.04)))
                h = h_try * min(1.0, fac)
                rejected_last = True
        states[s] = y
    return states, STATUS_OK, t
