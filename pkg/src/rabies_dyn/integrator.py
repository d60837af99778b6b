"""Explicit Dormand-Prince 5(4) integration with PI step-size control."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import IntegrationError, NonFiniteState, StepBudgetExceeded
from .model import StateVector

RhsFunction = Callable[[float, np.ndarray], np.ndarray]

# Butcher tableau. Stage 7 is evaluated at the accepted point, so it doubles as
# stage 1 of the next step (first-same-as-last).
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# Fifth-order minus embedded fourth-order weights.
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
PI_BETA = 0.04
PI_ALPHA = 0.2 - 0.75 * PI_BETA


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-8
    h_init: float = 1e-3
    h_max: float = 1.0
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be > 0")
        if not (0 < self.h_init <= self.h_max):
            raise ValueError("need 0 < h_init <= h_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray   # shape (n,)
    states: np.ndarray  # shape (n, dim)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state(self, i: int) -> StateVector:
        return StateVector.from_array(self.states[i])

    def column(self, index: int) -> np.ndarray:
        return self.states[:, index]


def dopri_step(f: RhsFunction, t: float, y: np.ndarray, k1: np.ndarray, h: float):
    """One Dormand-Prince step. Returns ``(y_new, k7, err_vec)``; ``k7`` is
    f(t+h, y_new) and ``err_vec`` the (unscaled) local error estimate."""
    k2 = f(t + _C2 * h, y + h * (_A21 * k1))
    k3 = f(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
    k4 = f(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
    k5 = f(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
    k6 = f(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
    y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = f(t + h, y_new)
    err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    return y_new, k7, err


def _as_vector(y0) -> np.ndarray:
    if isinstance(y0, StateVector):
        return y0.to_array()
    y = np.array(y0, dtype=float, ndmin=1)
    return y


def _run(f: RhsFunction, y0, t0: float, stops: Sequence[float], cfg: IntegratorConfig,
         record_steps: bool) -> Trajectory:
    y = _as_vector(y0)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite", t0)
    times = [t0]
    states = [y.copy()]

    t = t0
    k1 = np.asarray(f(t, y), dtype=float)
    h = cfg.h_init
    err_prev = 1.0
    steps = 0
    rejected_last = False

    for stop in stops:
        while t < stop:
            if steps >= cfg.max_steps:
                raise StepBudgetExceeded(f"step budget of {cfg.max_steps} exhausted at t={t}", t)
            h = min(h, cfg.h_max)
            remaining = stop - t
            hit_stop = h >= remaining * (1.0 - 1e-12)
            h_try = remaining if hit_stop else h
            if h_try <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t}", t)

            # Non-finite stages are handled below, so keep numpy quiet about them.
            with np.errstate(invalid="ignore", over="ignore"):
                y_new, k7, err_vec = dopri_step(f, t, y, k1, h_try)
                scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
                err = float(np.max(np.abs(err_vec) / scale))
            steps += 1

            if not math.isfinite(err) or not np.all(np.isfinite(y_new)):
                if h_try < 1e-10 * max(1.0, abs(t)):
                    raise NonFiniteState(f"state became non-finite near t={t}", t)
                h = h_try * FAC_MIN
                rejected_last = True
                continue

            if err <= 1.0:
                t = stop if hit_stop else t + h_try
                y = y_new
                k1 = k7
                err_c = max(err, 1e-4)
                fac = SAFETY * err_c ** (-PI_ALPHA) * err_prev ** PI_BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
                if rejected_last:
                    fac = min(fac, 1.0)
                # A step truncated to land on a stop must not shrink the next one.
                h = max(h_try * fac, h) if hit_stop else h_try * fac
                err_prev = err_c
                rejected_last = False
                if record_steps and t != stop:
                    times.append(t)
                    states.append(y.copy())
            else:
                fac = max(FAC_MIN, SAFETY * err ** (-PI_ALPHA))
                h = h_try * min(1.0, fac)
                rejected_last = True
        times.append(t)
        states.append(y.copy())
    return Trajectory(np.array(times), np.array(states))


def integrate_adaptive(f: RhsFunction, y0, t0: float, t1: float,
                       cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate from ``t0`` to ``t1`` keeping every accepted step.

    Both endpoints are in the trajectory exactly; the first state is ``y0``.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    return _run(f, y0, float(t0), [float(t1)], cfg, record_steps=True)


def integrate_at(f: RhsFunction, y0, sample_times: Sequence[float],
                 cfg: IntegratorConfig = IntegratorConfig(), use_kernel: bool = True) -> Trajectory:
    """Integrate and report the state exactly at ``sample_times``.

    The first sample time is the initial time. Steps are truncated to land on
    each sample instead of interpolating. Model right-hand sides (anything
    with ``kernel_args``) run through the compiled loop unless ``use_kernel``
    is false; both paths take identical steps.
    """
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or len(ts) == 0:
        raise ValueError("sample_times must be a non-empty 1-d sequence")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample_times must be strictly increasing")
    if len(ts) == 1:
        y = _as_vector(y0)
        return Trajectory(ts.copy(), y[None, :].copy())
    if use_kernel and hasattr(f, "kernel_args"):
        return _integrate_kernel(f, y0, ts, cfg)
    traj = _run(f, y0, float(ts[0]), [float(s) for s in ts[1:]], cfg, record_steps=False)
    return Trajectory(ts.copy(), traj.states)


def _integrate_kernel(f, y0, ts: np.ndarray, cfg: IntegratorConfig) -> Trajectory:
    from . import _kernel

    p_arr, forcing, mask = f.kernel_args
    y = _as_vector(y0)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("initial state is not finite", float(ts[0]))
    states, status, last_t = _kernel.integrate_samples(
        y, ts, p_arr, forcing, mask, cfg.rtol, cfg.atol, cfg.h_init, cfg.h_max, cfg.max_steps
    )
    if status == _kernel.STATUS_BUDGET:
        raise StepBudgetExceeded(f"step budget of {cfg.max_steps} exhausted at t={last_t}", last_t)
    if status == _kernel.STATUS_NONFINITE:
        raise NonFiniteState(f"state became non-finite near t={last_t}", last_t)
    if status == _kernel.STATUS_UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={last_t}", last_t)
    states[0] = y
    return Trajectory(ts.copy(), states)


def integrate_fixed(f: RhsFunction, y0, t0: float, t1: float, n_steps: int) -> Trajectory:
    """Fixed-step fifth-order propagation (no error control); used for order checks."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    y = _as_vector(y0)
    h = (t1 - t0) / n_steps
    times = [float(t0)]
    states = [y.copy()]
    k1 = np.asarray(f(t0, y), dtype=float)
    for i in range(n_steps):
        t = t0 + i * h
        y, k1, _ = dopri_step(f, t, y, k1, h)
        times.append(t0 + (i + 1) * h if i + 1 < n_steps else float(t1))
        states.append(y.copy())
    return Trajectory(np.array(times), np.array(states))
