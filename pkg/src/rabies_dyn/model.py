"""Twelve-compartment rabies model: state layout, parameters, forces of infection, RHS.

Compartments (fixed order, shared by every other module)::

    S_H E_H I_H R_H | S_F E_F I_F | S_D E_D I_D R_D | M

Time is measured in years and every rate is per year.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

COMPARTMENTS = (
    "S_H", "E_H", "I_H", "R_H",
    "S_F", "E_F", "I_F",
    "S_D", "E_D", "I_D", "R_D",
    "M",
)
N_STATE = len(COMPARTMENTS)
INDEX = {name: i for i, name in enumerate(COMPARTMENTS)}

S_H, E_H, I_H, R_H, S_F, E_F, I_F, S_D, E_D, I_D, R_D, M = range(N_STATE)

# Infected sub-state used by the next-generation and Metzler decompositions.
INFECTED = (E_H, I_H, E_F, I_F, E_D, I_D, M)
UNINFECTED = (S_H, R_H, S_F, S_D, R_D)

HUMAN = (S_H, E_H, I_H, R_H)
FREE_RANGE = (S_F, E_F, I_F)
DOMESTIC = (S_D, E_D, I_D, R_D)


@dataclass(frozen=True)
class StateVector:
    s_h: float = 0.0
    e_h: float = 0.0
    i_h: float = 0.0
    r_h: float = 0.0
    s_f: float = 0.0
    e_f: float = 0.0
    i_f: float = 0.0
    s_d: float = 0.0
    e_d: float = 0.0
    i_d: float = 0.0
    r_d: float = 0.0
    m: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, y) -> "StateVector":
        y = np.asarray(y, dtype=float)
        if y.shape != (N_STATE,):
            raise ValueError(f"expected a {N_STATE}-vector, got shape {y.shape}")
        return cls(*map(float, y))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_array())))


# Initial condition used for the fitting and simulation experiments.
PAPER_INITIAL_STATE = StateVector(
    s_h=142000.0, e_h=40.0, i_h=0.0, r_h=0.0,
    s_f=12500.0, e_f=20.0, i_f=0.0,
    s_d=15000.0, e_d=25.0, i_d=0.0, r_d=0.0,
    m=90.0,
)


@dataclass(frozen=True)
class Params:
    """Model parameters. Field names double as serialization keys."""

    theta1: float
    theta2: float
    theta3: float
    tau1: float
    tau2: float
    tau3: float
    kappa1: float
    kappa2: float
    kappa3: float
    psi1: float
    psi2: float
    psi3: float
    beta1: float
    beta2: float
    beta3: float
    gamma: float
    gamma1: float
    gamma2: float
    gamma3: float
    mu1: float
    mu2: float
    mu3: float
    mu4: float
    sigma1: float
    sigma2: float
    sigma3: float
    nu1: float
    nu2: float
    nu3: float
    rho1: float
    rho2: float
    rho3: float
    c: float

    def validate(self) -> "Params":
        """Raise ``ValueError`` unless every rate is finite and non-negative,
        and the death rates and saturation constant are strictly positive."""
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} is not finite: {value!r}")
            if value < 0:
                raise ValueError(f"parameter {name} must be >= 0, got {value!r}")
        for name in ("mu1", "mu2", "mu3", "mu4", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be > 0")
        return self

    def replace(self, **changes: float) -> "Params":
        unknown = set(changes) - set(PARAM_NAMES)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in changes.items()})

    def scaled(self, names, factor: float) -> "Params":
        return self.replace(**{n: getattr(self, n) * factor for n in names})

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, float], base: "Params | None" = None) -> "Params":
        """Build from a mapping. Missing keys come from ``base`` (if given);
        unknown keys are an error."""
        unknown = set(d) - set(PARAM_NAMES)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        if base is None:
            missing = set(PARAM_NAMES) - set(d)
            if missing:
                raise KeyError(f"missing parameter(s): {sorted(missing)}")
            return cls(**{k: float(d[k]) for k in PARAM_NAMES})
        return base.replace(**d)


PARAM_NAMES = tuple(f.name for f in fields(Params))

# The nine host-to-host and environment-to-host contact rates.
CONTACT_RATES = (
    "tau1", "tau2", "tau3",
    "kappa1", "kappa2", "kappa3",
    "psi1", "psi2", "psi3",
)
SHEDDING_RATES = ("nu1", "nu2", "nu3")

# Ranged entries (tau3, beta2, kappa3) take the lower end of their interval.
DEFAULT_PARAMS = Params(
    theta1=2000.0,
    theta2=1000.0,
    theta3=1200.0,
    tau1=0.0004,
    tau2=0.0004,
    tau3=0.0003,
    kappa1=0.00006,
    kappa2=0.00005,
    kappa3=0.00001,
    psi1=0.0004,
    psi2=0.0004,
    psi3=0.0003,
    beta1=1.0 / 6.0,
    beta2=0.54,
    beta3=1.0,
    gamma=1.0 / 6.0,
    gamma1=1.0 / 6.0,
    gamma2=0.09,
    gamma3=0.05,
    mu1=0.0142,
    mu2=0.067,
    mu3=0.067,
    mu4=0.08,
    sigma1=1.0,
    sigma2=0.09,
    sigma3=0.08,
    nu1=0.001,
    nu2=0.006,
    nu3=0.001,
    rho1=10.0,
    rho2=8.0,
    rho3=15.0,
    c=0.003,
)


def environment_saturation(m: float, c: float) -> float:
    """Fraction m / (m + c) of infection pressure exerted by the reservoir."""
    if c <= 0:
        raise ValueError(f"saturation constant must be > 0, got {c!r}")
    if m < 0:
        raise ValueError(f"concentration must be >= 0, got {m!r}")
    return m / (m + c)


def _as_array(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.to_array()
    return np.asarray(state, dtype=float)


def foi_human(state, p: Params) -> float:
    y = _as_array(state)
    lam = y[M] / (y[M] + p.c)
    return (p.tau1 * y[I_F] + p.tau2 * y[I_D] + p.tau3 * lam) * y[S_H]


def foi_free_range(state, p: Params) -> float:
    y = _as_array(state)
    lam = y[M] / (y[M] + p.c)
    return (p.kappa1 * y[I_F] + p.kappa2 * y[I_D] + p.kappa3 * lam) * y[S_F]


def foi_domestic(state, p: Params) -> float:
    """Domestic dogs see each source attenuated by its deterrent factor 1/(1+rho)."""
    y = _as_array(state)
    lam = y[M] / (y[M] + p.c)
    return (
        p.psi1 * y[I_F] / (1.0 + p.rho1)
        + p.psi2 * y[I_D] / (1.0 + p.rho2)
        + p.psi3 * lam / (1.0 + p.rho3)
    ) * y[S_D]


def rhs_values(y, p: Params) -> tuple[float, ...]:
    """Scalar right-hand side; the hot path of every integration."""
    s_h, e_h, i_h, r_h, s_f, e_f, i_f, s_d, e_d, i_d, r_d, m = y
    lam = m / (m + p.c)
    chi1 = (p.tau1 * i_f + p.tau2 * i_d + p.tau3 * lam) * s_h
    chi2 = (p.kappa1 * i_f + p.kappa2 * i_d + p.kappa3 * lam) * s_f
    chi3 = (
        p.psi1 * i_f / (1.0 + p.rho1)
        + p.psi2 * i_d / (1.0 + p.rho2)
        + p.psi3 * lam / (1.0 + p.rho3)
    ) * s_d
    return (
        p.theta1 + p.beta3 * r_h - p.mu1 * s_h - chi1,
        chi1 - (p.mu1 + p.beta1 + p.beta2) * e_h,
        p.beta1 * e_h - (p.sigma1 + p.mu1) * i_h,
        p.beta2 * e_h - (p.beta3 + p.mu1) * r_h,
        p.theta2 - chi2 - p.mu2 * s_f,
        chi2 - (p.mu2 + p.gamma) * e_f,
        p.gamma * e_f - (p.mu2 + p.sigma2) * i_f,
        p.theta3 - p.mu3 * s_d - chi3 + p.gamma3 * r_d,
        chi3 - (p.mu3 + p.gamma1 + p.gamma2) * e_d,
        p.gamma1 * e_d - (p.mu3 + p.sigma3) * i_d,
        p.gamma2 * e_d - (p.mu3 + p.gamma3) * r_d,
        (p.nu1 * i_h + p.nu2 * i_f + p.nu3 * i_d) - p.mu4 * m,
    )


def rhs(t: float, state, p: Params) -> np.ndarray:
    """Time derivative of the state. ``t`` is unused (autonomous system)."""
    y = state.to_array() if isinstance(state, StateVector) else state
    return np.array(rhs_values(y, p))


# Rates that may carry a periodic modulation, in a fixed order.
FORCEABLE = CONTACT_RATES + SHEDDING_RATES


class ModelRHS:
    """``f(t, y)`` for the model with fixed parameters and optional forcing.

    ``forcing`` is a ``forcing.ForcingConfig`` (or anything with the same
    attributes and a ``factor(t)`` method); targeted rates are multiplied by
    ``forcing.factor(t)``. Instances also expose
    ``kernel_args`` so the integrator can use the compiled path.
    """

    def __init__(self, p: Params, forcing=None):
        self.params = p
        self.forcing = forcing
        if forcing is not None and forcing.amplitude != 0.0 and forcing.targets:
            self._targets = tuple(n for n in FORCEABLE if n in forcing.targets)
        else:
            self._targets = ()

    def modulation(self, t: float) -> float:
        return self.forcing.factor(t)

    def params_at(self, t: float) -> Params:
        if not self._targets:
            return self.params
        factor = self.modulation(t)
        return replace(self.params, **{n: getattr(self.params, n) * factor for n in self._targets})

    def __call__(self, t, y):
        return np.array(rhs_values(y, self.params_at(t)))

    @property
    def kernel_args(self):
        p_arr = np.array([getattr(self.params, n) for n in PARAM_NAMES])
        if self._targets:
            f = self.forcing
            forcing = np.array([f.amplitude, f.period, f.phase])
        else:
            forcing = np.array([0.0, 1.0, 0.0])
        mask = np.array([n in self._targets for n in FORCEABLE])
        return p_arr, forcing, mask


def model_rhs(p: Params) -> ModelRHS:
    """Bind ``p`` and return ``f(t, y)`` suitable for the integrator."""
    return ModelRHS(p)


def population_totals(state) -> tuple[float, float, float]:
    y = _as_array(state)
    return (
        float(sum(y[i] for i in HUMAN)),
        float(sum(y[i] for i in FREE_RANGE)),
        float(sum(y[i] for i in DOMESTIC)),
    )


def save_params(p: Params, path: str | Path) -> None:
    """Write ``p`` as a flat TOML table keyed by parameter name."""
    lines = [f"{name} = {getattr(p, name)!r}" for name in PARAM_NAMES]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path: str | Path, base: Params | None = DEFAULT_PARAMS) -> Params:
    from .config import read_toml

    return Params.from_dict(read_toml(path), base=base).validate()
