"""Next-generation matrix, basic reproduction number and elasticities of R0.

Infected sub-state ordering is (E_H, I_H, E_F, I_F, E_D, I_D, M).

Two F-matrix modes are supported:

``paper-literal``
    New infections from the environment are left out of F, so the M column is
    zero. This is the matrix the closed-form R0 is built from.
``corrected``
    Adds the linearised environmental terms. At M = 0 the saturation
    M/(M+C) has slope 1/C, giving tau3*S_H0/C etc. in column 7.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeDiscriminant, SingularTransfer, ZeroParameter, ZeroR0
from .model import PARAM_NAMES, Params

PAPER_LITERAL = "paper-literal"
CORRECTED = "corrected"
MODES = (PAPER_LITERAL, CORRECTED)

INFECTED_LABELS = ("E_H", "I_H", "E_F", "I_F", "E_D", "I_D", "M")
R_NAMES = ("R13", "R14", "R15", "R16", "R33", "R34", "R35", "R36",
           "R53", "R54", "R55", "R56")

ANALYTIC = "analytic-on-closed-form"
FINITE_DIFFERENCE = "central-finite-difference"
FD_REL_STEP = 1e-6

# Published elasticities, in the order the table lists them (left column, then right).
TABLE4 = {
    "gamma1": -0.105552,
    "gamma2": -0.056998,
    "kappa1": +0.897120,
    "mu2": -1.616021,
    "mu3": -0.105358,
    "sigma2": -0.540654,
    "theta2": +0.941420,
    "psi1": +0.051422,
    "psi2": +0.005436,
    "kappa2": +0.051422,
    "rho1": -0.046747,
    "rho2": -0.004832,
    "sigma3": -0.05144,
    "theta3": +0.056858,
}
TABLE4_ORDER = tuple(TABLE4)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def build_f(p: Params, mode: str = PAPER_LITERAL) -> np.ndarray:
    """New-infection Jacobian at the disease-free equilibrium (7x7)."""
    _check_mode(mode)
    sh0, sf0, sd0 = p.theta1 / p.mu1, p.theta2 / p.mu2, p.theta3 / p.mu3
    F = np.zeros((7, 7))
    F[0, 3] = p.tau1 * sh0
    F[0, 5] = p.tau2 * sh0
    F[2, 3] = p.kappa1 * sf0
    F[2, 5] = p.kappa2 * sf0
    F[4, 3] = p.psi1 * sd0 / (1.0 + p.rho1)
    F[4, 5] = p.psi2 * sd0 / (1.0 + p.rho2)
    if mode == CORRECTED:
        F[0, 6] = p.tau3 * sh0 / p.c
        F[2, 6] = p.kappa3 * sf0 / p.c
        F[4, 6] = p.psi3 * sd0 / ((1.0 + p.rho3) * p.c)
    return F


def build_v(p: Params) -> np.ndarray:
    """Transition Jacobian at the disease-free equilibrium (7x7)."""
    V = np.diag([
        p.mu1 + p.beta1 + p.beta2,
        p.sigma1 + p.mu1,
        p.mu2 + p.gamma,
        p.mu2 + p.sigma2,
        p.mu3 + p.gamma1 + p.gamma2,
        p.mu3 + p.sigma3,
        p.mu4,
    ])
    V[1, 0] = -p.beta1
    V[3, 2] = -p.gamma
    V[5, 4] = -p.gamma1
    V[6, 1] = -p.nu1
    V[6, 3] = -p.nu2
    V[6, 5] = -p.nu3
    return V


# Each R entry is a monomial in parameters and parameter sums. A factor is
# (parameter names summed, additive constant, exponent).
_Factor = tuple[tuple[str, ...], float, int]

_K_H = ((("mu1",), 0.0, -1), (("theta1",), 0.0, 1))
_K_F = ((("mu2",), 0.0, -1), (("theta2",), 0.0, 1))
_K_D = ((("mu3",), 0.0, -1), (("theta3",), 0.0, 1))
# Probability that E_F reaches I_F times mean time in I_F, and the same for E_D.
_VIA_EF = ((("gamma",), 0.0, 1), (("mu2", "gamma"), 0.0, -1), (("mu2", "sigma2"), 0.0, -1))
_VIA_IF = ((("mu2", "sigma2"), 0.0, -1),)
_VIA_ED = ((("gamma1",), 0.0, 1), (("mu3", "gamma1", "gamma2"), 0.0, -1),
           (("mu3", "sigma3"), 0.0, -1))
_VIA_ID = ((("mu3", "sigma3"), 0.0, -1),)


def _src(rate: str, rho: str | None = None) -> tuple[_Factor, ...]:
    out: tuple[_Factor, ...] = (((rate,), 0.0, 1),)
    if rho is not None:
        out += (((rho,), 1.0, -1),)
    return out


R_FACTORS: dict[str, tuple[_Factor, ...]] = {
    "R13": _src("tau1") + _K_H + _VIA_EF,
    "R14": _src("tau1") + _K_H + _VIA_IF,
    "R15": _src("tau2") + _K_H + _VIA_ED,
    "R16": _src("tau2") + _K_H + _VIA_ID,
    "R33": _src("kappa1") + _K_F + _VIA_EF,
    "R34": _src("kappa1") + _K_F + _VIA_IF,
    "R35": _src("kappa2") + _K_F + _VIA_ED,
    "R36": _src("kappa2") + _K_F + _VIA_ID,
    "R53": _src("psi1", "rho1") + _K_D + _VIA_EF,
    "R54": _src("psi1", "rho1") + _K_D + _VIA_IF,
    "R55": _src("psi2", "rho2") + _K_D + _VIA_ED,
    "R56": _src("psi2", "rho2") + _K_D + _VIA_ID,
}

# Entries exactly as typeset in the published closed form. They differ from
# the matrix product in R15, R35, R36 and R55 (gamma for gamma1, kappa1 for
# kappa2); kept only for reporting the discrepancy.
_VIA_ED_PRINTED = ((("gamma",), 0.0, 1), (("mu3", "gamma1", "gamma2"), 0.0, -1),
                   (("mu3", "sigma3"), 0.0, -1))
PRINTED_R_FACTORS: dict[str, tuple[_Factor, ...]] = dict(
    R_FACTORS,
    R15=_src("tau2") + _K_H + _VIA_ED_PRINTED,
    R35=_src("kappa1") + _K_F + _VIA_ED_PRINTED,
    R36=_src("kappa1") + _K_F + _VIA_ID,
    R55=_src("psi2", "rho2") + _K_D + _VIA_ED_PRINTED,
)


def _factor_value(p: Params, f: _Factor) -> float:
    names, const, _ = f
    return const + sum(getattr(p, n) for n in names)


def _monomial(p: Params, factors) -> float:
    out = 1.0
    for f in factors:
        out *= _factor_value(p, f) ** f[2]
    return out


def _monomial_grad(p: Params, factors, name: str) -> float:
    """d/d(name) of a monomial via its logarithmic derivative."""
    value = _monomial(p, factors)
    if value == 0.0:
        # Zero only through a numerator factor; differentiate term by term.
        total = 0.0
        for i, (names, const, e) in enumerate(factors):
            if name not in names:
                continue
            rest = [f for j, f in enumerate(factors) if j != i]
            total += e * _factor_value(p, factors[i]) ** (e - 1) * _monomial(p, rest)
        return total
    dlog = 0.0
    for names, const, e in factors:
        if name in names:
            dlog += e / (const + sum(getattr(p, n) for n in names))
    return value * dlog


def r_entries(p: Params) -> dict[str, float]:
    """Closed-form non-zero entries of F V^-1 (paper-literal F)."""
    return {k: _monomial(p, f) for k, f in R_FACTORS.items()}


def printed_r_entries(p: Params) -> dict[str, float]:
    return {k: _monomial(p, f) for k, f in PRINTED_R_FACTORS.items()}


def _r0_from_entries(r33: float, r35: float, r53: float, r55: float) -> float:
    radicand = r33 * (r33 - 2.0 * r55) + 4.0 * r35 * r53 + r55 ** 2
    if radicand < 0:
        # (R33 - R55)^2 + 4 R35 R53 can only dip below zero through rounding.
        if radicand < -1e-12 * max(r33, r55, 1e-300) ** 2:
            raise NegativeDiscriminant(f"negative discriminant {radicand!r}")
        radicand = 0.0
    return ((r55 + r33) + math.sqrt(radicand)) / 2.0


def r0_closed_form(p: Params) -> float:
    """Largest root of the 2x2 (free-range, domestic) block of F V^-1."""
    r = r_entries(p)
    return _r0_from_entries(r["R33"], r["R35"], r["R53"], r["R55"])


def spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(a))))


@dataclass(frozen=True)
class NgmDecomposition:
    mode: str
    f_matrix: np.ndarray
    v_matrix: np.ndarray
    v_inverse: np.ndarray
    ngm: np.ndarray
    r_entries: dict[str, float]
    r0: float
    r0_closed_form: float
    printed_r_entries: dict[str, float] = field(default_factory=dict)

    def discrepancies(self, rel: float = 1e-12) -> dict[str, tuple[float, float]]:
        """Entries whose printed closed form disagrees with the matrix product."""
        out = {}
        for k, v in self.r_entries.items():
            q = self.printed_r_entries.get(k, v)
            if abs(q - v) > rel * max(abs(v), abs(q), 1e-300):
                out[k] = (v, q)
        return out


def next_generation_matrix(p: Params, mode: str = PAPER_LITERAL) -> NgmDecomposition:
    _check_mode(mode)
    F = build_f(p, mode)
    V = build_v(p)
    if np.any(np.diag(V) == 0.0):
        raise SingularTransfer("V has a zero diagonal entry")
    # V is lower triangular, so solve rather than invert blindly.
    V_inv = np.linalg.solve(V, np.eye(7))
    K = F @ V_inv
    return NgmDecomposition(
        mode=mode,
        f_matrix=F,
        v_matrix=V,
        v_inverse=V_inv,
        ngm=K,
        r_entries=r_entries(p),
        r0=spectral_radius(K),
        r0_closed_form=r0_closed_form(p),
        printed_r_entries=printed_r_entries(p),
    )


def r0(p: Params, mode: str = PAPER_LITERAL) -> float:
    """Spectral radius of the next-generation matrix."""
    _check_mode(mode)
    K = build_f(p, mode) @ np.linalg.solve(build_v(p), np.eye(7))
    return spectral_radius(K)


def r0_gradient(p: Params, name: str) -> float:
    """Exact derivative of the closed-form R0 with respect to ``name``."""
    r = r_entries(p)
    a, b, c, d = r["R33"], r["R35"], r["R53"], r["R55"]
    da = _monomial_grad(p, R_FACTORS["R33"], name)
    db = _monomial_grad(p, R_FACTORS["R35"], name)
    dc = _monomial_grad(p, R_FACTORS["R53"], name)
    dd = _monomial_grad(p, R_FACTORS["R55"], name)
    root = math.sqrt((a - d) ** 2 + 4.0 * b * c)
    if root == 0.0:
        # Repeated root: R0 = (a + d)/2 and the sqrt term is not differentiable.
        return 0.5 * (da + dd)
    return 0.5 * (da + dd + ((a - d) * (da - dd) + 2.0 * (db * c + b * dc)) / root)


def sensitivity_index(p: Params, name: str, method: str = ANALYTIC,
                      mode: str = PAPER_LITERAL) -> float:
    """Normalised forward sensitivity (elasticity) of R0 to parameter ``name``.

    ``analytic`` differentiates the closed form (paper-literal only);
    ``central-finite-difference`` perturbs ``name`` by a relative 1e-6 either
    side and differences the spectral radius of the assembled matrix.
    """
    if name not in PARAM_NAMES:
        raise KeyError(f"unknown parameter {name!r}")
    value = getattr(p, name)
    if value == 0.0:
        raise ZeroParameter(f"{name} is zero; the relative index is undefined")
    if method == ANALYTIC:
        if mode != PAPER_LITERAL:
            raise ValueError("the closed form exists only in paper-literal mode")
        base = r0_closed_form(p)
        if base == 0.0:
            raise ZeroR0("R0 is zero")
        return r0_gradient(p, name) * value / base
    if method == FINITE_DIFFERENCE:
        base = r0(p, mode)
        if base == 0.0:
            raise ZeroR0("R0 is zero")
        h = FD_REL_STEP * abs(value)
        up = r0(p.replace(**{name: value + h}), mode)
        down = r0(p.replace(**{name: value - h}), mode)
        return (up - down) / (2.0 * h) * value / base
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SensitivityReport:
    indices: dict[str, float]
    method: str
    mode: str = PAPER_LITERAL

    def signs(self) -> dict[str, int]:
        return {k: int(np.sign(v)) for k, v in self.indices.items()}


def sensitivity_table(p: Params, method: str = ANALYTIC, mode: str = PAPER_LITERAL,
                      names=TABLE4_ORDER) -> SensitivityReport:
    return SensitivityReport(
        indices={n: sensitivity_index(p, n, method, mode) for n in names},
        method=method,
        mode=mode,
    )
