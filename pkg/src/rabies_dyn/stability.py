"""Equilibria, Jacobians and stability tests for the disease-free state.

The local analysis follows the usual reduction: at the disease-free
equilibrium the uninfected compartments and (E_H, I_H, M) decouple, leaving a
4x4 block on (E_F, I_F, E_D, I_D) whose characteristic quartic is tested with
the Routh-Hurwitz conditions. That reduction only holds when environmental
infection is dropped from the linearisation (``paper-literal`` mode); in
``corrected`` mode the full 12x12 spectrum is still computed but the quartic
is no longer a factor of the characteristic polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeEquilibrium, NoConvergence
from .model import (
    E_D, E_F, E_H, I_D, I_F, I_H, INFECTED, M, N_STATE, R_D, R_H, S_D, S_F, S_H, UNINFECTED,
    Params, StateVector, rhs_values,
)
from .ngm import CORRECTED, MODES, PAPER_LITERAL

DISEASE_FREE = "disease-free"
ENDEMIC = "endemic"

LOCALLY_STABLE = "locally-stable"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"

JACOBIAN_REL_STEP = 1e-7
NEWTON_MAX_ITER = 200
NEWTON_MAX_HALVINGS = 10


@dataclass(frozen=True)
class EquilibriumResult:
    state: StateVector
    residual_norm: float
    kind: str
    converged: bool
    iterations: int
    abs_residual: float = 0.0


@dataclass(frozen=True)
class InvariantBounds:
    n_h_max: float
    n_f_max: float
    n_d_max: float
    m_max: float


@dataclass(frozen=True)
class RouthHurwitz:
    satisfied: bool
    coefficients_positive: bool
    coefficients: tuple[float, float, float, float]
    determinant_margin: float  # c1*c2*c3 - c3^2 - c1^2*c0


@dataclass(frozen=True)
class StabilityReport:
    mode: str
    jacobian_eigenvalues: np.ndarray
    max_real_part: float
    rh_coefficients: tuple[float, float, float, float]
    rh_satisfied: bool
    rh_coefficients_positive: bool
    quartic_roots: np.ndarray
    metzler_g0_eigs: np.ndarray
    metzler_offdiag_ok: bool
    classification: str


def residual_norm(y, p: Params) -> float:
    """||rhs(y)||_2 scaled by max(1, ||y||_2)."""
    y = np.asarray(y, dtype=float)
    f = np.array(rhs_values(y, p))
    return float(np.linalg.norm(f) / max(1.0, np.linalg.norm(y)))


def dfe_state(p: Params) -> np.ndarray:
    y = np.zeros(N_STATE)
    y[S_H] = p.theta1 / p.mu1
    y[S_F] = p.theta2 / p.mu2
    y[S_D] = p.theta3 / p.mu3
    return y


def disease_free_equilibrium(p: Params) -> EquilibriumResult:
    y = dfe_state(p)
    f = np.array(rhs_values(y, p))
    return EquilibriumResult(
        state=StateVector.from_array(y),
        residual_norm=residual_norm(y, p),
        kind=DISEASE_FREE,
        converged=True,
        iterations=0,
        abs_residual=float(np.linalg.norm(f)),
    )


def invariant_bounds(p: Params) -> InvariantBounds:
    n_h = p.theta1 / p.mu1
    n_f = p.theta2 / p.mu2
    n_d = p.theta3 / p.mu3
    return InvariantBounds(
        n_h_max=n_h,
        n_f_max=n_f,
        n_d_max=n_d,
        m_max=(p.nu1 * n_h + p.nu2 * n_f + p.nu3 * n_d) / p.mu4,
    )


def numeric_jacobian(f, y, rel_step: float = JACOBIAN_REL_STEP) -> np.ndarray:
    """Central-difference Jacobian of ``f(y)``; step rel_step*max(|y_j|, 1)."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    J = np.empty((len(f(y)), n))
    for j in range(n):
        h = rel_step * max(abs(y[j]), 1.0)
        up = y.copy()
        down = y.copy()
        up[j] += h
        down[j] -= h
        J[:, j] = (np.asarray(f(up)) - np.asarray(f(down))) / (2.0 * h)
    return J


def dfe_jacobian(p: Params, mode: str = CORRECTED) -> np.ndarray:
    """Closed-form Jacobian of the model at the disease-free equilibrium.

    ``corrected`` is the exact linearisation. ``paper-literal`` drops the
    environmental infection column (d chi / dM), matching the F matrix the
    closed-form R0 comes from.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    sh0, sf0, sd0 = p.theta1 / p.mu1, p.theta2 / p.mu2, p.theta3 / p.mu3
    J = np.zeros((N_STATE, N_STATE))

    J[S_H, S_H] = -p.mu1
    J[S_H, R_H] = p.beta3
    J[S_H, I_F] = -p.tau1 * sh0
    J[S_H, I_D] = -p.tau2 * sh0
    J[E_H, E_H] = -(p.mu1 + p.beta1 + p.beta2)
    J[E_H, I_F] = p.tau1 * sh0
    J[E_H, I_D] = p.tau2 * sh0
    J[I_H, E_H] = p.beta1
    J[I_H, I_H] = -(p.mu1 + p.sigma1)
    J[R_H, E_H] = p.beta2
    J[R_H, R_H] = -(p.mu1 + p.beta3)

    J[S_F, S_F] = -p.mu2
    J[S_F, I_F] = -p.kappa1 * sf0
    J[S_F, I_D] = -p.kappa2 * sf0
    J[E_F, E_F] = -(p.mu2 + p.gamma)
    J[E_F, I_F] = p.kappa1 * sf0
    J[E_F, I_D] = p.kappa2 * sf0
    J[I_F, E_F] = p.gamma
    J[I_F, I_F] = -(p.mu2 + p.sigma2)

    b2 = p.psi1 * sd0 / (1.0 + p.rho1)
    b4 = p.psi2 * sd0 / (1.0 + p.rho2)
    J[S_D, S_D] = -p.mu3
    J[S_D, R_D] = p.gamma3
    J[S_D, I_F] = -b2
    J[S_D, I_D] = -b4
    J[E_D, E_D] = -(p.mu3 + p.gamma1 + p.gamma2)
    J[E_D, I_F] = b2
    J[E_D, I_D] = b4
    J[I_D, E_D] = p.gamma1
    J[I_D, I_D] = -(p.mu3 + p.sigma3)
    J[R_D, E_D] = p.gamma2
    J[R_D, R_D] = -(p.mu3 + p.gamma3)

    J[M, I_H] = p.nu1
    J[M, I_F] = p.nu2
    J[M, I_D] = p.nu3
    J[M, M] = -p.mu4

    if mode == CORRECTED:
        env_h = p.tau3 * sh0 / p.c
        env_f = p.kappa3 * sf0 / p.c
        env_d = p.psi3 * sd0 / ((1.0 + p.rho3) * p.c)
        J[S_H, M], J[E_H, M] = -env_h, env_h
        J[S_F, M], J[E_F, M] = -env_f, env_f
        J[S_D, M], J[E_D, M] = -env_d, env_d
    return J


def jacobian(state, p: Params) -> np.ndarray:
    """Jacobian of the right-hand side at ``state``.

    Exact at the disease-free equilibrium; central differences elsewhere.
    """
    y = state.to_array() if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if np.array_equal(y, dfe_state(p)):
        return dfe_jacobian(p, CORRECTED)
    return numeric_jacobian(lambda z: rhs_values(z, p), y)


def routh_hurwitz_quartic(c1: float, c2: float, c3: float, c0: float) -> RouthHurwitz:
    """Routh-Hurwitz test for x^4 + c1 x^3 + c2 x^2 + c3 x + c0.

    All roots lie in the open left half-plane iff c1, c3, c0 > 0 and
    c1*c2*c3 > c3^2 + c1^2*c0. Plain coefficient positivity is reported
    separately; it is necessary but not sufficient.
    """
    margin = c1 * c2 * c3 - c3 ** 2 - c1 ** 2 * c0
    return RouthHurwitz(
        satisfied=bool(c1 > 0 and c3 > 0 and c0 > 0 and margin > 0),
        coefficients_positive=bool(c1 > 0 and c2 > 0 and c3 > 0 and c0 > 0),
        coefficients=(c1, c2, c3, c0),
        determinant_margin=margin,
    )


def reduced_quartic(p: Params) -> tuple[float, float, float, float]:
    """Characteristic coefficients (C1, C2, C3, C) of the (E_F, I_F, E_D, I_D) block."""
    sf0, sd0 = p.theta2 / p.mu2, p.theta3 / p.mu3
    a4 = p.mu2 + p.gamma
    a5 = p.mu2 + p.sigma2
    a6 = p.mu3 + p.gamma1 + p.gamma2
    a7 = p.mu3 + p.sigma3
    b1 = p.kappa1 * sf0
    b2 = p.psi1 * sd0 / (1.0 + p.rho1)
    b3 = p.kappa2 * sf0
    b4 = p.psi2 * sd0 / (1.0 + p.rho2)
    g, g1 = p.gamma, p.gamma1
    c1 = a4 + a5 + a6 + a7
    c2 = a4 * a5 + a4 * a6 + a4 * a7 + a5 * a6 + a5 * a7 + a6 * a7 - g * b1 - g1 * b4
    c3 = (
        ((a6 + a7) * a5 - g1 * b4 + a7 * a6) * a4
        + (-g1 * b4 + a7 * a6) * a5
        - g * b1 * (a6 + a7)
    )
    c0 = (
        g * g1 * b1 * b4 - g * g1 * b2 * b3
        - g1 * a4 * a5 * b4 - g * a6 * a7 * b1
        + a4 * a5 * a6 * a7
    )
    return c1, c2, c3, c0


def metzler_matrices(p: Params, mode: str = PAPER_LITERAL):
    """(G0, G1, G2) with G0 acting on (S_H, R_H, S_F, S_D, R_D) minus the DFE
    and G2 on (E_H, I_H, E_F, I_F, E_D, I_D, M)."""
    J = dfe_jacobian(p, mode)
    G0 = J[np.ix_(UNINFECTED, UNINFECTED)]
    G1 = J[np.ix_(UNINFECTED, INFECTED)]
    G2 = J[np.ix_(INFECTED, INFECTED)]
    return G0, G1, G2


@dataclass(frozen=True)
class MetzlerCheck:
    verdict: bool
    g0_eigenvalues: np.ndarray
    g0_negative: bool
    g2_offdiag_ok: bool
    g2_spectral_abscissa: float


def metzler_global_check(p: Params, mode: str = PAPER_LITERAL) -> MetzlerCheck:
    """G0 eigenvalues negative and G2 off-diagonals non-negative.

    ``g2_spectral_abscissa`` is included because global attraction of the
    disease-free state also needs G2 to be Hurwitz, which holds iff R0 < 1.
    """
    G0, _, G2 = metzler_matrices(p, mode)
    eig0 = np.linalg.eigvals(G0)
    g0_neg = bool(np.all(eig0.real < 0))
    off = G2[~np.eye(G2.shape[0], dtype=bool)]
    offdiag_ok = bool(np.all(off >= 0))
    return MetzlerCheck(
        verdict=g0_neg and offdiag_ok,
        g0_eigenvalues=np.sort(eig0.real),
        g0_negative=g0_neg,
        g2_offdiag_ok=offdiag_ok,
        g2_spectral_abscissa=float(np.max(np.linalg.eigvals(G2).real)),
    )


def local_dfe_stability(p: Params, mode: str = PAPER_LITERAL, tol: float = 1e-12) -> StabilityReport:
    J = dfe_jacobian(p, mode)
    eig = np.linalg.eigvals(J)
    max_re = float(np.max(eig.real))
    scale = float(np.max(np.abs(eig))) or 1.0
    if max_re < -tol * scale:
        cls = LOCALLY_STABLE
    elif max_re > tol * scale:
        cls = UNSTABLE
    else:
        cls = INCONCLUSIVE
    coeffs = reduced_quartic(p)
    rh = routh_hurwitz_quartic(*coeffs)
    roots = np.roots([1.0, *coeffs])
    m = metzler_global_check(p, mode)
    return StabilityReport(
        mode=mode,
        jacobian_eigenvalues=eig[np.argsort(-eig.real)],
        max_real_part=max_re,
        rh_coefficients=coeffs,
        rh_satisfied=rh.satisfied,
        rh_coefficients_positive=rh.coefficients_positive,
        quartic_roots=roots,
        metzler_g0_eigs=m.g0_eigenvalues,
        metzler_offdiag_ok=m.g2_offdiag_ok,
        classification=cls,
    )


def find_endemic_equilibrium(p: Params, guess, tol: float = 1e-10,
                             max_iter: int = NEWTON_MAX_ITER) -> EquilibriumResult:
    """Damped Newton on rhs(y) = 0 from ``guess``.

    Convergence is measured with :func:`residual_norm`. Each step is halved
    (up to ten times) until the residual decreases. A limit outside the
    non-negative orthant raises ``NegativeEquilibrium`` rather than being
    projected back.
    """
    y = guess.to_array() if isinstance(guess, StateVector) else np.array(guess, dtype=float)
    if np.any(y <= 0):
        raise ValueError("guess must be strictly positive")

    def f(z):
        return np.array(rhs_values(z, p))

    res = residual_norm(y, p)
    it = 0
    while res >= tol:
        if it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations (residual {res:.3e})")
        it += 1
        J = numeric_jacobian(f, y)
        try:
            step = np.linalg.solve(J, -f(y))
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian at iteration {it}") from exc
        alpha = 1.0
        for _ in range(NEWTON_MAX_HALVINGS + 1):
            trial = y + alpha * step
            trial_res = residual_norm(trial, p)
            if np.isfinite(trial_res) and trial_res < res:
                break
            alpha *= 0.5
        else:
            raise NoConvergence(f"line search failed at iteration {it} (residual {res:.3e})")
        y, res = trial, trial_res

    scale = max(1.0, float(np.max(np.abs(y))))
    if np.any(y < -tol * scale):
        raise NegativeEquilibrium("Newton settled outside the non-negative orthant",
                                  StateVector.from_array(y))
    infected = y[list(INFECTED)]
    if np.all(np.abs(infected) <= tol * scale):
        dfe = disease_free_equilibrium(p)
        return EquilibriumResult(dfe.state, dfe.residual_norm, DISEASE_FREE, True, it,
                                 dfe.abs_residual)
    y = np.maximum(y, 0.0)
    return EquilibriumResult(
        state=StateVector.from_array(y),
        residual_norm=residual_norm(y, p),
        kind=ENDEMIC,
        converged=True,
        iterations=it,
        abs_residual=float(np.linalg.norm(f(y))),
    )
