"""Synthetic data, least-squares fitting and linearized confidence intervals.

Noise stream
------------
Noise comes from SplitMix64 (Steele, Lea & Flood 2014), so any language can
reproduce a dataset from its seed::

    state += 0x9E3779B97F4A7C15            (mod 2**64)
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

A uniform is ``(out >> 11) * 2**-53`` in [0, 1). Each normal consumes two
uniforms u1, u2 and is ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`` (Box-Muller,
cosine branch only). Observations are filled time-major: all observed
compartments at t_0, then t_1, and so on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import IntegrationError, NoImprovement, SingularInformation
from .integrator import IntegratorConfig, integrate_at
from .io import Provenance, read_report, read_table, write_report, write_table
from .model import COMPARTMENTS, INDEX, PAPER_INITIAL_STATE, Params, model_rhs

_MASK64 = (1 << 64) - 1

RELATIVE = "relative"
ABSOLUTE = "absolute"
NOISE_MODES = (RELATIVE, ABSOLUTE)

# One infected compartment per host species plus the reservoir. The source
# does not name its four fitted panels; this is our choice.
DEFAULT_OBSERVABLES = ("I_H", "I_F", "I_D", "M")


class SplitMix64:
    """Seedable 64-bit generator with a Box-Muller normal transform."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])


@dataclass(frozen=True)
class SyntheticDataset:
    times: np.ndarray          # (n,)
    observations: np.ndarray   # (n, k)
    observed: tuple[str, ...]  # compartment names, length k
    noise_sd: float
    seed: int
    truth: Params | None
    noise_mode: str = RELATIVE
    scales: np.ndarray = field(default=None)  # (k,) per-compartment noise unit

    def __post_init__(self):
        if len(self.times) != len(self.observations):
            raise ValueError("observations length must equal times length")
        if self.observations.shape[1] != len(self.observed):
            raise ValueError("one observation column per observed compartment")
        if self.scales is None:
            object.__setattr__(self, "scales", np.ones(len(self.observed)))

    @property
    def indices(self) -> list[int]:
        return [INDEX[name] for name in self.observed]

    @property
    def weights(self) -> np.ndarray:
        """Residual weights 1/scale, so every column contributes in noise units."""
        return 1.0 / self.scales


def _check_observed(observed: Sequence[str]) -> tuple[str, ...]:
    observed = tuple(observed)
    if not observed:
        raise ValueError("need at least one observed compartment")
    unknown = [n for n in observed if n not in INDEX]
    if unknown:
        raise ValueError(f"unknown compartment(s) {unknown}; choose from {COMPARTMENTS}")
    return observed


def generate_synthetic(truth: Params, y0=PAPER_INITIAL_STATE, times=None, noise_sd: float = 0.0,
                       seed: int = 0, observed: Sequence[str] = DEFAULT_OBSERVABLES,
                       noise_mode: str = RELATIVE,
                       cfg: IntegratorConfig = IntegratorConfig()) -> SyntheticDataset:
    """Integrate the model at ``times`` and add Gaussian noise.

    In relative mode the sd for a compartment is ``noise_sd * max|trajectory|``
    of that compartment; in absolute mode it is ``noise_sd`` itself.
    """
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    if noise_mode not in NOISE_MODES:
        raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
    observed = _check_observed(observed)
    times = np.arange(101.0) if times is None else np.asarray(times, dtype=float)
    traj = integrate_at(model_rhs(truth), y0, times, cfg)
    clean = traj.states[:, [INDEX[n] for n in observed]]
    if noise_mode == RELATIVE:
        scales = np.max(np.abs(clean), axis=0)
        scales = np.where(scales > 0, scales, 1.0)
    else:
        scales = np.ones(len(observed))
    if noise_sd == 0:
        obs = clean.copy()
    else:
        eta = SplitMix64(seed).normals(clean.size).reshape(clean.shape)
        obs = clean + noise_sd * scales * eta
    return SyntheticDataset(times, obs, observed, float(noise_sd), int(seed), truth,
                            noise_mode, scales)


def residuals(candidate: Params, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
              cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Weighted residuals (Y - model) / scale, flattened time-major.

    Raises ``IntegrationError`` if the candidate cannot be integrated.
    """
    traj = integrate_at(model_rhs(candidate), y0, data.times, cfg)
    model = traj.states[:, data.indices]
    return ((data.observations - model) * data.weights).ravel()


def sse(candidate: Params, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
        cfg: IntegratorConfig = IntegratorConfig()) -> float:
    """Sum of squared weighted residuals; ``inf`` if integration fails."""
    try:
        r = residuals(candidate, data, y0, cfg)
    except (IntegrationError, ValueError, FloatingPointError):
        return math.inf
    value = float(r @ r)
    return value if math.isfinite(value) else math.inf


@dataclass(frozen=True)
class FitResult:
    estimate: Params
    free_names: tuple[str, ...]
    sse: float
    initial_sse: float
    iterations: int
    converged: bool
    stop_reason: str
    history: tuple[float, ...]   # best-so-far sse after each iteration
    ci_half_widths: Mapping[str, float] | None = None

    def values(self) -> dict[str, float]:
        return {n: getattr(self.estimate, n) for n in self.free_names}


DEFAULT_BOUNDS_FACTOR = 100.0


def _resolve_bounds(init: Params, free: Sequence[str], bounds) -> np.ndarray:
    out = np.empty((len(free), 2))
    for j, name in enumerate(free):
        v = getattr(init, name)
        if bounds is not None and name in bounds:
            lo, hi = bounds[name]
        else:
            lo, hi = v / DEFAULT_BOUNDS_FACTOR, v * DEFAULT_BOUNDS_FACTOR
        if not (0 < lo <= v <= hi):
            raise ValueError(f"{name}: need 0 < lower <= init <= upper, got {lo}, {v}, {hi}")
        out[j] = lo, hi
    return np.log(out)


class _Objective:
    def __init__(self, data, init, free, y0, cfg, log_bounds):
        self.data, self.init, self.free, self.y0, self.cfg = data, init, free, y0, cfg
        self.lo, self.hi = log_bounds[:, 0], log_bounds[:, 1]
        self.evaluations = 0

    def clip(self, z: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(z, self.lo), self.hi)

    def params(self, z: np.ndarray) -> Params:
        return self.init.replace(**{n: math.exp(v) for n, v in zip(self.free, z)})

    def __call__(self, z: np.ndarray) -> float:
        self.evaluations += 1
        return sse(self.params(z), self.data, self.y0, self.cfg)

    def residuals(self, z: np.ndarray) -> np.ndarray:
        return residuals(self.params(z), self.data, self.y0, self.cfg)


def nelder_mead(obj: _Objective, z0: np.ndarray, step: float = 0.1, max_iter: int = 2000,
                xtol: float = 1e-8, ftol: float = 1e-12):
    """Bounded Nelder-Mead in log space. Returns (z, f, iterations, reason, history, f0)."""
    k = len(z0)
    f0 = obj(z0)
    simplex = [z0.copy()]
    for j in range(k):
        z = z0.copy()
        z[j] += step
        if obj.clip(z)[j] == z0[j]:
            z[j] = z0[j] - step
        simplex.append(obj.clip(z))
    simplex = np.array(simplex)
    fs = np.array([f0] + [obj(z) for z in simplex[1:]])
    if not np.any(np.isfinite(fs)):
        raise NoImprovement("objective is not finite anywhere on the initial simplex")

    history = []
    reason = "max_iter"
    it = 0
    while it < max_iter:
        order = np.argsort(fs, kind="stable")
        simplex, fs = simplex[order], fs[order]
        diameter = float(np.max(np.abs(simplex[1:] - simplex[0])))
        if diameter < xtol:
            reason = "xtol"
            break
        if np.isfinite(fs[-1]) and fs[-1] - fs[0] < ftol * (1.0 + fs[0]):
            reason = "ftol"
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        zr = obj.clip(centroid + (centroid - worst))
        fr = obj(zr)
        if fr < fs[0]:
            ze = obj.clip(centroid + 2.0 * (centroid - worst))
            fe = obj(ze)
            simplex[-1], fs[-1] = (ze, fe) if fe < fr else (zr, fr)
        elif fr < fs[-2]:
            simplex[-1], fs[-1] = zr, fr
        else:
            if fr < fs[-1]:
                zc = obj.clip(centroid + 0.5 * (zr - centroid))
            else:
                zc = obj.clip(centroid + 0.5 * (worst - centroid))
            fc = obj(zc)
            if fc < min(fr, fs[-1]):
                simplex[-1], fs[-1] = zc, fc
            else:
                best = simplex[0]
                for j in range(1, k + 1):
                    simplex[j] = best + 0.5 * (simplex[j] - best)
                    fs[j] = obj(simplex[j])
        history.append(float(np.min(fs)))
    i = int(np.argmin(fs))
    return simplex[i].copy(), float(fs[i]), it, reason, history, f0


def _fd_jacobian(fun, z: np.ndarray, rel_step: float) -> np.ndarray:
    cols = []
    for j in range(len(z)):
        h = rel_step * max(1.0, abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        cols.append((fun(zp) - fun(zm)) / (2.0 * h))
    return np.column_stack(cols)


def levenberg_marquardt(obj: _Objective, z: np.ndarray, f: float, max_iter: int = 50,
                        rel_step: float = 1e-6):
    """Damped Gauss-Newton polish in log space; only accepts strict improvements."""
    lam = 1e-3
    for _ in range(max_iter):
        try:
            r = obj.residuals(z)
            jac = -_fd_jacobian(obj.residuals, z, rel_step)
        except IntegrationError:
            break
        g = jac.T @ r
        a = jac.T @ jac
        improved = False
        for _ in range(10):
            lhs = a + lam * np.diag(np.diag(a) + 1e-300)
            try:
                dz = np.linalg.solve(lhs, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            zn = obj.clip(z + dz)
            fn = obj(zn)
            if fn < f:
                z, f, improved = zn, fn, True
                lam = max(lam / 10.0, 1e-12)
                break
            lam *= 10.0
        if not improved or f == 0.0:
            break
    return z, f


def fit(data: SyntheticDataset, init: Params, free_names: Sequence[str],
        bounds: Mapping[str, tuple[float, float]] | None = None, y0=PAPER_INITIAL_STATE,
        cfg: IntegratorConfig = IntegratorConfig(), max_iter: int = 2000,
        polish: bool = True) -> FitResult:
    """Least-squares fit of ``free_names`` by Nelder-Mead on log-parameters.

    Bounds default to [init/100, init*100]. ``polish`` runs a Levenberg-Marquardt
    refinement from the simplex optimum; it never raises the objective.
    """
    free = tuple(free_names)
    if not free:
        raise ValueError("free_names must be non-empty")
    unknown = set(free) - set(init.to_dict())
    if unknown:
        raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
    if len(set(free)) != len(free):
        raise ValueError("free_names contains duplicates")
    log_bounds = _resolve_bounds(init, free, bounds)
    obj = _Objective(data, init, free, y0, cfg, log_bounds)
    z0 = np.log([getattr(init, n) for n in free])
    z, f, iterations, reason, history, f0 = nelder_mead(obj, z0, max_iter=max_iter)
    if polish and math.isfinite(f) and f > 0:
        z, f = levenberg_marquardt(obj, z, f)
        if history:
            history.append(min(history[-1], f))
    return FitResult(
        estimate=obj.params(z), free_names=free, sse=f, initial_sse=f0, iterations=iterations,
        converged=reason != "max_iter", stop_reason=reason, history=tuple(history),
    )


CI_Z = 1.96
CI_REL_STEP = 1e-6
SINGULAR_RCOND = 1e-10


def residual_jacobian(result: FitResult, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
                      cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Central-difference Jacobian of the weighted residuals with respect to
    the free parameters in natural units (relative step 1e-6)."""
    free = result.free_names
    x = np.array([getattr(result.estimate, n) for n in free])

    def res(v):
        return residuals(result.estimate.replace(**dict(zip(free, v))), data, y0, cfg)

    cols = []
    for j in range(len(x)):
        h = CI_REL_STEP * abs(x[j]) if x[j] != 0 else CI_REL_STEP
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((res(xp) - res(xm)) / (2.0 * h))
    return np.column_stack(cols)


def covariance(result: FitResult, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
               cfg: IntegratorConfig = IntegratorConfig(), jac: np.ndarray | None = None) -> np.ndarray:
    """Linearized covariance s^2 (J^T J)^-1 with s^2 = sse/(n-k).

    Raises ``SingularInformation`` when J^T J is numerically singular.
    """
    free = result.free_names
    if jac is None:
        jac = residual_jacobian(result, data, y0, cfg)
    n, k = jac.shape
    if n <= k:
        raise SingularInformation(f"need more residuals ({n}) than parameters ({k})")
    # Column-scale before testing conditioning so units do not matter.
    norms = np.linalg.norm(jac, axis=0)
    dead = [free[j] for j in range(k) if norms[j] == 0]
    if dead:
        raise SingularInformation(f"no sensitivity to {dead} in the observed window")
    js = jac / norms
    sv = np.linalg.svd(js, compute_uv=False)
    if sv[-1] < SINGULAR_RCOND * sv[0]:
        raise SingularInformation(f"information matrix is singular for {list(free)}")
    cov_s = np.linalg.inv(js.T @ js)
    return result.sse / (n - k) * cov_s / np.outer(norms, norms)


def confidence_intervals(result: FitResult, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
                         cfg: IntegratorConfig = IntegratorConfig()) -> dict[str, float]:
    """95% linearized half-widths 1.96 sqrt(diag(s^2 (J^T J)^-1))."""
    cov = covariance(result, data, y0, cfg)
    return {name: float(CI_Z * math.sqrt(max(cov[j, j], 0.0)))
            for j, name in enumerate(result.free_names)}


def prediction_band(result: FitResult, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
                    cfg: IntegratorConfig = IntegratorConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Fitted observables at ``data.times`` and their 95% delta-method half-widths.

    Both arrays have shape (n_times, n_observed) in observation units.
    """
    jac = residual_jacobian(result, data, y0, cfg)
    cov = covariance(result, data, y0, cfg, jac=jac)
    n, k = len(data.times), len(data.observed)
    # residual = (Y - model) * w, so d(model)/d(theta) = -J / w.
    g = -jac.reshape(n, k, -1) / data.weights[None, :, None]
    var = np.einsum("tkp,pq,tkq->tk", g, cov, g)
    traj = integrate_at(model_rhs(result.estimate), y0, data.times, cfg)
    fitted = traj.states[:, data.indices]
    return fitted, CI_Z * np.sqrt(np.maximum(var, 0.0))


def with_intervals(result: FitResult, data: SyntheticDataset, y0=PAPER_INITIAL_STATE,
                   cfg: IntegratorConfig = IntegratorConfig()) -> FitResult:
    return replace(result, ci_half_widths=confidence_intervals(result, data, y0, cfg))


def write_dataset(data: SyntheticDataset, path, prov: Provenance) -> None:
    """CSV of ``t`` plus observed columns, with a ``.meta.toml`` sidecar."""
    path = Path(path)
    rows = [[t, *obs] for t, obs in zip(data.times, data.observations)]
    write_table(path, ["t", *data.observed], rows, prov)
    meta = {
        "seed": data.seed,
        "noise_sd": data.noise_sd,
        "noise_mode": data.noise_mode,
        "observed": list(data.observed),
        "scales": [float(s) for s in data.scales],
        "truth": data.truth.to_dict() if data.truth is not None else None,
    }
    write_report(sidecar_path(path), meta, prov)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.toml")


def read_dataset(path) -> SyntheticDataset:
    table = read_table(path)
    if not table.columns or table.columns[0] != "t":
        raise ValueError(f"{path}: first column must be 't'")
    observed = _check_observed(table.columns[1:])
    arr = np.array(table.rows, dtype=float).reshape(-1, len(table.columns))
    side = sidecar_path(path)
    meta = read_report(side)[1] if side.exists() else {}
    scales = np.asarray(meta.get("scales", np.ones(len(observed))), dtype=float)
    truth = Params.from_dict(meta["truth"]) if "truth" in meta else None
    return SyntheticDataset(
        times=arr[:, 0], observations=arr[:, 1:], observed=observed,
        noise_sd=float(meta.get("noise_sd", 0.0)), seed=int(meta.get("seed", 0)), truth=truth,
        noise_mode=meta.get("noise_mode", ABSOLUTE if not side.exists() else RELATIVE),
        scales=scales,
    )
