"""``rabies-dyn``: simulate, r0, sensitivity, sweep, fit, stability.

Data goes to files in ``--out``; diagnostics go to stderr. Exit status is 0 on
success, 2 for usage or configuration errors and 3 for numerical failures.

Scenario files are TOML::

    seed = 0
    mode = "paper-literal"
    output_dir = "out"

    [params]          # overrides of the default parameter set
    kappa1 = 0.00006

    [initial]         # overrides of the default initial state, by compartment
    E_H = 40

    [time]
    t0 = 0.0
    t1 = 100.0
    sample_every = 1.0

    [integrator]
    rtol = 1e-8

    [forcing]
    amplitude = 0.25
    period = 10.0
    phase = 0.0
    targets = ["tau1", "kappa1"]

    [sweep]
    simulate = false
    [sweep.grid]
    kappa1 = [0.00003, 0.00006, 0.00012]

    [fit]
    generate = true
    noise_sd = 0.05
    free = ["tau1", "kappa1", "psi1"]
    init_scale = 1.5

    [stability]
    endemic = true
    endemic_t = 500.0

Unknown keys in any section are errors. ``--set key=value`` overrides any
entry: bare parameter names go to ``[params]``, dotted keys address sections
(``time.t1=200``), and values are parsed as TOML literals.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import estimation, forcing, ngm, stability
from .config import parse_toml, read_toml
from .errors import (
    ConfigError, IntegrationError, NegativeEquilibrium, NoConvergence, NoImprovement,
    SingularInformation,
)
from .forcing import ForcingConfig
from .integrator import IntegratorConfig, integrate_at
from .io import Provenance, write_report, write_table
from .model import (
    COMPARTMENTS, DEFAULT_PARAMS, FORCEABLE, INDEX, PAPER_INITIAL_STATE, PARAM_NAMES, ModelRHS,
    Params, StateVector,
)

log = logging.getLogger("rabies_dyn")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

_TOP_KEYS = {"seed", "mode", "output_dir", "params", "initial", "time", "integrator", "forcing",
             "sweep", "fit", "stability"}
_TIME_KEYS = {"t0", "t1", "sample_every"}
_FORCING_KEYS = {"amplitude", "period", "phase", "targets"}
_SWEEP_KEYS = {"simulate", "grid", "workers"}
_FIT_KEYS = {"dataset", "generate", "noise_sd", "noise_mode", "free", "init_scale", "init",
             "bounds", "observed", "polish", "t1", "sample_every"}
_STABILITY_KEYS = {"endemic", "endemic_t"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class FitSpec:
    dataset: str | None = None
    generate: bool = False
    noise_sd: float = 0.0
    noise_mode: str = estimation.RELATIVE
    free: tuple[str, ...] = ("tau1", "kappa1", "psi1")
    init_scale: float = 1.5
    init: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    observed: tuple[str, ...] = estimation.DEFAULT_OBSERVABLES
    polish: bool = True
    t1: float = 100.0
    sample_every: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    params: Params = DEFAULT_PARAMS
    y0: StateVector = PAPER_INITIAL_STATE
    t_span: tuple[float, float] = (0.0, 100.0)
    sample_every: float = 1.0
    forcing: ForcingConfig | None = None
    integrator: IntegratorConfig = IntegratorConfig()
    output_dir: str = "out"
    seed: int = 0
    mode: str = ngm.PAPER_LITERAL
    sweep_grid: dict = field(default_factory=dict)
    sweep_simulate: bool = False
    sweep_workers: int = 1
    fit: FitSpec = FitSpec()
    endemic: bool = False
    endemic_t: float = 500.0

    def __post_init__(self):
        t0, t1 = self.t_span
        if not t1 > t0:
            raise ConfigError(f"time: need t1 > t0, got t0={t0}, t1={t1}")
        if not self.sample_every > 0:
            raise ConfigError("time.sample_every must be > 0")
        if self.mode not in ngm.MODES:
            raise ConfigError(f"mode must be one of {ngm.MODES}, got {self.mode!r}")

    def sample_times(self) -> np.ndarray:
        t0, t1 = self.t_span
        n = int(math.floor((t1 - t0) / self.sample_every + 1e-9))
        ts = t0 + self.sample_every * np.arange(n + 1)
        if ts[-1] < t1:
            ts = np.append(ts, t1)
        return ts

    def rhs(self) -> ModelRHS:
        return ModelRHS(self.params, forcing=self.forcing)

    def provenance(self, note: str = "") -> Provenance:
        return Provenance(seed=self.seed, mode=self.mode, note=note)


def _check_keys(section: str, table: Any, allowed) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        where = f"[{section}]" if section else "top level"
        raise ConfigError(f"unknown key(s) {unknown} at {where}")
    return table


def _float(section: str, key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {value!r}")
    return float(value)


def _apply_override(doc: dict, assignment: str) -> None:
    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise UsageError(f"--set expects key=value, got {assignment!r}")
    try:
        value = parse_toml(f"v = {raw.strip()}")["v"]
    except Exception:
        value = raw.strip()
    parts = key.split(".")
    if len(parts) == 1 and key in PARAM_NAMES:
        parts = ["params", key]
    node = doc
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise UsageError(f"--set {key}: {part} is not a table")
    node[parts[-1]] = value


def build_config(doc: dict) -> ScenarioConfig:
    """Validate a parsed TOML document into a ``ScenarioConfig``."""
    _check_keys("", doc, _TOP_KEYS)
    kw: dict[str, Any] = {}
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or doc["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer")
        kw["seed"] = doc["seed"]
    if "mode" in doc:
        kw["mode"] = doc["mode"]
    if "output_dir" in doc:
        kw["output_dir"] = str(doc["output_dir"])

    params = _check_keys("params", doc.get("params", {}), PARAM_NAMES)
    try:
        p = DEFAULT_PARAMS.replace(**{k: _float("params", k, v) for k, v in params.items()})
        kw["params"] = p.validate()
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc

    initial = _check_keys("initial", doc.get("initial", {}), COMPARTMENTS)
    y0 = PAPER_INITIAL_STATE.to_array()
    for k, v in initial.items():
        y0[INDEX[k]] = _float("initial", k, v)
    if np.any(y0 < 0):
        raise ConfigError("initial: compartments must be >= 0")
    kw["y0"] = StateVector.from_array(y0)

    time = _check_keys("time", doc.get("time", {}), _TIME_KEYS)
    t0 = _float("time", "t0", time.get("t0", 0.0))
    t1 = _float("time", "t1", time.get("t1", 100.0))
    kw["t_span"] = (t0, t1)
    kw["sample_every"] = _float("time", "sample_every", time.get("sample_every", 1.0))

    integ = _check_keys("integrator", doc.get("integrator", {}),
                        [f.name for f in fields(IntegratorConfig)])
    try:
        kw["integrator"] = IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integrator: {exc}") from exc

    if "forcing" in doc:
        fc = _check_keys("forcing", doc["forcing"], _FORCING_KEYS)
        try:
            kw["forcing"] = ForcingConfig(
                amplitude=_float("forcing", "amplitude", fc.get("amplitude", 0.0)),
                period=_float("forcing", "period", fc.get("period", forcing.DEFAULT_PERIOD)),
                phase=_float("forcing", "phase", fc.get("phase", forcing.DEFAULT_PHASE)),
                targets=frozenset(fc.get("targets", FORCEABLE)),
            )
        except ValueError as exc:
            raise ConfigError(f"forcing: {exc}") from exc

    sweep = _check_keys("sweep", doc.get("sweep", {}), _SWEEP_KEYS)
    grid = _check_keys("sweep.grid", sweep.get("grid", {}), PARAM_NAMES)
    for k, vals in grid.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep.grid.{k}: expected a non-empty list")
        grid[k] = [_float("sweep.grid", k, v) for v in vals]
    kw["sweep_grid"] = dict(grid)
    kw["sweep_simulate"] = bool(sweep.get("simulate", False))
    kw["sweep_workers"] = int(sweep.get("workers", 1))

    fit = _check_keys("fit", doc.get("fit", {}), _FIT_KEYS)
    fkw = dict(fit)
    for key in ("free", "observed"):
        if key in fkw:
            fkw[key] = tuple(fkw[key])
    if "init" in fkw:
        _check_keys("fit.init", fkw["init"], PARAM_NAMES)
    if "bounds" in fkw:
        _check_keys("fit.bounds", fkw["bounds"], PARAM_NAMES)
    unknown_free = set(fkw.get("free", ())) - set(PARAM_NAMES)
    if unknown_free:
        raise ConfigError(f"fit.free: unknown parameter(s) {sorted(unknown_free)}")
    kw["fit"] = FitSpec(**fkw)

    stab = _check_keys("stability", doc.get("stability", {}), _STABILITY_KEYS)
    kw["endemic"] = bool(stab.get("endemic", False))
    kw["endemic_t"] = _float("stability", "endemic_t", stab.get("endemic_t", 500.0))
    return ScenarioConfig(**kw)


def load_config(path: str | None, overrides=(), seed: int | None = None,
                mode: str | None = None, out: str | None = None) -> ScenarioConfig:
    doc = read_toml(path) if path else {}
    for assignment in overrides:
        _apply_override(doc, assignment)
    if seed is not None:
        doc["seed"] = seed
    if mode is not None:
        doc["mode"] = mode
    if out is not None:
        doc["output_dir"] = out
    return build_config(doc)


def _outdir(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _complex_rows(values) -> list[list]:
    return [[i, float(v.real), float(v.imag)] for i, v in enumerate(values)]


# --- simulate --------------------------------------------------------------------------

PEAK_COMPARTMENTS = ("E_H", "I_H", "E_F", "I_F", "E_D", "I_D", "M")


def cmd_simulate(cfg: ScenarioConfig) -> dict:
    out = _outdir(cfg)
    ts = cfg.sample_times()
    traj = integrate_at(cfg.rhs(), cfg.y0, ts, cfg.integrator)
    note = ""
    columns = ["t", *COMPARTMENTS]
    targets: list[str] = []
    if cfg.forcing is not None:
        note = "forcing=non-canonical"
        targets = [n for n in FORCEABLE if n in cfg.forcing.targets]
        columns += [f"factor_{n}" for n in targets]
    rows = []
    for t, y in zip(traj.times, traj.states):
        row = [float(t), *map(float, y)]
        if targets:
            factor = cfg.forcing.factor(float(t))
            row += [factor] * len(targets)
        rows.append(row)
    prov = cfg.provenance(note)
    write_table(out / "trajectory.csv", columns, rows, prov)

    peaks = {}
    for name in PEAK_COMPARTMENTS:
        col = traj.column(INDEX[name])
        i = int(np.argmax(col))
        peaks[name] = {"value": float(col[i]), "time": float(ts[i])}
    summary = {
        "final_state": dict(zip(COMPARTMENTS, map(float, traj.final))),
        "peaks": peaks,
        "r0": {m: ngm.r0(cfg.params, m) for m in ngm.MODES},
        "time": {"t0": cfg.t_span[0], "t1": cfg.t_span[1], "samples": len(ts)},
    }
    if cfg.forcing is not None:
        summary["forcing"] = {
            "amplitude": cfg.forcing.amplitude, "period": cfg.forcing.period,
            "phase": cfg.forcing.phase, "targets": targets,
            "canonical": False,
        }
    write_report(out / "summary.toml", summary, prov)
    log.info("simulate: %d samples written to %s", len(ts), out)
    return summary


# --- r0 ---------------------------------------------------------------------------------

def cmd_r0(cfg: ScenarioConfig) -> dict:
    out = _outdir(cfg)
    prov = cfg.provenance()
    report: dict[str, Any] = {"mode": cfg.mode, "r0": {}}
    for m in ngm.MODES:
        dec = ngm.next_generation_matrix(cfg.params, m)
        report["r0"][m] = dec.r0
        labels = ngm.INFECTED_LABELS
        write_table(out / f"ngm_{m}.csv", ["row", *labels],
                    [[labels[i], *map(float, dec.ngm[i])] for i in range(len(labels))],
                    Provenance(cfg.seed, m))
        if m == ngm.PAPER_LITERAL:
            report["closed_form"] = dec.r0_closed_form
            report["spectral_radius"] = dec.r0
            denom = max(abs(dec.r0), 1e-300)
            report["closed_form_rel_diff"] = abs(dec.r0_closed_form - dec.r0) / denom
            report["r_entries"] = dec.r_entries
            report["printed_r_entries"] = dec.printed_r_entries
            report["printed_discrepancies"] = {
                k: {"product": v[0], "printed": v[1]} for k, v in dec.discrepancies().items()
            }
    report["selected_r0"] = report["r0"][cfg.mode]
    write_report(out / "r0.toml", report, prov)
    log.info("r0: %s = %.12g", cfg.mode, report["selected_r0"])
    return report


# --- sensitivity ------------------------------------------------------------------------

def cmd_sensitivity(cfg: ScenarioConfig) -> list[list]:
    out = _outdir(cfg)
    fd = ngm.sensitivity_table(cfg.params, ngm.FINITE_DIFFERENCE, cfg.mode)
    if cfg.mode == ngm.PAPER_LITERAL:
        an = ngm.sensitivity_table(cfg.params, ngm.ANALYTIC, cfg.mode).indices
    else:
        an = {n: math.nan for n in ngm.TABLE4_ORDER}
    rows = []
    for name in ngm.TABLE4_ORDER:
        paper = ngm.TABLE4[name]
        ours = an[name] if not math.isnan(an[name]) else fd.indices[name]
        paper_sign = "+" if paper > 0 else "-"
        rows.append([name, an[name], fd.indices[name], paper, paper_sign,
                     bool(np.sign(ours) == np.sign(paper))])
    columns = ["parameter", "analytic_index", "fd_index", "paper_index", "paper_sign",
               "sign_match"]
    write_table(out / "sensitivity.csv", columns, rows, cfg.provenance())
    mismatches = [r[0] for r in rows if not r[-1]]
    if mismatches:
        log.warning("sensitivity: sign differs from the published table for %s", mismatches)
    return rows


# --- sweep ------------------------------------------------------------------------------

SWEEP_PEAKS = ("I_H", "I_F", "I_D")


def _sweep_point(args) -> list:
    cfg, point = args
    p = cfg.params.replace(**point).validate()
    row = [ngm.r0(p, m) for m in ngm.MODES]
    if cfg.sweep_simulate:
        traj = integrate_at(ModelRHS(p, cfg.forcing), cfg.y0, cfg.sample_times(), cfg.integrator)
        row += [float(traj.column(INDEX[n]).max()) for n in SWEEP_PEAKS]
        row += [float(traj.final[INDEX[n]]) for n in SWEEP_PEAKS]
    return row


def cmd_sweep(cfg: ScenarioConfig) -> list[list]:
    if not cfg.sweep_grid:
        raise UsageError("sweep needs a [sweep.grid] table (or --set sweep.grid.<name>=[...])")
    out = _outdir(cfg)
    names = list(cfg.sweep_grid)
    points = [dict(zip(names, combo)) for combo in itertools.product(*cfg.sweep_grid.values())]
    jobs = [(cfg, pt) for pt in points]
    if cfg.sweep_workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep_workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    columns = [*names, *(f"r0_{m}" for m in ngm.MODES)]
    if cfg.sweep_simulate:
        columns += [f"peak_{n}" for n in SWEEP_PEAKS] + [f"final_{n}" for n in SWEEP_PEAKS]
    rows = [[*pt.values(), *res] for pt, res in zip(points, results)]
    write_table(out / "sweep.csv", columns, rows, cfg.provenance())
    log.info("sweep: %d grid points", len(rows))
    return rows


# --- fit --------------------------------------------------------------------------------

def cmd_fit(cfg: ScenarioConfig) -> dict:
    spec = cfg.fit
    if spec.dataset is None and not spec.generate:
        raise UsageError("fit needs fit.dataset = <path> or fit.generate = true")
    if not spec.free:
        raise UsageError("fit.free must name at least one parameter")
    out = _outdir(cfg)
    prov = cfg.provenance()
    if spec.dataset is not None:
        data = estimation.read_dataset(spec.dataset)
    else:
        n = int(math.floor(spec.t1 / spec.sample_every + 1e-9))
        times = spec.sample_every * np.arange(n + 1)
        data = estimation.generate_synthetic(
            cfg.params, cfg.y0, times, spec.noise_sd, cfg.seed, spec.observed,
            spec.noise_mode, cfg.integrator,
        )
    estimation.write_dataset(data, out / "data.csv", prov)

    truth = data.truth
    init = cfg.params
    if spec.init:
        init = init.replace(**spec.init)
    else:
        init = init.scaled(spec.free, spec.init_scale)
    bounds = {k: tuple(v) for k, v in spec.bounds.items()}
    result = estimation.fit(data, init, spec.free, bounds or None, cfg.y0, cfg.integrator,
                            polish=spec.polish)
    report: dict[str, Any] = {
        "free": list(spec.free),
        "sse": result.sse,
        "initial_sse": result.initial_sse,
        "iterations": result.iterations,
        "converged": result.converged,
        "stop_reason": result.stop_reason,
        "noise_sd": data.noise_sd,
        "noise_mode": data.noise_mode,
        "observed": list(data.observed),
    }
    try:
        fitted, band = estimation.prediction_band(result, data, cfg.y0, cfg.integrator)
        ci = estimation.confidence_intervals(result, data, cfg.y0, cfg.integrator)
        report["ci_half_widths"] = ci
    except SingularInformation as exc:
        log.warning("fit: %s", exc)
        report["ci_error"] = str(exc)
        ci = {}
        traj = integrate_at(ModelRHS(result.estimate), cfg.y0, data.times, cfg.integrator)
        fitted = traj.states[:, data.indices]
        band = np.full_like(fitted, math.nan)

    rows = []
    recovered = True
    for name in spec.free:
        est = getattr(result.estimate, name)
        tv = getattr(truth, name) if truth is not None else math.nan
        rel = abs(est / tv - 1.0) if truth is not None and tv != 0 else math.nan
        recovered = recovered and rel < 0.01
        rows.append([name, est, tv, ci.get(name, math.nan), rel])
    write_table(out / "fit_params.csv",
                ["parameter", "estimate", "truth", "ci_half_width", "rel_error"], rows, prov)
    report["estimate"] = result.values()
    if truth is not None:
        report["recovered_within_1pct"] = bool(recovered)
        report["truth_covered"] = bool(ci) and all(
            abs(r[1] - r[2]) <= r[3] for r in rows
        )
    write_report(out / "fit_report.toml", report, prov)

    columns = ["t"]
    for n in data.observed:
        columns += [f"data_{n}", f"fit_{n}", f"lower_{n}", f"upper_{n}"]
    curve = []
    for i, t in enumerate(data.times):
        row = [float(t)]
        for j in range(len(data.observed)):
            f_ij, b_ij = float(fitted[i, j]), float(band[i, j])
            row += [float(data.observations[i, j]), f_ij, f_ij - b_ij, f_ij + b_ij]
        curve.append(row)
    write_table(out / "fitted.csv", columns, curve, prov)
    log.info("fit: sse=%.6g converged=%s", result.sse, result.converged)
    return report


# --- stability --------------------------------------------------------------------------

def cmd_stability(cfg: ScenarioConfig) -> dict:
    out = _outdir(cfg)
    prov = cfg.provenance()
    rep = stability.local_dfe_stability(cfg.params, cfg.mode)
    metz = stability.metzler_global_check(cfg.params, cfg.mode)
    r0 = ngm.r0(cfg.params, cfg.mode)
    rh = stability.routh_hurwitz_quartic(*rep.rh_coefficients)
    report: dict[str, Any] = {
        "mode": cfg.mode,
        "r0": r0,
        "dfe": {
            "state": dict(zip(COMPARTMENTS, map(float, stability.dfe_state(cfg.params)))),
            "classification": rep.classification,
            "max_real_part": rep.max_real_part,
            "consistent_with_r0": (rep.classification == stability.LOCALLY_STABLE) == (r0 < 1),
        },
        "routh_hurwitz": {
            "c1": rep.rh_coefficients[0], "c2": rep.rh_coefficients[1],
            "c3": rep.rh_coefficients[2], "c0": rep.rh_coefficients[3],
            "satisfied": rep.rh_satisfied,
            "coefficients_positive": rep.rh_coefficients_positive,
            "determinant_margin": rh.determinant_margin,
            "roots_real": [float(z.real) for z in rep.quartic_roots],
            "roots_imag": [float(z.imag) for z in rep.quartic_roots],
        },
        "metzler": {
            "verdict": metz.verdict,
            "g0_negative": metz.g0_negative,
            "g2_offdiag_nonnegative": metz.g2_offdiag_ok,
            "g0_eigenvalues": [float(v) for v in metz.g0_eigenvalues],
            "g2_spectral_abscissa": metz.g2_spectral_abscissa,
        },
    }
    write_table(out / "eigenvalues.csv", ["index", "real", "imag"],
                _complex_rows(rep.jacobian_eigenvalues), prov)
    if cfg.endemic:
        traj = integrate_at(cfg.rhs(), cfg.y0, [cfg.t_span[0], cfg.endemic_t], cfg.integrator)
        eq = stability.find_endemic_equilibrium(cfg.params, np.maximum(traj.final, 1e-12))
        y = eq.state.to_array()
        eig = np.linalg.eigvals(stability.jacobian(y, cfg.params))
        report["endemic"] = {
            "kind": eq.kind,
            "state": dict(zip(COMPARTMENTS, map(float, y))),
            "residual_norm": eq.residual_norm,
            "iterations": eq.iterations,
            "max_real_part": float(np.max(eig.real)),
            "locally_stable": bool(np.max(eig.real) < 0),
        }
        write_table(out / "endemic_eigenvalues.csv", ["index", "real", "imag"],
                    _complex_rows(eig[np.argsort(-eig.real)]), prov)
    write_report(out / "stability.toml", report, prov)
    log.info("stability: %s (R0 = %.6g)", rep.classification, r0)
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "r0": cmd_r0,
    "sensitivity": cmd_sensitivity,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "stability": cmd_stability,
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rabies-dyn", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="scenario TOML file")
        sp.add_argument("-v", "--verbose", action="store_true", help="progress notes on stderr")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, help="RNG seed (u64)")
        sp.add_argument("--mode", choices=ngm.MODES)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        dest="overrides")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(stream=sys.stderr, format="rabies-dyn: %(message)s",
                        level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, args.overrides, args.seed, args.mode, args.out)
        COMMANDS[args.command](cfg)
    except (UsageError, ConfigError, KeyError, FileNotFoundError) as exc:
        print(f"rabies-dyn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"rabies-dyn {args.command}: integration failed: {exc} "
              f"(last good t = {exc.last_time})", file=sys.stderr)
        return EXIT_NUMERIC
    except (NoConvergence, NegativeEquilibrium, NoImprovement, SingularInformation,
            ArithmeticError) as exc:
        print(f"rabies-dyn {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
