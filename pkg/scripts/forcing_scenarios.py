"""Forced trajectories over an (amplitude, period, phase) grid.

    python3 scripts/forcing_scenarios.py --out runs/forcing --t1 20

The source does not state its forcing values, so every output is marked
non-canonical. Besides one trajectory CSV per scenario, ``peaks.csv``
lists peak E_H and I_H per scenario; it shows how the ordering over A
depends on phase.
"""
from __future__ import annotations

import argparse
import math
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from rabies_dyn.forcing import DEFAULT_AMPLITUDES, ForcingConfig
from rabies_dyn.integrator import IntegratorConfig, integrate_at
from rabies_dyn.io import Provenance, write_table
from rabies_dyn.model import COMPARTMENTS, DEFAULT_PARAMS, E_H, I_H, PAPER_INITIAL_STATE, ModelRHS

PERIODS = (5.0, 10.0, 20.0)
PHASES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
PROV = Provenance(mode="paper-literal", note="forcing=non-canonical")


def run(job):
    amp, period, phase, t1 = job
    ts = np.linspace(0.0, t1, int(round(t1 * 20)) + 1)
    rhs = ModelRHS(DEFAULT_PARAMS, ForcingConfig(amp, period, phase))
    return ts, integrate_at(rhs, PAPER_INITIAL_STATE, ts, IntegratorConfig()).states


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="runs/forcing")
    ap.add_argument("--t1", type=float, default=20.0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(a, T, ph, args.t1) for a, T, ph in product(DEFAULT_AMPLITUDES, PERIODS, PHASES)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    peaks = []
    for (a, T, ph, _), (ts, x) in zip(jobs, results):
        tag = f"A{a:g}_T{T:g}_phi{ph:.4f}"
        write_table(out / f"traj_{tag}.csv", ["t", *COMPARTMENTS],
                    [[t, *row] for t, row in zip(ts, x)], PROV)
        peaks.append([a, T, ph, x[:, E_H].max(), x[:, I_H].max()])
    write_table(out / "peaks.csv", ["amplitude", "period", "phase", "peak_E_H", "peak_I_H"],
                peaks, PROV)
    print(f"{len(jobs)} scenarios written to {out}")


if __name__ == "__main__":
    main()
