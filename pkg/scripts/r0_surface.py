"""R0 surfaces over pairs of contact rates, written as plot-ready CSV.

    python3 scripts/r0_surface.py --out runs/surface --n 25

One CSV per pair (kappa1/kappa2, psi1/psi2, tau1/tau2), each axis spanning
[0.25, 4] times the default value on a log grid.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from rabies_dyn.io import Provenance, write_table
from rabies_dyn.model import DEFAULT_PARAMS
from rabies_dyn.ngm import MODES, r0

PAIRS = (("kappa1", "kappa2"), ("psi1", "psi2"), ("tau1", "tau2"))


def surface(a: str, b: str, n: int):
    fa = np.geomspace(0.25, 4.0, n) * getattr(DEFAULT_PARAMS, a)
    fb = np.geomspace(0.25, 4.0, n) * getattr(DEFAULT_PARAMS, b)
    for x in fa:
        for y in fb:
            p = DEFAULT_PARAMS.replace(**{a: x, b: y})
            yield [x, y, *(r0(p, m) for m in MODES)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="runs/surface")
    ap.add_argument("--n", type=int, default=25)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for a, b in PAIRS:
        path = out / f"r0_{a}_{b}.csv"
        write_table(path, [a, b, *(f"r0_{m}" for m in MODES)], list(surface(a, b, args.n)),
                    Provenance(mode="both"))
        print(path)


if __name__ == "__main__":
    main()
