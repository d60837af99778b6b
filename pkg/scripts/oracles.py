"""Independent reference values for the test suite.

Re-derives the model symbolically with sympy, without importing the package,
and evaluates everything at 50 significant digits with mpmath. Output is the
Python module ``tests/oracle_values.py``; rerun with ``--write`` after changing
the defaults.

    python3 scripts/oracles.py            # print
    python3 scripts/oracles.py --write    # regenerate the frozen values
"""
from __future__ import annotations

import argparse
from pathlib import Path

import mpmath as mp
import sympy as sp

mp.mp.dps = 50

DEFAULTS = dict(
    theta1=2000, theta2=1000, theta3=1200,
    tau1=sp.Rational(4, 10000), tau2=sp.Rational(4, 10000), tau3=sp.Rational(3, 10000),
    kappa1=sp.Rational(6, 100000), kappa2=sp.Rational(5, 100000), kappa3=sp.Rational(1, 100000),
    psi1=sp.Rational(4, 10000), psi2=sp.Rational(4, 10000), psi3=sp.Rational(3, 10000),
    beta1=sp.Rational(1, 6), beta2=sp.Rational(54, 100), beta3=1,
    gamma=sp.Rational(1, 6), gamma1=sp.Rational(1, 6), gamma2=sp.Rational(9, 100),
    gamma3=sp.Rational(5, 100),
    mu1=sp.Rational(142, 10000), mu2=sp.Rational(67, 1000), mu3=sp.Rational(67, 1000),
    mu4=sp.Rational(8, 100),
    sigma1=1, sigma2=sp.Rational(9, 100), sigma3=sp.Rational(8, 100),
    nu1=sp.Rational(1, 1000), nu2=sp.Rational(6, 1000), nu3=sp.Rational(1, 1000),
    rho1=10, rho2=8, rho3=15, c=sp.Rational(3, 1000),
)
SYM = {k: sp.Symbol(k, positive=True) for k in DEFAULTS}
S = sp.symbols("S_H E_H I_H R_H S_F E_F I_F S_D E_D I_D R_D M")
S_H, E_H, I_H, R_H, S_F, E_F, I_F, S_D, E_D, I_D, R_D, M = S
INF = (E_H, I_H, E_F, I_F, E_D, I_D, M)
CONTACT = ("tau1", "tau2", "tau3", "kappa1", "kappa2", "kappa3", "psi1", "psi2", "psi3")
TABLE4 = ("gamma1", "gamma2", "kappa1", "mu2", "mu3", "sigma2", "theta2", "psi1", "psi2",
          "kappa2", "rho1", "rho2", "sigma3", "theta3")


def model(q, env: bool):
    """Right-hand side and new-infection vector. ``env=False`` drops M/(M+c)."""
    lam = M / (M + q["c"]) if env else 0
    x1 = (q["tau1"] * I_F + q["tau2"] * I_D + q["tau3"] * lam) * S_H
    x2 = (q["kappa1"] * I_F + q["kappa2"] * I_D + q["kappa3"] * lam) * S_F
    x3 = (q["psi1"] * I_F / (1 + q["rho1"]) + q["psi2"] * I_D / (1 + q["rho2"])
          + q["psi3"] * lam / (1 + q["rho3"])) * S_D
    f = sp.Matrix([
        q["theta1"] + q["beta3"] * R_H - q["mu1"] * S_H - x1,
        x1 - (q["mu1"] + q["beta1"] + q["beta2"]) * E_H,
        q["beta1"] * E_H - (q["sigma1"] + q["mu1"]) * I_H,
        q["beta2"] * E_H - (q["beta3"] + q["mu1"]) * R_H,
        q["theta2"] - x2 - q["mu2"] * S_F,
        x2 - (q["mu2"] + q["gamma"]) * E_F,
        q["gamma"] * E_F - (q["mu2"] + q["sigma2"]) * I_F,
        q["theta3"] - q["mu3"] * S_D - x3 + q["gamma3"] * R_D,
        x3 - (q["mu3"] + q["gamma1"] + q["gamma2"]) * E_D,
        q["gamma1"] * E_D - (q["mu3"] + q["sigma3"]) * I_D,
        q["gamma2"] * E_D - (q["mu3"] + q["gamma3"]) * R_D,
        q["nu1"] * I_H + q["nu2"] * I_F + q["nu3"] * I_D - q["mu4"] * M,
    ])
    new = sp.Matrix([0, x1, 0, 0, 0, x2, 0, 0, x3, 0, 0, 0])
    return f, new


def dfe(q):
    d = {s: 0 for s in S}
    d[S_H] = q["theta1"] / q["mu1"]
    d[S_F] = q["theta2"] / q["mu2"]
    d[S_D] = q["theta3"] / q["mu3"]
    return d


def _fv_symbolic(env: bool):
    f, new = model(SYM, env)
    idx = [S.index(s) for s in INF]
    newi = sp.Matrix([new[i] for i in idx])
    trans = sp.Matrix([newi[j] - f[idx[j]] for j in range(7)])
    at = dfe(SYM)
    F = newi.jacobian(INF).subs(at)
    V = trans.jacobian(INF).subs(at)
    args = [SYM[k] for k in DEFAULTS]
    return sp.lambdify(args, F, "mpmath"), sp.lambdify(args, V, "mpmath")


_FV: dict = {}


def _mp(v) -> mp.mpf:
    return v if isinstance(v, mp.mpf) else mp.mpf(sp.N(v, 60))


def _mp_values(q) -> list:
    return [_mp(q[k]) for k in DEFAULTS]


def ngm(q, env: bool) -> mp.matrix:
    if env not in _FV:
        _FV[env] = _fv_symbolic(env)
    f_fun, v_fun = _FV[env]
    vals = _mp_values(q)
    F = mp.matrix(f_fun(*vals).tolist())
    V = mp.matrix(v_fun(*vals).tolist())
    return F * mp.inverse(V)


def rho(K: mp.matrix) -> mp.mpf:
    ev = mp.eig(K, left=False, right=False)
    return max(abs(e) for e in ev)


def r0(q, env: bool) -> mp.mpf:
    return rho(ngm(q, env))


def scaled(q, names, s):
    out = dict(q)
    for n in names:
        out[n] = _mp(q[n]) * s
    return out


def bisect_scale(env: bool) -> mp.mpf:
    lo, hi = mp.mpf(0), mp.mpf(1)
    for _ in range(70):
        mid = (lo + hi) / 2
        if r0(scaled(DEFAULTS, CONTACT, mid), env) < 1:
            lo = mid
        else:
            hi = mid
    return lo


def elasticity(name: str) -> mp.mpf:
    base = DEFAULTS[name]

    def g(x):
        q = dict(DEFAULTS)
        q[name] = x
        return r0(q, False)

    x0 = mp.mpf(sp.N(base, 60))
    h = x0 * mp.mpf("1e-20")  # central difference; O(h^2) error is far below 1e-30
    return (g(x0 + h) - g(x0 - h)) / (2 * h) * x0 / g(x0)


def quartic():
    """Characteristic polynomial of the (E_F, I_F, E_D, I_D) block, env dropped."""
    f, _ = model(SYM, False)
    block = (E_F, I_F, E_D, I_D)
    J = sp.Matrix([[sp.diff(f[S.index(a)], b) for b in block] for a in block]).subs(dfe(SYM))
    coeffs = J.charpoly().all_coeffs()  # [1, c1, c2, c3, c0], Berkowitz
    return [mp.mpf(sp.N(c.subs({SYM[k]: v for k, v in DEFAULTS.items()}), 60)) for c in coeffs[1:]]


def dfe_eigs():
    f, _ = model(DEFAULTS, False)
    J = f.jacobian(S).subs(dfe(DEFAULTS))
    A = mp.matrix([[mp.mpf(sp.N(J[i, j], 60)) for j in range(12)] for i in range(12)])
    ev = mp.eig(A, left=False, right=False)
    # mpmath leaves ~1e-50 imaginary dust on real eigenvalues.
    ev = [complex(mp.re(e), mp.im(e) if abs(mp.im(e)) > mp.mpf("1e-30") else 0) for e in ev]
    return sorted(ev, key=lambda z: (-z.real, z.imag))


def compute() -> dict:
    vals = {
        "R0_PAPER_LITERAL": r0(DEFAULTS, False),
        "R0_CORRECTED": r0(DEFAULTS, True),
        "THRESHOLD_SCALE_PAPER_LITERAL": bisect_scale(False),
        "THRESHOLD_SCALE_CORRECTED": bisect_scale(True),
    }
    out = {k: float(v) for k, v in vals.items()}
    out["ELASTICITIES"] = {n: float(elasticity(n)) for n in TABLE4}
    out["QUARTIC"] = tuple(float(c) for c in quartic())
    out["DFE_EIGENVALUES_PAPER_LITERAL"] = tuple(dfe_eigs())
    return out


def render(vals: dict) -> str:
    lines = ['"""Frozen reference values. Generated by scripts/oracles.py; do not edit."""', ""]
    for k, v in vals.items():
        lines.append(f"{k} = {v!r}")
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()
    text = render(compute())
    if args.write:
        path = Path(__file__).resolve().parents[1] / "tests" / "oracle_values.py"
        path.write_text(text)
        print(f"wrote {path}")
    else:
        print(text)


if __name__ == "__main__":
    main()
