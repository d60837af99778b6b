import math

import numpy as np
import pytest

from rabies_dyn.model import (
    COMPARTMENTS, CONTACT_RATES, DEFAULT_PARAMS, E_H, FREE_RANGE, HUMAN, DOMESTIC, I_H, INDEX,
    N_STATE, PAPER_INITIAL_STATE, PARAM_NAMES, R_H, S_H, Params, StateVector,
    environment_saturation, foi_domestic, foi_free_range, foi_human, load_params,
    population_totals, rhs, save_params,
)
from rabies_dyn.stability import dfe_state


def state(**kw) -> StateVector:
    return StateVector(**kw)


def test_compartment_order_is_canonical():
    assert COMPARTMENTS == ("S_H", "E_H", "I_H", "R_H", "S_F", "E_F", "I_F",
                            "S_D", "E_D", "I_D", "R_D", "M")
    assert N_STATE == 12
    assert [f.upper() for f in StateVector.__dataclass_fields__] == list(COMPARTMENTS)


def test_default_params_match_table():
    p = DEFAULT_PARAMS
    assert (p.tau3, p.beta2, p.kappa3) == (0.0003, 0.54, 0.00001)
    assert (p.theta1, p.theta2, p.theta3) == (2000, 1000, 1200)
    assert (p.mu1, p.mu2, p.mu3, p.mu4) == (0.0142, 0.067, 0.067, 0.08)
    assert (p.rho1, p.rho2, p.rho3, p.c) == (10, 8, 15, 0.003)
    assert len(PARAM_NAMES) == 33


@pytest.mark.parametrize("name", ["mu1", "mu4", "c"])
def test_validate_rejects_nonpositive(name):
    with pytest.raises(ValueError):
        DEFAULT_PARAMS.replace(**{name: 0.0}).validate()


def test_validate_rejects_negative_and_nan():
    with pytest.raises(ValueError):
        DEFAULT_PARAMS.replace(nu1=-1e-3).validate()
    with pytest.raises(ValueError):
        DEFAULT_PARAMS.replace(tau1=math.nan).validate()


def test_replace_rejects_unknown_key():
    with pytest.raises(KeyError):
        DEFAULT_PARAMS.replace(tua1=1.0)


@pytest.mark.parametrize("m, expected", [(0.0, 0.0), (0.003, 0.5), (0.297, 0.99)])
def test_environment_saturation(m, expected):
    assert environment_saturation(m, 0.003) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("m, c", [(-1.0, 0.003), (1.0, 0.0), (1.0, -1.0)])
def test_environment_saturation_domain(m, c):
    with pytest.raises(ValueError):
        environment_saturation(m, c)


def test_foi_human_examples():
    p0 = DEFAULT_PARAMS.replace(**{n: 0.0 for n in CONTACT_RATES})
    assert foi_human(state(s_h=5.0), DEFAULT_PARAMS) == 0.0
    assert foi_human(state(i_f=1, s_h=1), p0.replace(tau1=0.0004)) == pytest.approx(0.0004)
    p = p0.replace(tau1=0.0004, tau2=0.0004, tau3=0.0003)
    assert foi_human(state(i_f=2, i_d=3, m=0.003, s_h=10), p) == pytest.approx(0.0215, rel=1e-14)


def test_foi_free_range_examples():
    p0 = DEFAULT_PARAMS.replace(**{n: 0.0 for n in CONTACT_RATES})
    assert foi_free_range(state(s_f=5.0), DEFAULT_PARAMS) == 0.0
    assert foi_free_range(state(i_f=1, s_f=1), p0.replace(kappa1=0.00006)) == pytest.approx(6e-5)
    p = p0.replace(kappa2=0.00005, kappa3=0.00001)
    got = foi_free_range(state(i_d=1, m=p.c, s_f=100), p)
    assert got == pytest.approx(0.0055, rel=1e-14)


def test_foi_domestic_examples():
    p0 = DEFAULT_PARAMS.replace(**{n: 0.0 for n in CONTACT_RATES})
    assert foi_domestic(state(s_d=5.0), DEFAULT_PARAMS) == 0.0
    got = foi_domestic(state(i_f=11, s_d=1), p0.replace(psi1=0.0004, rho1=10))
    assert got == pytest.approx(0.0004, rel=1e-14)
    got = foi_domestic(state(i_d=9, s_d=2), p0.replace(psi2=0.0004, rho2=8))
    assert got == pytest.approx(0.0008, rel=1e-14)


def test_rhs_zero_state_keeps_only_recruitment():
    p = DEFAULT_PARAMS
    expected = np.zeros(N_STATE)
    expected[INDEX["S_H"]] = p.theta1
    expected[INDEX["S_F"]] = p.theta2
    expected[INDEX["S_D"]] = p.theta3
    assert np.array_equal(rhs(0.0, StateVector(), p), expected)


def _hand_rhs(y, p):
    # Written out longhand from the model equations, independent of rhs_values.
    sh, eh, ih, rh, sf, ef, if_, sd, ed, id_, rd, m = y
    lam = m / (m + p.c)
    x1 = p.tau1 * if_ * sh + p.tau2 * id_ * sh + p.tau3 * lam * sh
    x2 = p.kappa1 * if_ * sf + p.kappa2 * id_ * sf + p.kappa3 * lam * sf
    x3 = (p.psi1 / (1 + p.rho1) * if_ + p.psi2 / (1 + p.rho2) * id_
          + p.psi3 / (1 + p.rho3) * lam) * sd
    return np.array([
        p.theta1 + p.beta3 * rh - p.mu1 * sh - x1,
        x1 - p.mu1 * eh - p.beta1 * eh - p.beta2 * eh,
        p.beta1 * eh - p.sigma1 * ih - p.mu1 * ih,
        p.beta2 * eh - p.beta3 * rh - p.mu1 * rh,
        p.theta2 - x2 - p.mu2 * sf,
        x2 - p.mu2 * ef - p.gamma * ef,
        p.gamma * ef - p.mu2 * if_ - p.sigma2 * if_,
        p.theta3 - p.mu3 * sd - x3 + p.gamma3 * rd,
        x3 - p.mu3 * ed - p.gamma1 * ed - p.gamma2 * ed,
        p.gamma1 * ed - p.mu3 * id_ - p.sigma3 * id_,
        p.gamma2 * ed - p.mu3 * rd - p.gamma3 * rd,
        p.nu1 * ih + p.nu2 * if_ + p.nu3 * id_ - p.mu4 * m,
    ])


def test_rhs_unit_human_state():
    p = DEFAULT_PARAMS
    d = rhs(0.0, state(s_h=1.0, e_h=1.0), p)
    assert d[S_H] == pytest.approx(p.theta1 - p.mu1)
    assert d[E_H] == pytest.approx(-(p.mu1 + p.beta1 + p.beta2))
    assert d[I_H] == pytest.approx(p.beta1)
    assert d[R_H] == pytest.approx(p.beta2)


def test_rhs_matches_hand_coded(rng):
    from conftest import random_params

    for _ in range(50):
        p = random_params(rng)
        y = rng.uniform(0, 1e4, N_STATE)
        np.testing.assert_allclose(rhs(0.0, y, p), _hand_rhs(y, p), rtol=1e-12, atol=1e-9)


def test_rhs_vanishes_at_dfe(draws):
    for p in draws:
        y = dfe_state(p)
        assert np.linalg.norm(rhs(0.0, y, p)) / np.linalg.norm(y) < 1e-12


def test_population_totals():
    assert population_totals(StateVector()) == (0.0, 0.0, 0.0)
    assert population_totals(PAPER_INITIAL_STATE) == (142040.0, 12520.0, 15025.0)
    for i in range(N_STATE):
        y = np.zeros(N_STATE)
        y[i] = 1.0
        totals = population_totals(y)
        expected = (i in HUMAN, i in FREE_RANGE, i in DOMESTIC)
        assert totals == tuple(float(e) for e in expected)


def test_state_vector_round_trip():
    y = PAPER_INITIAL_STATE.to_array()
    assert StateVector.from_array(y) == PAPER_INITIAL_STATE
    with pytest.raises(ValueError):
        StateVector.from_array(np.zeros(3))


def test_params_file_round_trip(tmp_path):
    p = DEFAULT_PARAMS.replace(tau1=1.0 / 3.0)
    path = tmp_path / "p.toml"
    save_params(p, path)
    assert load_params(path) == p


def test_params_file_unknown_key(tmp_path):
    path = tmp_path / "p.toml"
    path.write_text("tau1 = 0.1\nbogus = 2.0\n")
    with pytest.raises(KeyError):
        load_params(path)


def test_params_from_dict_requires_all_without_base():
    with pytest.raises(KeyError):
        Params.from_dict({"tau1": 1.0})
    assert Params.from_dict(DEFAULT_PARAMS.to_dict()) == DEFAULT_PARAMS
