import sys
from pathlib import Path

import numpy as np
import pytest

from rabies_dyn.model import CONTACT_RATES, DEFAULT_PARAMS, PARAM_NAMES, Params

sys.path.insert(0, str(Path(__file__).parent))


def random_params(rng: np.random.Generator, spread: float = 2.0,
                  contact_log10: tuple[float, float] | None = None) -> Params:
    """Every default rate multiplied by a log-uniform factor in [1/spread, spread].

    ``contact_log10`` additionally scales the nine contact rates together by
    10**U(lo, hi), which is how draws are pushed across R0 = 1.
    """
    factors = np.exp(rng.uniform(-np.log(spread), np.log(spread), len(PARAM_NAMES)))
    values = {n: getattr(DEFAULT_PARAMS, n) * f for n, f in zip(PARAM_NAMES, factors)}
    p = Params(**values)
    if contact_log10 is not None:
        p = p.scaled(CONTACT_RATES, 10.0 ** rng.uniform(*contact_log10))
    return p.validate()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def draws(rng):
    return [random_params(rng) for _ in range(100)]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
