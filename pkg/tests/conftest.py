from __future__ import annotations

from pathlib import Path

import pytest

from algebra import Coefficient, LinComb, parse_coefficient
from model import Model, StatePolynomial

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def poly(*coeffs: str) -> StatePolynomial:
    return StatePolynomial.from_values(parse_coefficient(c) for c in coeffs)


def lc(*terms) -> LinComb:
    """lc(("a", (0,)), ("-a^2", (0, 0))) -> LinComb."""
    return LinComb({tuple(word): parse_coefficient(coef) for coef, word in terms})


def ou_model() -> Model:
    # drivers 1 = χρόνος, 2 = Brown
    return Model(n_drivers=2, f=(poly("a", "-a"), poly("b")), y0=Coefficient(),
                 time_driver=1, first_letter=1)


def quadratic_model(y0: str = "0") -> Model:
    return Model(n_drivers=2, f=(poly("a", "-a"), poly("0", "0", "b")),
                 y0=parse_coefficient(y0), time_driver=0)


@pytest.fixture
def ou() -> Model:
    return ou_model()


@pytest.fixture
def quadratic() -> Model:
    return quadratic_model()


@pytest.fixture
def quadratic_y0() -> Model:
    return quadratic_model("y0")
