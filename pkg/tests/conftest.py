import math

import pytest

from extray.poly import Polynomial

ALPHA = (1 - math.sqrt(5)) / 2
BETA = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="session")
def squaring():
    return Polynomial.quadratic(0)


@pytest.fixture(scope="session")
def basilica():
    return Polynomial.quadratic(-1)


@pytest.fixture(scope="session")
def chebyshev():
    return Polynomial.quadratic(-2)


@pytest.fixture(scope="session")
def misiurewicz_i():
    return Polynomial.quadratic(1j)


@pytest.fixture(scope="session")
def cubic_chebyshev():
    return Polynomial.from_coefficients([0, -3, 0, 1])


@pytest.fixture(scope="session")
def cauliflower():
    return Polynomial.quadratic(0.25)
