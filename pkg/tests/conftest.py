import math

import numpy as np
import pytest

from torus_dispersive.coefficients import CoefficientSet, TrigPolynomial, from_terms


def terms(*specs):
    """Shorthand: terms((b1, b2, cos, sin), ...) -> TrigPolynomial."""
    return from_terms([{"beta": [b1, b2], "cos": c, "sin": s} for b1, b2, c, s in specs])


@pytest.fixture
def phi_sin():
    return terms((1, 1, 0.0, 1.0))


@pytest.fixture
def wellposed_set(phi_sin):
    return CoefficientSet.from_potential(phi_sin)


@pytest.fixture
def constant_a1_set():
    return CoefficientSet(a_plus1=TrigPolynomial.constant(1.0))


@pytest.fixture
def sin_gradient_set():
    s = terms((0, 1, 0.0, 1.0))
    return CoefficientSet(a_0=s, a_minus1=s)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[key])
