import math
from fractions import Fraction

import numpy as np
import pytest

from torus_dispersive.exact import RadicalScalar
from torus_dispersive.resonance import (
    discriminant, lambda_check, quartic_residual, solve_xi, trick_closed_form, trick_identity,
)
from torus_dispersive.symbol import eval_grad_p

BOX = [(a, b) for a in range(-20, 21) for b in range(-20, 21)]


@pytest.mark.parametrize("alpha, D", [((0, 0), 0), ((3, 3), 36), ((1, -1), 12)])
def test_discriminant(alpha, D):
    assert discriminant(alpha) == D


@pytest.mark.parametrize("alpha, xi", [((0, 0), (0.0, 0.0)), ((0, 4), (2.0, 0.0)), ((3, 3), (1.0, 1.0)),
                                       ((1, -1), (0.3933198931903286, -1.4678898250138706))])
def test_solve_xi_examples(alpha, xi):
    sol = solve_xi(alpha)
    assert sol.xi_float == pytest.approx(xi, abs=1e-12)
    # independent oracle: the gradient evaluated in floats at both signs
    for w in sol.pair():
        assert np.allclose(eval_grad_p(w), alpha, atol=1e-12)


@pytest.mark.parametrize("alpha", [(5, 0), (-5, 0), (0, -6), (0, 7), (7, -4), (20, 1), (-13, 17)])
def test_axis_and_generic_cases_exact(alpha):
    sol = solve_xi(alpha)
    assert sol.verify_exact()
    g = sol.exact_gradient()
    assert (g[0], g[1]) == alpha


def test_surjectivity_box():
    for alpha in BOX:
        sol = solve_xi(alpha)
        assert sol.verify_exact(), alpha
        for w in sol.pair():
            assert math.dist(eval_grad_p(w), alpha) <= 1e-9
        x, y = sol.xi_float
        if x:
            assert x * x == pytest.approx(float(sol.xi_sq), rel=1e-12)
        if y:
            assert y * y == pytest.approx(float(sol.eta_sq), rel=1e-12)


def test_quartic_and_positivity_guards():
    for a, b in BOX:
        sol = solve_xi((a, b))
        if a and b:
            assert quartic_residual(sol).is_zero()
            D = discriminant((a, b))
            assert D - (a - 2 * b) ** 2 == 3 * a * a
            assert 4 * (a + b) ** 2 - D == 12 * a * b
            assert sol.chi in (-1, 1)


def test_representative_choice():
    for alpha in BOX:
        x, y = solve_xi(alpha).xi_float
        assert x > 0 or (x == 0 and y >= 0)


@pytest.mark.parametrize("alpha, expected", [((0, 5), Fraction(-10, 3)), ((3, 3), -2), ((0, 0), 0)])
def test_trick_examples(alpha, expected):
    assert trick_identity(alpha) == expected


def test_trick_identity_box():
    for alpha in BOX:
        if alpha == (0, 0):
            continue
        t = trick_identity(alpha)
        assert t == trick_closed_form(alpha)
        assert t.sign() == -1
        if alpha[0] and alpha[1]:
            assert t == RadicalScalar(0, Fraction(-1, 3), discriminant(alpha))


def test_lambda_check():
    m = lambda_check((1, 1))
    assert m.member and m.nearest == (3, 3) and m.distance == 0
    m = lambda_check((0.5, 0))
    assert not m.member and m.image == pytest.approx((0, 0.25))
    m = lambda_check(solve_xi((7, -4)).xi_float)
    assert m.member and m.nearest == (7, -4)
    with pytest.raises(ValueError):
        lambda_check((1, 1), tol=0)


def test_solution_serialization():
    d = solve_xi((3, 3)).to_dict(exact=True)
    assert d["xi"] == [1.0, 1.0] and d["discriminant"] == 36 and d["case"] == "generic"
