import math

import numpy as np
import pytest

from torus_dispersive.analyzer import (
    AnalyzerError, PreconditionError, check_gradient_condition, check_sum_identity, classify,
    condition_ii_closed_form, condition_ii_quadrature, construct_potential, required_nodes,
)
from torus_dispersive.coefficients import CoefficientSet, TrigPolynomial, from_terms, random_trig_polynomial

from conftest import terms


def test_sum_identity_examples(wellposed_set, constant_a1_set):
    r = check_sum_identity(wellposed_set)
    assert r.passed and r.max_violation == 0
    r = check_sum_identity(constant_a1_set)
    assert not r.passed and r.max_violation == 1 and (0, 0) in r.failing
    assert check_sum_identity(CoefficientSet()).passed


def test_gradient_condition_examples():
    c = terms((1, 1, 1.0, 0.0))
    assert check_gradient_condition(CoefficientSet(a_plus1=c, a_minus1=c)).passed
    r = check_gradient_condition(CoefficientSet(a_minus1=terms((0, 1, 0.0, 1.0))))
    assert not r.passed and r.max_violation == pytest.approx(0.5) and (0, 1) in r.failing
    assert check_gradient_condition(CoefficientSet()).passed


@pytest.mark.parametrize("am, ap, phi", [
    (terms((1, 1, 1.0, 0.0)), terms((1, 1, 1.0, 0.0)), terms((1, 1, 0.0, 1.0))),
    (terms((1, 0, 1.0, 0.0)), TrigPolynomial.zero(), terms((1, 0, 0.0, 1.0))),
    (TrigPolynomial.zero(), TrigPolynomial.zero(), TrigPolynomial.zero()),
])
def test_construct_potential_examples(am, ap, phi):
    got = construct_potential(CoefficientSet(a_plus1=ap, a_0=ap + am, a_minus1=am))
    assert got.allclose(phi, tol=1e-15)
    assert got.coefficient((0, 0)) == 0


def test_construct_potential_precondition():
    with pytest.raises(PreconditionError):
        construct_potential(CoefficientSet(a_minus1=terms((0, 1, 0.0, 1.0))))


def test_construct_potential_exact_round_trip():
    phi = from_terms([{"beta": [2, -1], "cos": "1/3", "sin": "-2/7"}, {"beta": [0, 1], "cos": 5}], exact=True)
    cs = CoefficientSet.from_potential(phi)
    got = construct_potential(cs)
    assert got.partial_derivative(0) == cs.a_minus1
    assert got.partial_derivative(1) == cs.a_plus1


def test_condition_ii_examples(wellposed_set, constant_a1_set):
    assert condition_ii_closed_form(wellposed_set, (3, 3), (0.4, 1.0)) == pytest.approx(0, abs=1e-12)
    assert condition_ii_quadrature(wellposed_set, (3, 3), (0.0, 0.0)) == pytest.approx(0, abs=1e-10)
    for f in (condition_ii_closed_form, condition_ii_quadrature):
        assert f(constant_a1_set, (0, 1), (1.0, 2.0)) == pytest.approx(2 * math.pi, abs=1e-10)
        assert f(CoefficientSet(), (2, -1), (1.0, 2.0)) == 0


def test_condition_ii_insufficient_nodes(wellposed_set):
    need = required_nodes(wellposed_set, (3, 3))
    with pytest.raises(AnalyzerError):
        condition_ii_quadrature(wellposed_set, (3, 3), (0, 0), nodes=need - 1)


def test_closed_form_matches_quadrature_random(rng):
    for _ in range(5):
        cs = CoefficientSet(*(random_trig_polynomial(rng, 2) for _ in range(3)))
        for alpha in [(1, 0), (2, -3), (0, -2), (4, 1)]:
            x = tuple(rng.uniform(0, 2 * math.pi, 2))
            c = condition_ii_closed_form(cs, alpha, x)
            q = condition_ii_quadrature(cs, alpha, x)
            assert abs(c - q) <= 1e-10 * max(1, abs(c))


def test_classify_examples(wellposed_set, constant_a1_set, sin_gradient_set):
    r = classify(wellposed_set)
    assert r.well_posed and r.potential.allclose(terms((1, 1, 0.0, 1.0)))
    assert r.condition_ii_max < 1e-10
    r = classify(constant_a1_set)
    assert not r.well_posed and (0, 0) in r.failing_modes
    r = classify(sin_gradient_set)
    assert not r.well_posed and r.sum_identity_max_violation == 0
    assert r.gradient_max_violation == pytest.approx(0.5) and (0, 1) in r.failing_modes


def test_classify_random_potentials(rng):
    for _ in range(4):
        phi = random_trig_polynomial(rng, 3, mean_zero=True)
        r = classify(CoefficientSet.from_potential(phi))
        assert r.well_posed
        assert r.potential.allclose(phi, tol=1e-13)
        assert r.condition_ii_max <= 1e-10
        assert r.closed_vs_quadrature_max <= 1e-10


@pytest.mark.parametrize("eps", [1e-9, 1e-3, 1.0])
def test_perturbation_flips_verdict(wellposed_set, eps):
    bump = TrigPolynomial({(1, 2): eps / 2, (-1, -2): eps / 2})
    r = classify(wellposed_set.replace(a_plus1=wellposed_set.a_plus1 + bump))
    assert not r.well_posed


def test_report_json_layout(wellposed_set):
    d = classify(wellposed_set, alpha_box=1, x_samples=1).to_dict()
    assert list(d)[:7] == ["verdict", "sum_identity_max_violation", "gradient_max_violation",
                           "mean_vector", "failing_modes", "potential", "condition_ii_max"]
    assert len(d["condition_ii_samples"]) == 9


def test_classify_rejects_bad_box(wellposed_set):
    with pytest.raises(ValueError):
        classify(wellposed_set, alpha_box=0)
