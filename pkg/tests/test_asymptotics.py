import math

import numpy as np
import pytest
from scipy.integrate import quad

from torus_dispersive.asymptotics import (
    CSV_COLUMNS, AsymptoticSpec, build_psi, build_u_l, constant_psi, family_violated, flow_bound,
    flow_integral, flow_polynomial, flow_resonant_rate, growth_report, growth_reports, reports_to_csv,
    residual_integral, residual_slope,
)
from torus_dispersive.coefficients import CoefficientSet, quadratic_symbol_eval, random_trig_polynomial
from torus_dispersive.spectral import Grid, ResolutionError
from torus_dispersive.symbol import eval_grad_p

from conftest import terms

ZERO = CoefficientSet()
LS = [4, 8, 16, 32]


@pytest.fixture(scope="module")
def grid():
    return Grid(128)


def quad_flow(cs, alpha, tau, x):
    g = eval_grad_p(alpha)
    f = lambda s: float(np.real(quadratic_symbol_eval(cs, (x[0] + s * g[0], x[1] + s * g[1]), alpha)))  # noqa: E731
    return quad(f, 0.0, tau, epsabs=1e-12, epsrel=1e-12, limit=500)[0]


@pytest.mark.parametrize("tau", [0.0, 0.5, 3.0, 17.0])
def test_flow_constant_a1(constant_a1_set, tau):
    assert flow_integral(constant_a1_set, (1, 0), tau, (0.3, 2.0)) == pytest.approx(tau, abs=1e-14)


def test_flow_examples(wellposed_set):
    for x in [(0.0, 0.0), (1.0, 2.5), (4.0, 0.1)]:
        assert abs(flow_integral(wellposed_set, (3, 3), 2 * math.pi, x)) < 1e-12
        assert flow_integral(ZERO, (2, -1), 5.0, x) == 0


def test_flow_against_quadrature(rng):
    for _ in range(6):
        cs = CoefficientSet(a_plus1=random_trig_polynomial(rng, 2), a_0=random_trig_polynomial(rng, 2),
                            a_minus1=random_trig_polynomial(rng, 2))
        alpha = tuple(int(v) for v in rng.integers(-3, 4, size=2))
        tau = float(rng.uniform(0, 3))
        x = tuple(rng.uniform(0, 2 * math.pi, size=2))
        closed = flow_integral(cs, alpha, tau, x)
        assert abs(np.imag(closed)) < 1e-12
        assert abs(np.real(closed) - quad_flow(cs, alpha, tau, x)) < 1e-10


def test_flow_polynomial_is_real(wellposed_set, sin_gradient_set):
    for cs in (wellposed_set, sin_gradient_set):
        P = flow_polynomial(cs, (1, -2), 1.7)
        for b, c in P.terms.items():
            assert abs(P.coefficient((-b[0], -b[1])) - np.conj(c)) < 1e-14


def test_boundedness_dichotomy(wellposed_set, constant_a1_set, sin_gradient_set):
    xs = [(i * 2 * math.pi / 5, j * 2 * math.pi / 5) for i in range(5) for j in range(5)]
    taus = np.linspace(0, 100, 201)
    for alpha in [(1, -1), (2, 1), (3, 3)]:
        bound = flow_bound(wellposed_set, alpha)
        worst = max(abs(flow_integral(wellposed_set, alpha, t, x)) for t in taus for x in xs)
        assert worst <= bound + 1e-12
        assert flow_resonant_rate(wellposed_set, alpha).is_zero()
    for cs, alpha in [(constant_a1_set, (1, 0)), (sin_gradient_set, (0, 1))]:
        x = (0.4, math.pi / 2)
        rates = [flow_integral(cs, alpha, t, x) / t for t in (100.0, 1000.0, 10000.0)]
        assert abs(rates[-1]) > 0.5
        assert abs(rates[-1] - rates[-2]) < abs(rates[0] - rates[1]) + 1e-12


def test_build_psi_normalized():
    for w in (0.5, 1.0, 2.0, 3.0):
        assert build_psi(width=w).l2_norm() == pytest.approx(1.0, abs=1e-12)
    assert constant_psi().l2_norm() == pytest.approx(1.0, abs=1e-15)


def test_build_psi_peak_and_width():
    g = Grid(64)
    narrow = np.abs(g.sample(build_psi(width=0.5)))
    idx = np.unravel_index(np.argmax(narrow), narrow.shape)
    assert idx == (32, 32)
    wide = np.abs(g.sample(build_psi(width=2.0)))
    assert narrow.max() > wide.max()
    assert np.count_nonzero(narrow > 0.01 * narrow.max()) < np.count_nonzero(wide > 0.01 * wide.max())


@pytest.mark.parametrize("width", [0.0, -1.0, math.pi, 4.0])
def test_build_psi_rejects_width(width):
    with pytest.raises(ValueError):
        build_psi(width=width)


@pytest.mark.parametrize("kw", [dict(alpha=(0, 0)), dict(l=0), dict(l=2.0), dict(T=0.0), dict(T=math.inf),
                                dict(n_target=0.5), dict(branch="up"), dict(psi=terms((0, 0, 1.0, 0.0)))])
def test_spec_validation(kw):
    base = dict(alpha=(1, 0), l=4, T=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        AsymptoticSpec(**base)


def test_u_l_norms(grid, constant_a1_set):
    for l in (4, 16):
        spec = AsymptoticSpec((1, 0), l, 3.0)
        assert build_u_l(spec, constant_a1_set, 0.0, grid).norm() == pytest.approx(1.0, abs=1e-10)
        final = build_u_l(spec, constant_a1_set, spec.t_final, grid).norm()
        assert final == pytest.approx(math.exp(3.0), abs=1e-8)
        for t in (0.0, spec.t_final / 3, spec.t_final):
            assert build_u_l(spec, ZERO, t, grid).norm() == pytest.approx(1.0, abs=1e-8)


def test_u_l_time_range_and_resolution(grid):
    spec = AsymptoticSpec((1, 0), 4, 1.0)
    with pytest.raises(ValueError):
        build_u_l(spec, ZERO, spec.t_final * 2, grid)
    with pytest.raises(ResolutionError):
        build_u_l(AsymptoticSpec((1, 0), 64, 1.0), ZERO, 0.0, grid)


def test_dt_u_matches_finite_difference(grid, wellposed_set):
    from torus_dispersive.asymptotics import _Family
    fam = _Family(AsymptoticSpec((1, -1), 8, 2.0), wellposed_set, grid)
    t, h = fam.spec.t_final / 2, 1e-6
    fd = (fam.u(t + h) - fam.u(t - h)) / (2 * h)
    assert np.max(np.abs(fd - fam.dt_u(t))) < 1e-5 * np.max(np.abs(fam.dt_u(t)))


def test_constant_psi_exact_plane_wave(grid):
    r = residual_integral(AsymptoticSpec((1, 0), 4, 1.0, psi=constant_psi()), ZERO, grid)
    assert r < 1e-10


def test_zero_set_residual_halves(grid):
    rs = [residual_integral(AsymptoticSpec((1, 0), l, 1.0), ZERO, grid) for l in (4, 8, 16)]
    assert all(r > 0 and math.isfinite(r) for r in rs)
    for a, b in zip(rs, rs[1:]):
        assert 0.4 <= b / a <= 0.6


def test_time_nodes_minimum(grid):
    with pytest.raises(ValueError):
        residual_integral(AsymptoticSpec((1, 0), 4, 1.0), ZERO, grid, time_nodes=7)


def test_instability_reports(grid, constant_a1_set):
    reports = growth_reports(AsymptoticSpec((1, 0), 4, 3.0), constant_a1_set, grid, LS)
    assert [r.l for r in reports] == LS
    for r in reports:
        assert r.measured_growth_factor == pytest.approx(math.exp(3.0), rel=1e-6)
        assert r.inequality_violated and r.a_alpha > 0 and r.c0 > 0
    for a, b in zip(reports, reports[1:]):
        assert 0.4 <= b.residual_integral / a.residual_integral <= 0.6
    assert residual_slope(reports) == pytest.approx(-1.0, abs=0.2)
    assert reports[-1].residual_integral < 1
    assert family_violated(reports)


def test_zero_and_wellposed_not_violated(grid, wellposed_set):
    for cs, alpha in [(ZERO, (1, 0)), (wellposed_set, (1, -1)), (wellposed_set, (2, 1))]:
        reports = growth_reports(AsymptoticSpec(alpha, 4, 3.0), cs, grid, [4, 8, 16])
        assert not family_violated(reports)
        for r in reports:
            assert r.measured_growth_factor <= math.exp(flow_bound(cs, alpha)) * (1 + 1e-9)
            if cs is ZERO:
                assert r.measured_growth_factor == pytest.approx(1.0, abs=1e-10)


def test_negative_branch_symmetry(grid, sin_gradient_set):
    spec = AsymptoticSpec((0, 1), 8, 2.0, psi=build_psi(center=(math.pi, math.pi / 2)))
    neg = AsymptoticSpec((0, 1), 8, 2.0, psi=spec.psi, branch="negative")
    flipped = sin_gradient_set.negated_second_order()
    for t in (0.0, spec.t_final / 2, spec.t_final):
        a = build_u_l(spec, sin_gradient_set, t, grid).norm()
        b = build_u_l(neg, flipped, t, grid).norm()
        assert a == pytest.approx(b, rel=1e-13)


def test_growth_exactness_resonant_constant(grid):
    # alpha=(1,0) has p'(alpha)=(0,1): beta=(0,1) oscillates with period 2 pi, beta=0 resonates
    cs = CoefficientSet(a_plus1=terms((0, 0, 0.5, 0.0), (0, 1, 0.3, 0.0)))
    assert flow_resonant_rate(cs, (1, 0)).degree == 0
    spec = AsymptoticSpec((1, 0), 8, 2 * math.pi)
    assert flow_integral(cs, (1, 0), spec.T, (0.7, 1.1)) == pytest.approx(math.pi, abs=1e-12)
    r = growth_report(spec, cs, grid)
    assert r.norm_final == pytest.approx(math.exp(math.pi), abs=1e-8)
    assert r.norm_initial == pytest.approx(1.0, abs=1e-10)


def test_report_csv_and_dict(grid, constant_a1_set):
    reports = growth_reports(AsymptoticSpec((1, 0), 4, 3.0), constant_a1_set, grid, [4, 8], workers=1)
    lines = reports_to_csv(reports).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3 and lines[1].startswith("4,") and lines[1].endswith(",true")
    d = reports[0].to_dict()
    assert list(d)[:7] == ["l", "norm_initial", "norm_final", "residual_integral", "a_alpha",
                           "inequality_violated", "measured_growth_factor"]


def test_parallel_matches_serial(grid, constant_a1_set):
    spec = AsymptoticSpec((1, 0), 4, 3.0)
    assert growth_reports(spec, constant_a1_set, grid, [8, 4], workers=1) == \
        growth_reports(spec, constant_a1_set, grid, [8, 4], workers=3)
