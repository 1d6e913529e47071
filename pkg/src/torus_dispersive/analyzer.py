"""Decide L2-well-posedness from the Fourier coefficients of the second-order terms.

The decision uses the coefficient identities

    a0[beta] = a1[beta] + a_-1[beta]               for every beta,
    (a_-1[beta], a1[beta]) parallel to beta,  (a_-1[0], a1[0]) = 0,

which together say a_-1 = d1 phi, a1 = d2 phi for a trigonometric polynomial
phi.  The resonance averages of the quadratic symbol along closed
bicharacteristics are evaluated independently (closed form and quadrature) as a
cross-check of that verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import gcd
from typing import NamedTuple

import numpy as np

from .coefficients import CoefficientSet, TrigPolynomial, evaluate_complex
from .exact import GaussianRational
from .resonance import solve_xi
from .symbol import LatticePoint, Wavevector, as_lattice_point

DEFAULT_TOL = 1e-10
QUADRATURE_TOL = 1e-10
# offsets of the x-sample grid, as fractions of a grid cell (golden-ratio based,
# so trigonometric terms of low degree do not vanish on the whole sample grid)
_X_OFFSET = (0.6180339887498949, 0.3819660112501051)


class AnalyzerError(ValueError):
    pass


class PreconditionError(AnalyzerError):
    pass


class InconsistencyError(RuntimeError):
    """Condition II samples disagree with the coefficient-identity verdict."""


class CheckResult(NamedTuple):
    passed: bool
    max_violation: float
    failing: list


@dataclass
class ConditionIISample:
    alpha: LatticePoint
    xi: Wavevector
    x: tuple[float, float]
    closed_form_value: float
    quadrature_value: float

    def to_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "xi": list(self.xi),
            "x": list(self.x),
            "closed_form_value": self.closed_form_value,
            "quadrature_value": self.quadrature_value,
        }


@dataclass
class WellPosednessReport:
    verdict: str
    sum_identity_max_violation: float
    gradient_max_violation: float
    mean_vector: tuple[complex, complex]
    failing_modes: list[LatticePoint]
    potential: TrigPolynomial | None
    condition_ii_samples: list[ConditionIISample] = field(default_factory=list)

    @property
    def well_posed(self) -> bool:
        return self.verdict == "well_posed"

    @property
    def condition_ii_max(self) -> float:
        return max((abs(s.closed_form_value) for s in self.condition_ii_samples), default=0.0)

    @property
    def closed_vs_quadrature_max(self) -> float:
        return max((abs(s.closed_form_value - s.quadrature_value)
                    for s in self.condition_ii_samples), default=0.0)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "sum_identity_max_violation": self.sum_identity_max_violation,
            "gradient_max_violation": self.gradient_max_violation,
            "mean_vector": [[z.real, z.imag] for z in map(complex, self.mean_vector)],
            "failing_modes": [list(b) for b in self.failing_modes],
            "potential": None if self.potential is None else self.potential.to_terms(),
            "condition_ii_max": self.condition_ii_max,
            "closed_vs_quadrature_max": self.closed_vs_quadrature_max,
            "condition_ii_samples": [s.to_dict() for s in self.condition_ii_samples],
        }


def _canon(beta) -> tuple[int, int]:
    b1, b2 = beta
    return (b1, b2) if (b1 > 0 or (b1 == 0 and b2 >= 0)) else (-b1, -b2)


def _abs(z) -> float:
    return abs(z) if isinstance(z, GaussianRational) else abs(complex(z))


def _second_order_support(cs: CoefficientSet) -> list[tuple[int, int]]:
    keys = set(cs.a_plus1.support()) | set(cs.a_0.support()) | set(cs.a_minus1.support())
    return sorted(keys)


def check_sum_identity(cs: CoefficientSet, tol: float = DEFAULT_TOL) -> CheckResult:
    """max over beta of |a0[beta] - a1[beta] - a_-1[beta]|."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    worst, failing = 0.0, set()
    for beta in _second_order_support(cs):
        v = _abs(cs.a_0.coefficient(beta) - cs.a_plus1.coefficient(beta) - cs.a_minus1.coefficient(beta))
        worst = max(worst, v)
        if v > tol:
            failing.add(_canon(beta))
    return CheckResult(worst <= tol, worst, sorted(failing))


def check_gradient_condition(cs: CoefficientSet, tol: float = DEFAULT_TOL) -> CheckResult:
    """(a_-1[0], a1[0]) must vanish and (a_-1[beta], a1[beta]) must be parallel to beta."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    am, ap = cs.a_minus1, cs.a_plus1
    worst = math.hypot(_abs(am.coefficient((0, 0))), _abs(ap.coefficient((0, 0))))
    failing = {(0, 0)} if worst > tol else set()
    for beta in sorted(set(am.support()) | set(ap.support())):
        if beta == (0, 0):
            continue
        b1, b2 = beta
        v = _abs(am.coefficient(beta) * b2 - ap.coefficient(beta) * b1)
        worst = max(worst, v)
        if v > tol:
            failing.add(_canon(beta))
    return CheckResult(worst <= tol, worst, sorted(failing))


def construct_potential(cs: CoefficientSet, tol: float = DEFAULT_TOL) -> TrigPolynomial:
    """Mean-zero phi with d1 phi = a_-1 and d2 phi = a1."""
    grad = check_gradient_condition(cs, tol)
    if not grad.passed:
        raise PreconditionError(
            f"(a_-1, a1) is not a gradient (violation {grad.max_violation:.3e} at {grad.failing})")
    am, ap = cs.a_minus1, cs.a_plus1
    out = {}
    for beta in sorted(set(am.support()) | set(ap.support())):
        if beta == (0, 0):
            continue
        b1, b2 = beta
        num, k = (am.coefficient(beta), b1) if b1 != 0 else (ap.coefficient(beta), b2)
        if isinstance(num, GaussianRational):
            out[beta] = num / GaussianRational(0, k)
        else:
            out[beta] = complex(num) / (1j * k)
    return TrigPolynomial(out, check=False)


def _monomials(alpha) -> tuple[float, float, float]:
    sol = solve_xi(alpha)
    return float(sol.xi_sq), float(sol.xi_eta), float(sol.eta_sq)


def condition_ii_closed_form(cs: CoefficientSet, alpha, x) -> float:
    """2 pi * sum over support modes beta with beta.alpha == 0 of a_beta(xi(alpha)) exp(i beta.x)."""
    a1, a2 = as_lattice_point(alpha)
    s11, s12, s22 = _monomials((a1, a2))
    x1, x2 = float(x[0]), float(x[1])
    total = 0j
    for beta in _second_order_support(cs):
        if beta[0] * a1 + beta[1] * a2 != 0:
            continue
        amp = (complex(cs.a_plus1.coefficient(beta)) * s11
               + 2 * complex(cs.a_0.coefficient(beta)) * s12
               + complex(cs.a_minus1.coefficient(beta)) * s22)
        total += amp * np.exp(1j * (beta[0] * x1 + beta[1] * x2))
    return 2 * math.pi * total.real


def required_nodes(cs: CoefficientSet, alpha) -> int:
    a1, a2 = as_lattice_point(alpha)
    return max(8, 4 * cs.second_order_degree * max(abs(a1), abs(a2)))


def _quadrature_many(cs: CoefficientSet, alpha, xs: np.ndarray, nodes: int) -> np.ndarray:
    """Trapezoid values of int_0^{2 pi} a(x + t alpha, xi(alpha)) dt for each row of xs."""
    a1, a2 = as_lattice_point(alpha)
    xi1, xi2 = solve_xi((a1, a2)).xi_float
    t = 2 * math.pi * np.arange(nodes) / nodes
    y1 = (xs[:, 0:1] + t[None, :] * a1).ravel()
    y2 = (xs[:, 1:2] + t[None, :] * a2).ravel()
    ap, a0, am = evaluate_complex([cs.a_plus1, cs.a_0, cs.a_minus1], y1, y2).real
    integrand = ap * xi1 * xi1 + 2 * a0 * xi1 * xi2 + am * xi2 * xi2
    return integrand.reshape(len(xs), nodes).sum(axis=1) * (2 * math.pi / nodes)


def condition_ii_quadrature(cs: CoefficientSet, alpha, x, nodes: int | None = None) -> float:
    """Trapezoid rule along the closed bicharacteristic through x; exact for these integrands."""
    need = required_nodes(cs, alpha)
    if nodes is None:
        nodes = need
    if nodes < need:
        raise AnalyzerError(f"need at least {need} quadrature nodes, got {nodes}")
    return float(_quadrature_many(cs, alpha, np.array([[float(x[0]), float(x[1])]]), nodes)[0])


def sample_points(x_samples: int) -> list[tuple[float, float]]:
    h = 2 * math.pi / x_samples
    return [(h * (j + _X_OFFSET[0]), h * (k + _X_OFFSET[1]))
            for j in range(x_samples) for k in range(x_samples)]


def _perpendicular(beta) -> tuple[int, int]:
    b1, b2 = beta
    g = gcd(b1, b2)
    return (-b2 // g, b1 // g)


def classify(cs: CoefficientSet, alpha_box: int = 5, x_samples: int = 3,
             tol: float = DEFAULT_TOL) -> WellPosednessReport:
    """Coefficient-identity verdict plus condition II samples over the alpha box and an x-grid."""
    if alpha_box < 1:
        raise ValueError("alpha_box must be >= 1")
    if x_samples < 1:
        raise ValueError("x_samples must be >= 1")
    s = check_sum_identity(cs, tol)
    g = check_gradient_condition(cs, tol)
    well = s.passed and g.passed
    potential = construct_potential(cs, tol) if well else None
    failing = sorted(set(s.failing) | set(g.failing))

    xs = sample_points(x_samples)
    xs_arr = np.array(xs)
    samples: list[ConditionIISample] = []
    for a1 in range(-alpha_box, alpha_box + 1):
        for a2 in range(-alpha_box, alpha_box + 1):
            alpha = LatticePoint(a1, a2)
            xi = solve_xi(alpha).xi_float
            quad = _quadrature_many(cs, alpha, xs_arr, required_nodes(cs, alpha))
            for x, q in zip(xs, quad):
                closed = condition_ii_closed_form(cs, alpha, x)
                samples.append(ConditionIISample(alpha, xi, x, closed, float(q)))

    report = WellPosednessReport(
        verdict="well_posed" if well else "ill_posed",
        sum_identity_max_violation=s.max_violation,
        gradient_max_violation=g.max_violation,
        mean_vector=(complex(cs.a_minus1.coefficient((0, 0))), complex(cs.a_plus1.coefficient((0, 0)))),
        failing_modes=[LatticePoint(*b) for b in failing],
        potential=potential,
        condition_ii_samples=samples,
    )
    _assert_consistent(report, cs, alpha_box, tol)
    return report


def _assert_consistent(report: WellPosednessReport, cs: CoefficientSet, alpha_box: int,
                       tol: float) -> None:
    for smp in report.condition_ii_samples:
        scale = max(1.0, abs(smp.closed_form_value))
        if abs(smp.closed_form_value - smp.quadrature_value) > QUADRATURE_TOL * scale:
            raise InconsistencyError(f"closed form and quadrature disagree at alpha={smp.alpha}")
    ii_max = report.condition_ii_max
    if report.well_posed:
        if ii_max > max(tol, QUADRATURE_TOL):
            raise InconsistencyError(f"coefficient identities hold but a resonance average is {ii_max:.3e}")
        return
    # Only failures well above tol whose perpendicular direction fits in the
    # alpha box are guaranteed to show up among the samples.
    margin = 1e3 * max(tol, QUADRATURE_TOL)
    strong = [b for b in report.failing_modes if _mode_violation(cs, b) > margin]
    visible = [b for b in strong if b == (0, 0) or max(map(abs, _perpendicular(b))) <= alpha_box]
    if visible and ii_max <= max(tol, QUADRATURE_TOL):
        raise InconsistencyError(
            f"modes {visible} violate the identities but every resonance average vanished")


def _mode_violation(cs: CoefficientSet, beta) -> float:
    b1, b2 = beta
    am, ap, a0 = (complex(p.coefficient(beta)) for p in (cs.a_minus1, cs.a_plus1, cs.a_0))
    v_sum = abs(a0 - ap - am)
    v_grad = abs(am * b2 - ap * b1) if beta != (0, 0) else math.hypot(abs(am), abs(ap))
    return max(v_sum, v_grad)
