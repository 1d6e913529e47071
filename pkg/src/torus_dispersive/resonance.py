"""Exact solutions of grad p(xi) = (alpha, beta) for integer targets.

Writing xi = (x, y), the system is

    y (2x + y) = alpha,    x (2y + x) = beta,

and every solution's quadratic monomials x**2, y**2, x*y live in Q(sqrt D)
with D = (beta - 2 alpha)**2 + 3 beta**2.  We store those monomials exactly and
only take square roots to produce a floating-point representative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .exact import RadicalScalar
from .symbol import LatticePoint, Wavevector, as_lattice_point, eval_grad_p, grad_p_from_monomials


def discriminant(alpha) -> int:
    a, b = as_lattice_point(alpha)
    return (b - 2 * a) ** 2 + 3 * b * b


@dataclass(frozen=True)
class LatticeSolution:
    """The pair +-xi(alpha) with grad p(+-xi) = alpha.

    ``xi_float`` is the representative with xi1 > 0, or xi1 == 0 and xi2 >= 0.
    """

    alpha: LatticePoint
    xi_sq: RadicalScalar
    eta_sq: RadicalScalar
    xi_eta: RadicalScalar
    chi: int
    xi_float: Wavevector

    @property
    def discriminant(self) -> int:
        return self.xi_sq.discriminant

    @property
    def case(self) -> str:
        a, b = self.alpha
        if a == 0 and b == 0:
            return "origin"
        if a == 0:
            return "beta_axis"
        if b == 0:
            return "alpha_axis"
        return "generic"

    def pair(self) -> tuple[Wavevector, Wavevector]:
        x, y = self.xi_float
        return Wavevector(x, y), Wavevector(-x, -y)

    def exact_gradient(self) -> Wavevector:
        """grad p(+-xi) computed from the stored monomials, exactly in Q(sqrt D)."""
        return grad_p_from_monomials(self.xi_sq, self.xi_eta, self.eta_sq)

    def verify_exact(self) -> bool:
        """Check in Q(sqrt D) that the monomials come from a real vector solving the system."""
        g1, g2 = self.exact_gradient()
        a, b = self.alpha
        return (
            g1 == a
            and g2 == b
            and self.xi_sq >= 0
            and self.eta_sq >= 0
            and self.xi_eta * self.xi_eta == self.xi_sq * self.eta_sq
        )

    def to_dict(self, exact: bool = False) -> dict:
        x, y = self.xi_float
        out = {
            "alpha": list(self.alpha),
            "xi": [x, y],
            "xi_negated": [-x, -y],
            "chi": self.chi,
            "case": self.case,
        }
        if exact:
            out["discriminant"] = self.discriminant
            out["xi1_squared"] = str(self.xi_sq)
            out["xi2_squared"] = str(self.eta_sq)
            out["xi1_xi2"] = str(self.xi_eta)
        return out


def _axis_monomials(t: int, D: int, along_first: bool):
    """Closed forms for the targets (0, t) (along_first=False) and (t, 0).

    For (0, t): t > 0 gives +-(sqrt t, 0); t < 0 gives +-(sqrt s, -2 sqrt s), s = -t/3.
    The target (t, 0) is the same with the two components swapped.
    """
    R = lambda v: RadicalScalar.rational(v, D)  # noqa: E731
    if t > 0:
        lead_sq, other_sq, prod = Fraction(t), Fraction(0), Fraction(0)
    else:
        s = Fraction(-t, 3)
        lead_sq, other_sq, prod = s, 4 * s, -2 * s
    if along_first:
        return R(other_sq), R(lead_sq), R(prod)
    return R(lead_sq), R(other_sq), R(prod)


def solve_xi(alpha) -> LatticeSolution:
    """Solve grad p(xi) = alpha, returning both signs of the solution.

    Axis targets use the rational closed forms; the generic case takes the
    positive root of 3X**2 + 2(2a - b)X - b**2 = 0 for X = xi1**2.
    """
    a, b = as_lattice_point(alpha)
    D = (b - 2 * a) ** 2 + 3 * b * b
    sqrtD = RadicalScalar.root(D)
    R = lambda v: RadicalScalar.rational(v, D)  # noqa: E731

    if a == 0 and b == 0:
        zero = R(0)
        return LatticeSolution(LatticePoint(0, 0), zero, zero, zero, 0, Wavevector(0.0, 0.0))

    if a == 0 or b == 0:
        xi_sq, eta_sq, xi_eta = _axis_monomials(b if a == 0 else a, D, along_first=(b == 0))
        chi = xi_eta.sign()
    else:
        xi_sq = (sqrtD + (b - 2 * a)) / 3
        eta_sq = (sqrtD + (a - 2 * b)) / 3
        two_xi_eta = (-sqrtD + 2 * (a + b)) / 3
        xi_eta = two_xi_eta / 2
        chi = two_xi_eta.sign()
        if chi == 0:
            raise ArithmeticError(f"chi vanished for alpha={alpha!r}")  # impossible: 4(a+b)^2 - D = 12ab

    x = math.sqrt(max(float(xi_sq), 0.0))
    y = math.sqrt(max(float(eta_sq), 0.0))
    if x > 0:
        rep = Wavevector(x, math.copysign(y, chi) if chi != 0 else y)
    else:
        rep = Wavevector(0.0, y)
    return LatticeSolution(LatticePoint(a, b), xi_sq, eta_sq, xi_eta, chi, rep)


def quartic_residual(sol: LatticeSolution) -> RadicalScalar:
    """3X**2 + 2(2a - b)X - b**2 at X = xi1**2; zero for every solution."""
    a, b = sol.alpha
    X = sol.xi_sq
    return X * X * 3 + X * (2 * (2 * a - b)) - b * b


def trick_identity(alpha) -> RadicalScalar:
    """xi1(a)xi2(a) + xi1(-a)xi2(-a), exactly."""
    a, b = as_lattice_point(alpha)
    return solve_xi((a, b)).xi_eta + solve_xi((-a, -b)).xi_eta


def trick_closed_form(alpha) -> RadicalScalar:
    """Case-wise closed form of :func:`trick_identity`."""
    a, b = as_lattice_point(alpha)
    D = discriminant((a, b))
    if a == 0:
        return RadicalScalar.rational(Fraction(-2, 3) * abs(b), D)
    if b == 0:
        return RadicalScalar.rational(Fraction(-2, 3) * abs(a), D)
    return RadicalScalar(0, Fraction(-1, 3), D)


class LambdaMembership(NamedTuple):
    xi: Wavevector
    image: Wavevector
    nearest: LatticePoint
    distance: float
    member: bool


def lambda_check(xi, tol: float = 1e-9) -> LambdaMembership:
    """Numerically test whether grad p(xi) lies on Z^2."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    xi = Wavevector(float(xi[0]), float(xi[1]))
    image = Wavevector(*(float(v) for v in eval_grad_p(xi)))
    nearest = LatticePoint(round(image[0]), round(image[1]))
    distance = math.hypot(image[0] - nearest[0], image[1] - nearest[1])
    return LambdaMembership(xi, image, nearest, distance, distance <= tol)
