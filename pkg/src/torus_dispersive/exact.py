"""Exact scalar fields used for verification: Q(sqrt D) and Q(i).

Both types are small immutable value classes over :class:`fractions.Fraction`.
Floats are only produced on request, never used for comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

RationalLike = Union[int, Fraction]


def _q(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def _isqrt_exact(n: int) -> int | None:
    r = math.isqrt(n)
    return r if r * r == n else None


@dataclass(frozen=True)
class RadicalScalar:
    """The number ``rational_part + radical_coeff * sqrt(discriminant)``.

    ``discriminant`` is a nonnegative integer shared by every operand of an
    arithmetic operation; mixing two different discriminants raises.
    When ``discriminant`` is a perfect square the value is still stored in
    this two-part form; comparisons collapse it to a rational.
    """

    rational_part: Fraction
    radical_coeff: Fraction
    discriminant: int

    def __post_init__(self):
        object.__setattr__(self, "rational_part", _q(self.rational_part))
        object.__setattr__(self, "radical_coeff", _q(self.radical_coeff))
        if not isinstance(self.discriminant, int) or self.discriminant < 0:
            raise ValueError("discriminant must be a nonnegative integer")

    @classmethod
    def rational(cls, value: RationalLike, discriminant: int) -> "RadicalScalar":
        return cls(_q(value), Fraction(0), discriminant)

    @classmethod
    def root(cls, discriminant: int) -> "RadicalScalar":
        return cls(Fraction(0), Fraction(1), discriminant)

    def _coerce(self, other) -> "RadicalScalar":
        if isinstance(other, RadicalScalar):
            if other.discriminant != self.discriminant:
                raise ValueError(
                    f"mixed discriminants {self.discriminant} and {other.discriminant}"
                )
            return other
        return RadicalScalar.rational(_q(other), self.discriminant)

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return RadicalScalar(
            self.rational_part + o.rational_part,
            self.radical_coeff + o.radical_coeff,
            self.discriminant,
        )

    __radd__ = __add__

    def __neg__(self):
        return RadicalScalar(-self.rational_part, -self.radical_coeff, self.discriminant)

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.rational_part, self.radical_coeff, o.rational_part, o.radical_coeff
        return RadicalScalar(a * c + b * d * self.discriminant, a * d + b * c, self.discriminant)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RadicalScalar):
            return NotImplemented
        q = _q(other)
        return RadicalScalar(self.rational_part / q, self.radical_coeff / q, self.discriminant)

    def norm(self) -> Fraction:
        """Field norm a**2 - b**2 D, exact."""
        a, b = self.rational_part, self.radical_coeff
        return a * a - b * b * self.discriminant

    def sign(self) -> int:
        a, b, D = self.rational_part, self.radical_coeff, self.discriminant
        if b == 0 or D == 0:
            return (a > 0) - (a < 0)
        r = _isqrt_exact(D)
        if r is not None:
            v = a + b * r
            return (v > 0) - (v < 0)
        sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
        if sa == 0:
            return sb
        if sa == sb:
            return sa
        # opposite signs: compare a**2 with b**2 D (never equal, D not square)
        return sa if a * a > b * b * D else sb

    def is_zero(self) -> bool:
        return self.sign() == 0

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return (self - o).is_zero()

    def __hash__(self):
        return hash((self.rational_part, self.radical_coeff, self.discriminant))

    def __lt__(self, other):
        return (self - self._coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - self._coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - self._coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - self._coerce(other)).sign() >= 0

    def __float__(self) -> float:
        a, b, D = self.rational_part, self.radical_coeff, self.discriminant
        if b == 0 or D == 0:
            return float(a)
        r = _isqrt_exact(D)
        if r is not None:
            return float(a + b * r)
        rad = float(b) * math.sqrt(D)
        if (a > 0) == (b > 0) or a == 0:
            return float(a) + rad
        # a + b sqrt(D) = norm / (a - b sqrt(D)) avoids cancellation
        return float(self.norm()) / (float(a) - rad)

    def __repr__(self):
        return f"RadicalScalar({self.rational_part} + {self.radical_coeff}*sqrt({self.discriminant}))"

    def __str__(self):
        a, b, D = self.rational_part, self.radical_coeff, self.discriminant
        if b == 0:
            return str(a)
        if a == 0:
            return f"{b}*sqrt({D})"
        op = "+" if b > 0 else "-"
        return f"{a} {op} {abs(b)}*sqrt({D})"


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _q(self.re))
        object.__setattr__(self, "im", _q(self.im))

    @staticmethod
    def _coerce(other) -> "GaussianRational":
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, complex):
            # only the exact zero (a missing coefficient) mixes with exact values
            if other == 0:
                return GaussianRational(0)
            raise TypeError("cannot mix a nonzero float complex with exact values")
        return GaussianRational(_q(other))

    def __add__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, complex):
            return complex(self) == other
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


I = GaussianRational(0, 1)
