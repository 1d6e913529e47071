"""The cubic dispersion symbol p(xi) = xi1*xi2*(xi1 + xi2) and its derivatives.

Every function is written with plain arithmetic so the same code serves two
backends: pass ``int``/``Fraction`` components for exact rational results, or
floats / numpy arrays for double precision.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np


class Wavevector(NamedTuple):
    xi1: object
    xi2: object


class LatticePoint(NamedTuple):
    a1: int
    a2: int


class SecondOrderIndex(NamedTuple):
    """One second-order multi-index ``alpha`` with ``sigma = (a1 - a2)/2``
    and ``weight = 2!/alpha!``."""

    alpha: tuple[int, int]
    sigma: int
    weight: int


def _check_finite(xi) -> None:
    for c in xi:
        if isinstance(c, float) and not math.isfinite(c):
            raise ValueError(f"non-finite wavevector component {c!r}")


def as_wavevector(xi) -> Wavevector:
    xi1, xi2 = xi
    w = Wavevector(xi1, xi2)
    _check_finite(w)
    return w


def as_lattice_point(alpha) -> LatticePoint:
    a1, a2 = alpha
    if isinstance(a1, bool) or isinstance(a2, bool):
        raise TypeError("lattice coordinates must be integers")
    if not (float(a1).is_integer() and float(a2).is_integer()):
        raise ValueError(f"lattice point must have integer coordinates, got {alpha!r}")
    return LatticePoint(int(a1), int(a2))


def eval_p(xi):
    xi1, xi2 = as_wavevector(xi)
    return xi1 * xi2 * (xi1 + xi2)


def eval_grad_p(xi) -> Wavevector:
    xi1, xi2 = as_wavevector(xi)
    return Wavevector(xi2 * (2 * xi1 + xi2), xi1 * (2 * xi2 + xi1))


def grad_p_from_monomials(xi1_sq, xi1_xi2, xi2_sq) -> Wavevector:
    """Gradient of p written in the quadratic monomials of xi.

    Used when only xi1**2, xi1*xi2, xi2**2 are known exactly (e.g. in Q(sqrt D)).
    """
    return Wavevector(xi2_sq + 2 * xi1_xi2, xi1_sq + 2 * xi1_xi2)


def hessian_p(xi):
    xi1, xi2 = as_wavevector(xi)
    off = 2 * xi1 + 2 * xi2
    return ((2 * xi2, off), (off, 2 * xi1))


def hessian_det(xi):
    """det p''(xi) = -4 (xi1**2 + xi1*xi2 + xi2**2); negative away from 0."""
    xi1, xi2 = as_wavevector(xi)
    return -4 * (xi1 * xi1 + xi1 * xi2 + xi2 * xi2)


_INDICES = (
    SecondOrderIndex((2, 0), 1, 1),
    SecondOrderIndex((1, 1), 0, 2),
    SecondOrderIndex((0, 2), -1, 1),
)


def second_order_indices() -> list[SecondOrderIndex]:
    return list(_INDICES)


def sigma_of(alpha) -> int:
    a1, a2 = alpha
    if a1 < 0 or a2 < 0 or a1 + a2 != 2:
        raise ValueError(f"{alpha!r} is not a second-order multi-index")
    return (a1 - a2) // 2


def weight_of(alpha) -> int:
    a1, a2 = alpha
    if a1 < 0 or a2 < 0 or a1 + a2 != 2:
        raise ValueError(f"{alpha!r} is not a second-order multi-index")
    return math.factorial(2) // (math.factorial(a1) * math.factorial(a2))


def symbol_multiplier(k1, k2):
    """Fourier multiplier of p(d) on exp(i k.x): (i k1)(i k2)(i(k1+k2)) = -i p(k)."""
    return -1j * (np.asarray(k1) * np.asarray(k2) * (np.asarray(k1) + np.asarray(k2)))


def exact_wavevector(xi) -> Wavevector:
    """Convert to the rational backend; floats are rejected rather than rounded."""
    out = []
    for c in xi:
        if isinstance(c, (float, np.floating)):
            raise TypeError("exact backend requires int or Fraction components")
        out.append(Fraction(c))
    return Wavevector(*out)
