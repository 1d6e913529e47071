"""Real-valued trigonometric polynomials on the torus and coefficient sets.

A :class:`TrigPolynomial` stores complex Fourier coefficients ``c[beta]`` of
``sum_beta c[beta] exp(i beta.x)`` with the conjugate symmetry that makes it
real.  Coefficients are ``complex`` by default, or :class:`GaussianRational`
when built from exact rational amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .exact import GaussianRational
from .symbol import as_lattice_point

DEFAULT_DEGREE_CAP = 16
SYMMETRY_TOL = 1e-12
IMAG_TOL = 1e-14


class CoefficientError(ValueError):
    pass


def _conj(c):
    return c.conjugate()


def _is_exact(c) -> bool:
    return isinstance(c, GaussianRational)


def _canonical(beta) -> bool:
    """True for the representative of {beta, -beta} whose first nonzero entry is positive."""
    b1, b2 = beta
    return b1 > 0 or (b1 == 0 and b2 > 0)


class TrigPolynomial:
    """Immutable finite Fourier series with conjugate-symmetric coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping | None = None, check: bool = True):
        clean = {}
        for beta, c in (terms or {}).items():
            beta = tuple(as_lattice_point(beta))
            if not _is_exact(c):
                c = complex(c)
            if c != 0:
                clean[beta] = c
        if check:
            _check_symmetry(clean)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("TrigPolynomial is immutable")

    @classmethod
    def zero(cls) -> "TrigPolynomial":
        return cls({})

    @classmethod
    def constant(cls, value) -> "TrigPolynomial":
        return cls({(0, 0): value})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def coefficient(self, beta):
        return self._terms.get(tuple(beta), 0j)

    def support(self) -> list[tuple[int, int]]:
        return sorted(self._terms)

    @property
    def degree(self) -> int:
        return max((max(abs(b1), abs(b2)) for b1, b2 in self._terms), default=0)

    @property
    def is_exact(self) -> bool:
        return bool(self._terms) and all(_is_exact(c) for c in self._terms.values())

    def is_zero(self) -> bool:
        return not self._terms

    def to_float(self) -> "TrigPolynomial":
        return TrigPolynomial({b: complex(c) for b, c in self._terms.items()}, check=False)

    # algebra

    def __add__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        out = dict(self._terms)
        for b, c in other._terms.items():
            out[b] = out[b] + c if b in out else c
        return TrigPolynomial(out, check=False)

    def __neg__(self):
        return TrigPolynomial({b: -c for b, c in self._terms.items()}, check=False)

    def __sub__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "TrigPolynomial":
        """Multiply by a real scalar (int, Fraction or float)."""
        if isinstance(factor, complex):
            raise TypeError("scaling by a complex number breaks real-valuedness")
        if isinstance(factor, (float, np.floating)):
            return TrigPolynomial({b: complex(c) * float(factor) for b, c in self._terms.items()},
                                  check=False)
        return TrigPolynomial({b: c * factor for b, c in self._terms.items()}, check=False)

    def __mul__(self, other):
        if isinstance(other, TrigPolynomial):
            out: dict = {}
            for b, c in self._terms.items():
                for d, e in other._terms.items():
                    k = (b[0] + d[0], b[1] + d[1])
                    out[k] = out[k] + c * e if k in out else c * e
            return TrigPolynomial(out, check=False)
        if isinstance(other, (int, float, Fraction, np.floating)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def partial_derivative(self, axis: int) -> "TrigPolynomial":
        if axis not in (0, 1):
            raise ValueError("axis must be 0 or 1")
        out = {}
        for b, c in self._terms.items():
            k = b[axis]
            out[b] = c * GaussianRational(0, k) if _is_exact(c) else c * (1j * k)
        return TrigPolynomial(out, check=False)

    def shifted(self, shift) -> "TrigPolynomial":
        """The polynomial x -> P(x + shift)."""
        s1, s2 = float(shift[0]), float(shift[1])
        return TrigPolynomial(
            {b: complex(c) * np.exp(1j * (b[0] * s1 + b[1] * s2)) for b, c in self._terms.items()},
            check=False,
        )

    def max_symmetry_defect(self) -> float:
        return max((abs(complex(c) - complex(self.coefficient((-b[0], -b[1]))).conjugate())
                    for b, c in self._terms.items()), default=0.0)

    # evaluation

    def evaluate(self, x):
        """Value at a point (or arrays of points, broadcast over ``x[0]``, ``x[1]``)."""
        x1 = np.asarray(x[0], dtype=float)
        x2 = np.asarray(x[1], dtype=float)
        x1, x2 = np.broadcast_arrays(x1, x2)
        total = evaluate_complex([self], x1.ravel(), x2.ravel())[0].reshape(x1.shape)
        scale = sum(abs(complex(c)) for c in self._terms.values())
        if np.any(np.abs(total.imag) > IMAG_TOL * max(1.0, scale)):
            raise CoefficientError("evaluation produced a non-negligible imaginary part")
        real = total.real
        return float(real) if real.ndim == 0 else real

    def dense(self, d: int) -> np.ndarray:
        """Coefficients as a (2d+1) x (2d+1) array indexed by (b1 + d, b2 + d)."""
        arr = np.zeros((2 * d + 1, 2 * d + 1), dtype=complex)
        for (b1, b2), c in self._terms.items():
            arr[b1 + d, b2 + d] = complex(c)
        return arr

    def l2_norm(self) -> float:
        """Continuum L2 norm on the torus: 2*pi*sqrt(sum |c|^2)."""
        return 2 * math.pi * math.sqrt(sum(abs(complex(c)) ** 2 for c in self._terms.values()))

    def spectrum_array(self, n: int) -> np.ndarray:
        """Coefficients laid out in numpy FFT order on an n x n grid (index 0 is mode 0)."""
        if self.degree >= n // 2:
            raise CoefficientError(f"degree {self.degree} not resolved by n={n} (need < n/2)")
        arr = np.zeros((n, n), dtype=complex)
        for (b1, b2), c in self._terms.items():
            arr[b1 % n, b2 % n] += complex(c)
        return arr

    def to_terms(self) -> list[dict]:
        """Real cos/sin basis, one entry per canonical beta (inverse of from_terms)."""
        out = []
        for beta in sorted(self._terms):
            c = complex(self._terms[beta])
            if beta == (0, 0):
                out.append({"beta": [0, 0], "cos": c.real, "sin": 0.0})
            elif _canonical(beta):
                out.append({"beta": list(beta), "cos": 2 * c.real + 0.0, "sin": -2 * c.imag + 0.0})
        return out

    def __eq__(self, other):
        if not isinstance(other, TrigPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def allclose(self, other: "TrigPolynomial", tol: float = 1e-13) -> bool:
        return max_coefficient_difference(self, other) <= tol

    def __repr__(self):
        return f"TrigPolynomial(degree={self.degree}, terms={len(self._terms)})"


def evaluate_complex(polys, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Complex values of several polynomials at flat point arrays; shape (len(polys), P).

    Uses separable powers exp(i k x1), exp(i k x2), so the cost in exponentials
    is linear in the degree.
    """
    d = max((p.degree for p in polys), default=0)
    k = np.arange(-d, d + 1)
    e1 = np.exp(1j * np.outer(k, x1))
    e2 = np.exp(1j * np.outer(k, x2))
    out = np.empty((len(polys), x1.size), dtype=complex)
    for i, p in enumerate(polys):
        out[i] = np.sum(e1 * (p.dense(d) @ e2), axis=0)
    return out


def _check_symmetry(terms: dict) -> None:
    scale = max((abs(complex(c)) for c in terms.values()), default=0.0)
    for b, c in terms.items():
        partner = terms.get((-b[0], -b[1]), 0)
        if _is_exact(c) and (partner == 0 or _is_exact(partner)):
            ok = c == (_conj(partner) if partner != 0 else 0)
        else:
            ok = abs(complex(c) - complex(partner).conjugate()) <= SYMMETRY_TOL * max(1.0, scale)
        if not ok:
            raise CoefficientError(f"coefficients at {b} and its negative are not conjugate")


def max_coefficient_difference(p: TrigPolynomial, q: TrigPolynomial) -> float:
    keys = set(p.support()) | set(q.support())
    return max((abs(complex(p.coefficient(k)) - complex(q.coefficient(k))) for k in keys), default=0.0)


def from_terms(spec: Iterable[Mapping], exact: bool = False,
               degree_cap: int | None = DEFAULT_DEGREE_CAP) -> TrigPolynomial:
    """Build sum(cos*cos(beta.x) + sin*sin(beta.x)) from real-basis terms.

    With ``exact=True`` amplitudes must be ints or Fractions (or decimal
    strings) and the coefficients are kept as Gaussian rationals.
    """
    out: dict = {}
    seen = set()
    for term in spec:
        beta = tuple(as_lattice_point(term["beta"]))
        key = beta if _canonical(beta) or beta == (0, 0) else (-beta[0], -beta[1])
        if key in seen:
            raise CoefficientError(f"duplicate mode {beta} (up to sign)")
        seen.add(key)
        if degree_cap is not None and max(abs(beta[0]), abs(beta[1])) > degree_cap:
            raise CoefficientError(f"mode {beta} exceeds the degree cap {degree_cap}")
        ca, sa = term.get("cos", 0), term.get("sin", 0)
        if exact:
            ca, sa = Fraction(ca), Fraction(sa)
            half = Fraction(1, 2)
            if beta == (0, 0):
                out[beta] = GaussianRational(ca)
            else:
                out[beta] = GaussianRational(ca * half, -sa * half)
                out[(-beta[0], -beta[1])] = GaussianRational(ca * half, sa * half)
        else:
            ca, sa = float(ca), float(sa)
            if not (math.isfinite(ca) and math.isfinite(sa)):
                raise CoefficientError(f"non-finite amplitude at mode {beta}")
            if beta == (0, 0):
                out[beta] = complex(ca)
            else:
                out[beta] = complex(0.5 * ca, -0.5 * sa)
                out[(-beta[0], -beta[1])] = complex(0.5 * ca, 0.5 * sa)
    return TrigPolynomial(out)


def evaluate(P: TrigPolynomial, x):
    return P.evaluate(x)


def partial_derivative(P: TrigPolynomial, axis: int) -> TrigPolynomial:
    return P.partial_derivative(axis)


def grid_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Mesh (x1, x2) of the n x n torus grid, ``indexing='ij'``."""
    x = 2 * np.pi * np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


def sample_grid(P: TrigPolynomial, n: int) -> np.ndarray:
    """Real values of P on the n x n grid, computed by inverse FFT."""
    if n % 2 or n < 2:
        raise CoefficientError("grid size must be a positive even integer")
    vals = np.fft.ifft2(P.spectrum_array(n)) * (n * n)
    return vals.real


def from_grid(values: np.ndarray, tol: float = 0.0) -> TrigPolynomial:
    """Recover coefficients of a real grid function (modes |k| < n/2); inverse of sample_grid."""
    n = values.shape[0]
    spec = np.fft.fft2(values) / (n * n)
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = {}
    for i in range(n):
        for j in range(n):
            if abs(k[i]) < n // 2 and abs(k[j]) < n // 2 and abs(spec[i, j]) > tol:
                out[(int(k[i]), int(k[j]))] = spec[i, j]
    return TrigPolynomial(out, check=False)


def random_trig_polynomial(rng: np.random.Generator, degree: int, scale: float = 1.0,
                           mean_zero: bool = False) -> TrigPolynomial:
    """Random real trig polynomial with Gaussian cos/sin amplitudes on all modes up to ``degree``."""
    terms = []
    for b1 in range(0, degree + 1):
        for b2 in range(-degree, degree + 1):
            if b1 == 0 and b2 < 0:
                continue
            if b1 == 0 and b2 == 0:
                if not mean_zero:
                    terms.append({"beta": [0, 0], "cos": scale * rng.standard_normal(), "sin": 0.0})
                continue
            terms.append({"beta": [b1, b2], "cos": scale * rng.standard_normal(),
                          "sin": scale * rng.standard_normal()})
    return from_terms(terms, degree_cap=None)


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of the lower-order part of L.

    ``a_plus1``, ``a_0``, ``a_minus1`` multiply d1^2, 2 d1 d2, d2^2;
    ``b1``, ``b2`` multiply d1, d2; ``c`` is the potential term.
    """

    a_plus1: TrigPolynomial = field(default_factory=TrigPolynomial.zero)
    a_0: TrigPolynomial = field(default_factory=TrigPolynomial.zero)
    a_minus1: TrigPolynomial = field(default_factory=TrigPolynomial.zero)
    b1: TrigPolynomial = field(default_factory=TrigPolynomial.zero)
    b2: TrigPolynomial = field(default_factory=TrigPolynomial.zero)
    c: TrigPolynomial = field(default_factory=TrigPolynomial.zero)

    def members(self) -> dict[str, TrigPolynomial]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.members().values())

    @property
    def second_order_degree(self) -> int:
        return max(self.a_plus1.degree, self.a_0.degree, self.a_minus1.degree)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.members().values())

    def negated_second_order(self) -> "CoefficientSet":
        return CoefficientSet(-self.a_plus1, -self.a_0, -self.a_minus1, self.b1, self.b2, self.c)

    def replace(self, **kw) -> "CoefficientSet":
        m = self.members()
        m.update(kw)
        return CoefficientSet(**m)

    def to_json(self) -> dict:
        return {
            "a": {
                "sigma_plus1": self.a_plus1.to_terms(),
                "sigma_0": self.a_0.to_terms(),
                "sigma_minus1": self.a_minus1.to_terms(),
            },
            "b": {"b1": self.b1.to_terms(), "b2": self.b2.to_terms()},
            "c": self.c.to_terms(),
        }

    @classmethod
    def from_json(cls, doc: Mapping, exact: bool = False,
                  degree_cap: int | None = DEFAULT_DEGREE_CAP) -> "CoefficientSet":
        a = doc.get("a", {}) or {}
        b = doc.get("b", {}) or {}

        def build(terms):
            return from_terms(terms or [], exact=exact, degree_cap=degree_cap)

        return cls(
            a_plus1=build(a.get("sigma_plus1")),
            a_0=build(a.get("sigma_0")),
            a_minus1=build(a.get("sigma_minus1")),
            b1=build(b.get("b1")),
            b2=build(b.get("b2")),
            c=build(doc.get("c")),
        )

    @classmethod
    def from_potential(cls, phi: TrigPolynomial, **lower) -> "CoefficientSet":
        """The family a_-1 = d1 phi, a_1 = d2 phi, a_0 = a_1 + a_-1."""
        am = phi.partial_derivative(0)
        ap = phi.partial_derivative(1)
        return cls(a_plus1=ap, a_0=ap + am, a_minus1=am, **lower)


def quadratic_symbol_poly(cs: CoefficientSet, xi) -> TrigPolynomial:
    """x -> a(x, xi) = a1(x) xi1^2 + 2 a0(x) xi1 xi2 + a_-1(x) xi2^2, as a polynomial in x."""
    x1, x2 = xi
    return cs.a_plus1.scale(x1 * x1) + cs.a_0.scale(2 * x1 * x2) + cs.a_minus1.scale(x2 * x2)


def quadratic_symbol_eval(cs: CoefficientSet, x, xi):
    x1, x2 = xi
    return (cs.a_plus1.evaluate(x) * (x1 * x1) + 2 * cs.a_0.evaluate(x) * (x1 * x2)
            + cs.a_minus1.evaluate(x) * (x2 * x2))
