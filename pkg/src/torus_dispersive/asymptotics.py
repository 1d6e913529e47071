"""High-frequency asymptotic solutions that break the energy inequality.

For a frequency direction alpha and scale l, the family

    u_l(t, x) = exp(i t p(l alpha) + i l alpha.x + phi_l(t, x)) psi(x + (t - T/l^2) p'(l alpha))

with phi_l(t, x) = int_0^{l^2 t} a(x + s p'(alpha), alpha) ds starts with unit
norm, is amplified by exp(phi_l) over the short window [0, T/l^2], and has a
residual L u_l whose time integral decays like 1/l.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .coefficients import CoefficientSet, TrigPolynomial, quadratic_symbol_poly
from .spectral import Grid, ResolutionError, SpectralState, apply_L_space, fft_workers, l2_norm
from .symbol import LatticePoint, as_lattice_point, eval_grad_p, eval_p

BRANCHES = ("positive", "negative")
MIN_TIME_NODES = 8
DEFAULT_TIME_NODES = 33
# multi-indices with |beta| <= 3, for the pointwise bound defining C0
_DERIVATIVES = [(i, k - i) for k in range(4) for i in range(k + 1)]


def build_psi(center=(math.pi, math.pi), width: float = 2.0, degree: int | None = None) -> TrigPolynomial:
    """Unit-norm periodic Gaussian centred at ``center``, as a trig polynomial.

    Uses the exact Fourier coefficients exp(-k^2 w^2 / 2 - i k c) per axis,
    truncated where they fall below double precision, then normalized.
    """
    if not (0 < width < math.pi):
        raise ValueError(f"width must lie in (0, pi), got {width!r}")
    if degree is None:
        degree = math.ceil(8.6 / width)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    c1, c2 = float(center[0]), float(center[1])
    k = np.arange(-degree, degree + 1)
    g = np.exp(-0.5 * (k * width) ** 2)
    e1 = g * np.exp(-1j * k * c1)
    e2 = g * np.exp(-1j * k * c2)
    coeffs = np.outer(e1, e2)
    coeffs /= 2 * math.pi * math.sqrt(float(np.sum(np.abs(coeffs) ** 2)))
    terms = {(int(a), int(b)): complex(coeffs[i, j])
             for i, a in enumerate(k) for j, b in enumerate(k)}
    return TrigPolynomial(terms, check=False)


def constant_psi() -> TrigPolynomial:
    return TrigPolynomial.constant(1.0 / (2 * math.pi))


def flow_polynomial(cs: CoefficientSet, alpha, tau: float) -> TrigPolynomial:
    """x -> int_0^tau a(x + s p'(alpha), alpha) ds, integrated mode by mode."""
    a1, a2 = as_lattice_point(alpha)
    g1, g2 = eval_grad_p((a1, a2))
    sym = quadratic_symbol_poly(cs, (a1, a2)).to_float()
    out = {}
    for (b1, b2), c in sym.terms.items():
        omega = b1 * g1 + b2 * g2
        c = complex(c)
        if omega == 0:
            out[(b1, b2)] = c * tau
        else:
            out[(b1, b2)] = c * np.expm1(1j * tau * omega) / (1j * omega)
    return TrigPolynomial(out, check=False)


def flow_integral(cs: CoefficientSet, alpha, tau: float, x):
    """Value of the flow integral at the point(s) x."""
    return flow_polynomial(cs, alpha, tau).evaluate(x)


def flow_resonant_rate(cs: CoefficientSet, alpha) -> TrigPolynomial:
    """The secular part: modes of a(., alpha) constant along the flow direction."""
    a1, a2 = as_lattice_point(alpha)
    g1, g2 = eval_grad_p((a1, a2))
    sym = quadratic_symbol_poly(cs, (a1, a2)).to_float()
    return TrigPolynomial({b: c for b, c in sym.terms.items() if b[0] * g1 + b[1] * g2 == 0},
                          check=False)


def flow_bound(cs: CoefficientSet, alpha) -> float:
    """Uniform bound sum 2|A_beta| / |beta.p'(alpha)| on the oscillatory part of the flow."""
    a1, a2 = as_lattice_point(alpha)
    g1, g2 = eval_grad_p((a1, a2))
    sym = quadratic_symbol_poly(cs, (a1, a2)).to_float()
    total = 0.0
    for (b1, b2), c in sym.terms.items():
        omega = b1 * g1 + b2 * g2
        if omega != 0:
            total += 2 * abs(complex(c)) / abs(omega)
    return total


@dataclass(frozen=True)
class AsymptoticSpec:
    alpha: LatticePoint
    l: int
    T: float
    psi: TrigPolynomial = field(default_factory=build_psi)
    n_target: float = 1.0
    branch: str = "positive"

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_lattice_point(self.alpha))
        if self.alpha == (0, 0):
            raise ValueError("alpha must be nonzero")
        if not isinstance(self.l, (int, np.integer)) or isinstance(self.l, bool) or self.l < 1:
            raise ValueError(f"l must be a positive integer, got {self.l!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError("T must be positive and finite")
        if not self.n_target > math.log(2):
            raise ValueError("n_target must exceed log 2 so that e^n > 2")
        if self.branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}")
        if abs(self.psi.l2_norm() - 1.0) > 1e-12:
            raise ValueError(f"psi must have unit norm, got {self.psi.l2_norm()!r}")

    @property
    def sign(self) -> int:
        return 1 if self.branch == "positive" else -1

    @property
    def t_final(self) -> float:
        return self.T / self.l ** 2

    def with_l(self, l: int) -> "AsymptoticSpec":
        return AsymptoticSpec(self.alpha, l, self.T, self.psi, self.n_target, self.branch)


class _Family:
    """Grid evaluation of u_l, its time derivative, and the amplitude v_l = exp(phi_l) psi(...)."""

    def __init__(self, spec: AsymptoticSpec, cs: CoefficientSet, grid: Grid):
        a1, a2 = spec.alpha
        l = spec.l
        reach = l * max(abs(a1), abs(a2)) + spec.psi.degree
        if reach > grid.cutoff:
            raise ResolutionError(
                f"mode l*alpha={l * a1, l * a2} with psi degree {spec.psi.degree} needs n >= {3 * reach + 3}, "
                f"got {grid.n}")
        self.spec, self.cs, self.grid = spec, cs, grid
        self.s = spec.sign
        self.p_la = float(eval_p((l * a1, l * a2)))
        self.g = tuple(float(v) for v in eval_grad_p((a1, a2)))
        self.g_l = (l * l * self.g[0], l * l * self.g[1])
        self.x1, self.x2 = grid.nodes()
        self.phase_x = l * (a1 * self.x1 + a2 * self.x2)
        self.symbol = quadratic_symbol_poly(cs, (a1, a2)).to_float()
        self.psi_grad = (spec.psi.partial_derivative(0), spec.psi.partial_derivative(1))

    def _shift(self, t):
        d = t - self.spec.t_final
        return (d * self.g_l[0], d * self.g_l[1])

    def flow(self, t) -> np.ndarray:
        return self.s * self.grid.sample(flow_polynomial(self.cs, self.spec.alpha, self.spec.l ** 2 * t))

    def amplitude(self, t) -> np.ndarray:
        return np.exp(self.flow(t)) * self.grid.sample(self.spec.psi.shifted(self._shift(t)))

    def phase(self, t) -> np.ndarray:
        return np.exp(1j * self.s * (t * self.p_la + self.phase_x))

    def u(self, t) -> np.ndarray:
        return self.phase(t) * self.amplitude(t)

    def dt_u(self, t, u=None) -> np.ndarray:
        l2 = self.spec.l ** 2
        if u is None:
            u = self.u(t)
        a_moving = self.grid.sample(self.symbol.shifted((l2 * t * self.g[0], l2 * t * self.g[1])))
        rate = 1j * self.s * self.p_la + self.s * l2 * a_moving
        shift = self._shift(t)
        transport = (self.g_l[0] * self.grid.sample(self.psi_grad[0].shifted(shift))
                     + self.g_l[1] * self.grid.sample(self.psi_grad[1].shifted(shift)))
        return rate * u + self.phase(t) * np.exp(self.flow(t)) * transport

    def residual(self, t) -> np.ndarray:
        u = self.u(t)
        state = SpectralState.from_values(self.grid, u, t)
        return self.dt_u(t, u) + apply_L_space(state, self.cs)

    def derivative_sum(self, t) -> np.ndarray:
        """sum over |beta| <= 3 of |d^beta v_l|, with spectral derivatives."""
        vh = np.fft.fft2(self.amplitude(t))
        out = np.zeros((self.grid.n, self.grid.n))
        for idx in _DERIVATIVES:
            out += np.abs(np.fft.ifft2(self.grid.derivative_multiplier(idx) * vh))
        return out


def build_u_l(spec: AsymptoticSpec, cs: CoefficientSet, t: float, grid: Grid) -> SpectralState:
    if not (-1e-15 <= t <= spec.t_final * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, T/l^2] = [0, {spec.t_final!r}]")
    return SpectralState.from_values(grid, _Family(spec, cs, grid).u(t), t)


def _profile(spec: AsymptoticSpec, cs: CoefficientSet, grid: Grid, time_nodes: int):
    if time_nodes < MIN_TIME_NODES:
        raise ValueError(f"time_nodes must be >= {MIN_TIME_NODES}")
    fam = _Family(spec, cs, grid)
    times = np.linspace(0.0, spec.t_final, time_nodes)
    norms = np.empty(time_nodes)
    c0 = 0.0
    a_norm = math.hypot(*spec.alpha)
    for i, t in enumerate(times):
        r = fam.residual(t)
        norms[i] = l2_norm(r)
        dsum = fam.derivative_sum(t)
        mask = dsum > 1e-8 * dsum.max()
        c0 = max(c0, float(np.max(np.abs(r[mask]) / dsum[mask])) / (spec.l * a_norm))
    return fam, times, norms, c0


def _trapezoid(y, t) -> float:
    return float(np.sum((y[1:] + y[:-1]) * np.diff(t)) / 2)


def residual_integral(spec: AsymptoticSpec, cs: CoefficientSet, grid: Grid,
                      time_nodes: int = DEFAULT_TIME_NODES) -> float:
    """Trapezoid approximation of int_0^{T/l^2} ||L u_l(t)|| dt."""
    _, times, norms, _ = _profile(spec, cs, grid, time_nodes)
    return _trapezoid(norms, times)


@dataclass(frozen=True)
class GrowthReport:
    l: int
    norm_initial: float
    norm_final: float
    residual_integral: float
    a_alpha: float
    inequality_violated: bool
    measured_growth_factor: float
    c0: float

    def to_dict(self) -> dict:
        return asdict(self)


def growth_report(spec: AsymptoticSpec, cs: CoefficientSet, grid: Grid,
                  time_nodes: int = DEFAULT_TIME_NODES) -> GrowthReport:
    """Norms, residual and the constant A_alpha for one member of the family.

    The energy inequality is reported violated when
    ||u_l(T/l^2)|| >= e^n and ||u_l(T/l^2)|| > ||u_l(0)|| + int ||L u_l||,
    and the growth exceeds exp(flow_bound), the most the oscillatory part of
    the flow can produce.  Growth beyond that comes from the secular part,
    which is linear in T, so the family defeats every constant C_T.
    """
    fam, times, norms, c0 = _profile(spec, cs, grid, time_nodes)
    resid = _trapezoid(norms, times)
    n0 = l2_norm(fam.u(0.0))
    n1 = l2_norm(fam.u(spec.t_final))
    a_norm = math.hypot(*spec.alpha)
    max_flow = float(np.max(spec.sign * grid.sample(flow_polynomial(cs, spec.alpha, spec.T))))
    a_alpha = 2 * math.pi * c0 * spec.T * a_norm * (1 + spec.T * a_norm ** 2) ** 3 * math.exp(max_flow)
    secular = n1 > math.exp(flow_bound(cs, spec.alpha)) * n0
    violated = secular and n1 >= math.exp(spec.n_target) and n1 > n0 + resid
    return GrowthReport(spec.l, n0, n1, resid, a_alpha, bool(violated), n1 / n0, c0)


def growth_reports(spec: AsymptoticSpec, cs: CoefficientSet, grid: Grid, ls: Sequence[int],
                   time_nodes: int = DEFAULT_TIME_NODES, workers: int | None = None) -> list[GrowthReport]:
    """Reports for each l, computed concurrently and returned in the order of ``ls``."""
    specs = [spec.with_l(l) for l in ls]
    workers = workers or fft_workers()
    if workers == 1:
        return [growth_report(s, cs, grid, time_nodes) for s in specs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: growth_report(s, cs, grid, time_nodes), specs))


def family_violated(reports: Sequence[GrowthReport]) -> bool:
    return any(r.inequality_violated for r in reports)


def residual_slope(reports: Sequence[GrowthReport]) -> float:
    """Least-squares slope of log(residual) against log(l)."""
    ls = np.log([r.l for r in reports])
    rs = np.log([r.residual_integral for r in reports])
    return float(np.polyfit(ls, rs, 1)[0])


CSV_COLUMNS = ("l", "norm_initial", "norm_final", "residual_integral", "a_alpha", "violated")


def reports_to_csv(reports: Sequence[GrowthReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([r.l, repr(r.norm_initial), repr(r.norm_final), repr(r.residual_integral),
                    repr(r.a_alpha), str(r.inequality_violated).lower()])
    return buf.getvalue()
