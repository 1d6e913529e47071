"""Pseudospectral solver for L u = f on the 2-torus.

L = d_t + p(d) + a1 d1^2 + 2 a0 d1 d2 + a_-1 d2^2 + b1 d1 + b2 d2 + c.

Time stepping is integrating-factor RK4: the skew constant-coefficient part
p(d) advances every mode exactly by exp(i p(k) dt); the variable-coefficient
remainder is handled by the classical RK4 stages in the rotating frame.

Norms follow the continuum convention ||u||^2 = (2 pi)^2 * mean |u|^2.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.fft as sfft

from .coefficients import CoefficientSet, TrigPolynomial, evaluate_complex, grid_nodes
from .symbol import eval_p

logger = logging.getLogger(__name__)

DEFAULT_NORM_CEILING = 1e12
# third-order multi-indices of p(d) = d1^2 d2 + d1 d2^2
_P_INDICES = ((2, 1), (1, 2))
_LOWER_INDICES = ((2, 0), (1, 1), (0, 2), (1, 0), (0, 1), (0, 0))


class SimulationError(RuntimeError):
    pass


class ResolutionError(ValueError):
    pass


class CFLWarning(UserWarning):
    pass


class CFLError(ValueError):
    pass


def fft_workers() -> int:
    try:
        return max(1, int(os.environ.get("TORUS_DISPERSIVE_THREADS", "1")))
    except ValueError:
        return 1


def _fft2(a):
    return sfft.fft2(a, axes=(-2, -1), workers=fft_workers())


def _ifft2(a):
    return sfft.ifft2(a, axes=(-2, -1), workers=fft_workers())


class Grid:
    """Uniform n x n grid on [0, 2 pi)^2 with FFT-ordered integer wavenumbers."""

    def __init__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 8 or n % 2:
            raise ResolutionError(f"grid size must be an even integer >= 8, got {n!r}")
        self.n = int(n)
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        self.k = k
        # wavenumbers used for derivatives: the unpaired Nyquist mode is dropped
        kd = k.astype(float)
        kd[self.n // 2] = 0.0
        self.k1, self.k2 = np.meshgrid(kd, kd, indexing="ij")
        self.cutoff = self.n // 3
        ki1, ki2 = np.meshgrid(k, k, indexing="ij")
        self.dealias_mask = (np.abs(ki1) <= self.cutoff) & (np.abs(ki2) <= self.cutoff)

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self):
        return hash(self.n)

    def __repr__(self):
        return f"Grid(n={self.n})"

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return grid_nodes(self.n)

    def derivative_multiplier(self, index) -> np.ndarray:
        j1, j2 = index
        return (1j * self.k1) ** j1 * (1j * self.k2) ** j2

    def sample(self, poly: TrigPolynomial) -> np.ndarray:
        """Pointwise values of a real trig polynomial of any degree."""
        if poly.degree < self.n // 2:
            return (_ifft2(poly.spectrum_array(self.n)) * self.n ** 2).real
        x1, x2 = self.nodes()
        return evaluate_complex([poly], x1.ravel(), x2.ravel())[0].real.reshape(self.n, self.n)


def multiplier_p(grid: Grid) -> np.ndarray:
    """Fourier multiplier of p(d): (i k1)(i k2)(i (k1 + k2)) = -i p(k)."""
    return -1j * eval_p((grid.k1, grid.k2))


def _scaled_root_sum_squares(a: np.ndarray) -> float:
    # scaling by the max keeps the squares finite for very large ill-posed norms
    mag = np.abs(a)
    m = float(mag.max(initial=0.0))
    if m == 0.0 or not math.isfinite(m):
        return m
    return m * math.sqrt(float(np.sum((mag / m) ** 2)))


def l2_norm_from_spectrum(spectrum: np.ndarray) -> float:
    n = spectrum.shape[-1]
    return 2 * math.pi * _scaled_root_sum_squares(spectrum) / (n * n)


def l2_norm(values: np.ndarray) -> float:
    return 2 * math.pi * _scaled_root_sum_squares(values) / math.sqrt(values.size)


class SpectralState:
    """A field on the grid together with its DFT; the spectrum is authoritative."""

    def __init__(self, grid: Grid, spectrum: np.ndarray, time: float = 0.0):
        spectrum = np.asarray(spectrum, dtype=complex)
        if spectrum.shape != (grid.n, grid.n):
            raise ValueError(f"spectrum shape {spectrum.shape} does not match {grid}")
        self.grid = grid
        self.spectrum = spectrum
        self.time = float(time)

    @classmethod
    def from_values(cls, grid: Grid, values, time: float = 0.0) -> "SpectralState":
        values = np.asarray(values, dtype=complex)
        return cls(grid, _fft2(values), time)

    @classmethod
    def from_polynomial(cls, grid: Grid, poly: TrigPolynomial, time: float = 0.0) -> "SpectralState":
        return cls(grid, poly.spectrum_array(grid.n) * grid.n ** 2, time)

    @property
    def values(self) -> np.ndarray:
        return _ifft2(self.spectrum)

    def norm(self) -> float:
        return l2_norm_from_spectrum(self.spectrum)

    def copy(self) -> "SpectralState":
        return SpectralState(self.grid, self.spectrum.copy(), self.time)

    def fourier_coefficients(self) -> np.ndarray:
        return self.spectrum / self.grid.n ** 2


class _Term(NamedTuple):
    index: tuple[int, int]
    constant: complex | None
    values: np.ndarray | None


class VariablePart:
    """The operator sum_delta C_delta(x) d^delta with |delta| <= 2, applied spectrally."""

    def __init__(self, grid: Grid, coefficients: dict, dealias: bool = True):
        self.grid = grid
        self.dealias = dealias
        self.terms: list[_Term] = []
        self.bounds = [0.0, 0.0, 0.0]  # max |C| summed per derivative order
        for index, poly in coefficients.items():
            if poly is None or poly.is_zero():
                continue
            order = index[0] + index[1]
            if poly.degree == 0:
                cval = complex(poly.coefficient((0, 0)))
                self.terms.append(_Term(index, cval, None))
                self.bounds[order] += abs(cval)
            else:
                vals = grid.sample(poly)
                self.terms.append(_Term(index, None, vals))
                self.bounds[order] += float(np.max(np.abs(vals)))
        self._const_mult = sum((t.constant * grid.derivative_multiplier(t.index)
                                for t in self.terms if t.constant is not None),
                               np.zeros((grid.n, grid.n), dtype=complex))
        var = [t for t in self.terms if t.constant is None]
        self._var_mults = np.array([grid.derivative_multiplier(t.index) for t in var]) if var else None
        self._var_coeffs = np.array([t.values for t in var]) if var else None

    def is_zero(self) -> bool:
        return not self.terms

    def apply(self, spectrum: np.ndarray) -> np.ndarray:
        """Spectrum of the operator applied to the field with the given spectrum."""
        out = self._const_mult * spectrum
        if self._var_mults is not None:
            src = spectrum * self.grid.dealias_mask if self.dealias else spectrum
            fields_ = _ifft2(self._var_mults * src[None, :, :])
            prod = _fft2(np.sum(self._var_coeffs * fields_, axis=0))
            if self.dealias:
                prod = prod * self.grid.dealias_mask
            out = out + prod
        return out

    def stable_dt(self, cfl: float = 1.0) -> float:
        K = self.grid.n / 2
        m2, m1, m0 = self.bounds[2], self.bounds[1], self.bounds[0]
        denom = m2 * K * K + m1 * K + m0
        return math.inf if denom == 0 else cfl / denom


def lower_order_coefficients(cs: CoefficientSet) -> dict:
    """Map multi-index -> coefficient of the non-dispersive part of L."""
    return {
        (2, 0): cs.a_plus1,
        (1, 1): cs.a_0.scale(2),
        (0, 2): cs.a_minus1,
        (1, 0): cs.b1,
        (0, 1): cs.b2,
        (0, 0): cs.c,
    }


def _check_resolution(grid: Grid, cs: CoefficientSet) -> None:
    if cs.degree + 2 >= grid.n / 2:
        raise ResolutionError(f"coefficient degree {cs.degree} needs n > {2 * (cs.degree + 2)}, got {grid.n}")


def _chop(poly: TrigPolynomial, tol: float = 1e-14) -> TrigPolynomial:
    return TrigPolynomial({b: c for b, c in poly.terms.items() if abs(complex(c)) > tol}, check=False)


def _conjugation_factors(phi: TrigPolynomial, max_order: int = 3) -> dict:
    """h[g] = exp(phi) d^g exp(-phi), as polynomials in the derivatives of phi."""
    phi = phi.to_float()
    grads = (phi.partial_derivative(0), phi.partial_derivative(1))
    h = {(0, 0): TrigPolynomial.constant(1.0)}
    for order in range(1, max_order + 1):
        for g1 in range(order, -1, -1):
            g = (g1, order - g1)
            j = 0 if g1 > 0 else 1
            prev = (g[0] - 1, g[1]) if j == 0 else (g[0], g[1] - 1)
            h[g] = _chop(h[prev].partial_derivative(j) - grads[j] * h[prev])
    return h


def gauged_coefficients(cs: CoefficientSet, phi: TrigPolynomial) -> dict:
    """Lower-order coefficients of exp(phi) L exp(-phi) - d_t - p(d), by the Leibniz rule.

    When (a_-1, a1) = grad phi and a0 = a1 + a_-1, the second-order entries
    cancel up to rounding and the remainder is first order.
    """
    h = _conjugation_factors(phi)
    full = {g: TrigPolynomial.constant(1.0) for g in _P_INDICES}
    full.update({g: p.to_float() for g, p in lower_order_coefficients(cs).items()})
    out = {}
    for delta in _LOWER_INDICES:
        acc = TrigPolynomial.zero()
        for g, cg in full.items():
            if cg.is_zero() or g[0] < delta[0] or g[1] < delta[1]:
                continue
            w = comb(g[0], delta[0]) * comb(g[1], delta[1])
            rest = h[(g[0] - delta[0], g[1] - delta[1])]
            acc = acc + (cg * rest).scale(float(w))
        out[delta] = _chop(acc)
    return out


def apply_L_space(state: SpectralState, cs: CoefficientSet, phi: TrigPolynomial | None = None,
                  dealias: bool = True) -> np.ndarray:
    """Grid values of (p(d) + lower-order terms) u.

    With ``phi`` the gauged operator exp(phi) L_space exp(-phi) is applied by
    composition: multiply, apply, multiply back.
    """
    grid = state.grid
    _check_resolution(grid, cs)
    part = VariablePart(grid, lower_order_coefficients(cs), dealias)
    if phi is None:
        spec = multiplier_p(grid) * state.spectrum + part.apply(state.spectrum)
        return _ifft2(spec)
    e = np.exp(grid.sample(phi))
    inner = SpectralState.from_values(grid, state.values / e)
    return e * apply_L_space(inner, cs, None, dealias)


def apply_gauged_expanded(state: SpectralState, cs: CoefficientSet, phi: TrigPolynomial,
                          dealias: bool = True) -> np.ndarray:
    """Grid values of the gauged operator using the Leibniz-expanded coefficients."""
    grid = state.grid
    part = VariablePart(grid, gauged_coefficients(cs, phi), dealias)
    return _ifft2(multiplier_p(grid) * state.spectrum + part.apply(state.spectrum))


Forcing = Callable[[float, Grid], np.ndarray]


@dataclass
class EvolutionConfig:
    dt: float
    t_end: float
    dealias: bool = True
    gauge: bool = False
    phi: TrigPolynomial | None = None
    record_every: int = 1
    forcing: Forcing | None = None
    norm_ceiling: float = DEFAULT_NORM_CEILING
    cfl: float = 1.0
    strict: bool = False

    def validate(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive and finite")
        if not (self.t_end >= self.dt):
            raise ValueError("dt must not exceed t_end")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.gauge and self.phi is None:
            raise ValueError("gauge mode needs a potential phi")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class TimeSeries:
    t: list[float] = field(default_factory=list)
    l2_norm: list[float] = field(default_factory=list)
    gauged_l2_norm: list[float | None] = field(default_factory=list)
    aborted: bool = False

    def append(self, t, norm, gauged=None):
        if self.t and not t > self.t[-1]:
            raise ValueError("time series must be strictly increasing")
        self.t.append(float(t))
        self.l2_norm.append(float(norm))
        self.gauged_l2_norm.append(None if gauged is None else float(gauged))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "l2_norm", "gauged_l2_norm"])
        for t, a, g in zip(self.t, self.l2_norm, self.gauged_l2_norm):
            w.writerow([repr(t), repr(a), "" if g is None else repr(g)])
        return buf.getvalue()

    def rate(self, gauged: bool = True) -> float:
        """Exponential rate log(N(t_end)/N(0)) / t_end of the recorded norm."""
        col = self.gauged_l2_norm if gauged else self.l2_norm
        return math.log(col[-1] / col[0]) / (self.t[-1] - self.t[0])


class IntegratingFactorRK4:
    """Fixed-step IF-RK4 for  d_t u_hat = i p(k) u_hat - R(u_hat) + f_hat(t)."""

    def __init__(self, grid: Grid, part: VariablePart, dt: float, forcing=None):
        self.grid = grid
        self.part = part
        self.dt = dt
        self.forcing = forcing
        lin = -multiplier_p(grid)  # = i p(k)
        self.e_half = np.exp(lin * dt / 2)
        self.e_full = self.e_half * self.e_half

    def _rhs(self, spec: np.ndarray, t: float) -> np.ndarray:
        out = -self.part.apply(spec) if not self.part.is_zero() else np.zeros_like(spec)
        if self.forcing is not None:
            out = out + _fft2(np.asarray(self.forcing(t, self.grid), dtype=complex))
        return out

    def step(self, spec: np.ndarray, t: float) -> np.ndarray:
        dt, E, E2 = self.dt, self.e_half, self.e_full
        k1 = self._rhs(spec, t)
        k2 = self._rhs(E * (spec + 0.5 * dt * k1), t + 0.5 * dt)
        k3 = self._rhs(E * spec + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = self._rhs(E2 * spec + dt * E * k3, t + dt)
        return E2 * spec + (dt / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)


def _stepper(grid: Grid, cs: CoefficientSet, config: EvolutionConfig, dt: float):
    _check_resolution(grid, cs)
    if config.gauge:
        part = VariablePart(grid, gauged_coefficients(cs, config.phi), config.dealias)
        forcing = config.forcing
        if forcing is not None:
            e = np.exp(grid.sample(config.phi))
            forcing = lambda t, g, _f=config.forcing, _e=e: _e * _f(t, g)  # noqa: E731
    else:
        part = VariablePart(grid, lower_order_coefficients(cs), config.dealias)
        forcing = config.forcing
    limit = part.stable_dt(config.cfl)
    if dt > limit:
        msg = f"dt={dt:.3e} exceeds the stability bound {limit:.3e} on {grid}"
        if config.strict:
            raise CFLError(msg)
        warnings.warn(msg, CFLWarning, stacklevel=3)
    return IntegratingFactorRK4(grid, part, dt, forcing)


def step(state: SpectralState, cs: CoefficientSet, config: EvolutionConfig) -> SpectralState:
    """Advance one step of size config.dt (the state holds v = exp(phi) u in gauge mode)."""
    config.validate()
    integ = _stepper(state.grid, cs, config, config.dt)
    new = integ.step(state.spectrum, state.time)
    if not np.all(np.isfinite(new)):
        raise SimulationError(f"non-finite values after step at t={state.time:.6g}")
    return SpectralState(state.grid, new, state.time + config.dt)


def evolve(u0: SpectralState, cs: CoefficientSet, config: EvolutionConfig
           ) -> tuple[TimeSeries, SpectralState]:
    """Integrate from u0 to t_end; returns the norm history and the final physical state u.

    The step count is round(t_end/dt) and the step is adjusted to land on t_end.
    Runs stop early (``series.aborted``) once the norm exceeds the ceiling.
    """
    config.validate()
    grid = u0.grid
    steps = config.n_steps
    dt = config.t_end / steps
    integ = _stepper(grid, cs, config, dt)

    if config.gauge:
        e = np.exp(grid.sample(config.phi))
        spec = _fft2(e * u0.values)
        to_u = lambda s: _fft2(_ifft2(s) / e)  # noqa: E731
    else:
        spec = u0.spectrum.copy()
        to_u = lambda s: s  # noqa: E731

    series = TimeSeries()
    t0 = u0.time

    def record(t, s):
        if config.gauge:
            series.append(t, l2_norm_from_spectrum(to_u(s)), l2_norm_from_spectrum(s))
        else:
            series.append(t, l2_norm_from_spectrum(s))

    record(t0, spec)
    for i in range(1, steps + 1):
        t_prev = t0 + (i - 1) * dt
        spec = integ.step(spec, t_prev)
        if not np.all(np.isfinite(spec)):
            raise SimulationError(f"non-finite values at step {i} (t={t_prev + dt:.6g}) on {grid}")
        t = t0 + i * dt
        nrm = l2_norm_from_spectrum(spec)
        if nrm > config.norm_ceiling:
            record(t, spec)
            series.aborted = True
            logger.info("norm ceiling %.3g reached at t=%.6g on %s", config.norm_ceiling, t, grid)
            return series, SpectralState(grid, to_u(spec), t)
        if i % config.record_every == 0 or i == steps:
            record(t, spec)
    return series, SpectralState(grid, to_u(spec), t0 + steps * dt)


def common_mode_difference(a: SpectralState, b: SpectralState) -> float:
    """L2 norm of the difference restricted to modes |k_j| < min(n)/2 present on both grids."""
    n = min(a.grid.n, b.grid.n)
    ks = np.arange(-(n // 2) + 1, n // 2)
    ca, cb = a.fourier_coefficients(), b.fourier_coefficients()
    ia, ib = ks % a.grid.n, ks % b.grid.n
    diff = ca[np.ix_(ia, ia)] - cb[np.ix_(ib, ib)]
    return 2 * math.pi * _scaled_root_sum_squares(diff)


class RefinementRow(NamedTuple):
    n: int
    dt: float
    final_norm: float
    aborted: bool
    diff_to_next: float | None


def refinement_study(cs: CoefficientSet, u0_family: Callable[[Grid], np.ndarray], t_star: float,
                     n_list: Sequence[int], dt: float | Callable[[Grid], float] | None = None,
                     gauge: bool = False, phi: TrigPolynomial | None = None,
                     dealias: bool = True, cfl_fraction: float = 0.5,
                     norm_ceiling: float = DEFAULT_NORM_CEILING) -> list[RefinementRow]:
    """Evolve the same problem on each grid and compare consecutive resolutions.

    ``dt`` may be a number (shared by all grids), a callable of the grid, or
    None for ``cfl_fraction`` times the stability bound of each grid.
    """
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise ValueError("n_list must be ascending")
    finals, rows = [], []
    for n in n_list:
        grid = Grid(n)
        if dt is None:
            coeffs = gauged_coefficients(cs, phi) if gauge else lower_order_coefficients(cs)
            step_dt = min(cfl_fraction * VariablePart(grid, coeffs, dealias).stable_dt(), t_star / 10)
        elif callable(dt):
            step_dt = dt(grid)
        else:
            step_dt = dt
        cfg = EvolutionConfig(dt=step_dt, t_end=t_star, dealias=dealias, gauge=gauge, phi=phi,
                              record_every=10 ** 9, norm_ceiling=norm_ceiling)
        u0 = SpectralState.from_values(grid, u0_family(grid))
        series, final = evolve(u0, cs, cfg)
        finals.append(final)
        rows.append([n, t_star / cfg.n_steps, series.l2_norm[-1], series.aborted])
    out = []
    for i, r in enumerate(rows):
        diff = common_mode_difference(finals[i], finals[i + 1]) if i + 1 < len(rows) else None
        out.append(RefinementRow(r[0], r[1], r[2], r[3], diff))
    return out
