"""Temporal modes of the received field and matched-filter mode selection.

Time is dimensionless with the Gauss-Hermite width set to one. The matched
filter ``f(t) ~ u_0*(-t)`` is applied as a spectral filter whose amplitude
transfer function is normalized to unit peak. Power transfer coefficients

    theta_n(dt) = integral over |t| <= dt/2 of |(f * u_n)(t)|^2

measure how much of mode ``n`` lands in a detection window of length ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, ExtentError, ResolutionError
from .rng import as_generator

CONVERGENCE_TOL = 1e-6
_ALIAS_TOL = 1e-8
_MODE_MARGIN = 6.0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform periodic grid on [-half_width, half_width) with t = 0 at index n_points // 2."""

    n_points: int = 4096
    half_width: float = 20.0

    def __post_init__(self):
        if self.n_points < 8 or self.n_points % 2:
            raise DomainError("grid needs an even number of points (>= 8)")
        if self.half_width <= 0.0:
            raise DomainError("grid half-width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def t(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_points)

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies in FFT order (for arrays rotated so t = 0 is index 0)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.spacing)

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def refined(self) -> "TimeGrid":
        """Same extent, half the spacing."""
        return TimeGrid(2 * self.n_points, self.half_width)


REFERENCE_GRID = TimeGrid()


@dataclass(frozen=True, eq=False)
class ModeBasis:
    grid: TimeGrid
    samples: np.ndarray  # (n_modes, n_points)

    @property
    def n_modes(self) -> int:
        return self.samples.shape[0]

    def overlap(self, m: int, n: int) -> float:
        return float(np.sum(self.samples[m] * self.samples[n]) * self.grid.spacing)


@dataclass(frozen=True, eq=False)
class TransferProfile:
    windows: np.ndarray
    theta: np.ndarray  # (n_modes, n_windows)
    filter_desc: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class NoiseField:
    """One realization of the mode amplitudes: signal alpha plus noise betas."""

    alpha: complex
    betas: np.ndarray

    @property
    def amplitudes(self) -> np.ndarray:
        out = self.betas.copy()
        out[0] += self.alpha
        return out


def _check_resolution(n, grid):
    turning = math.sqrt(2.0 * n + 1.0)
    limit = min(grid.half_width, grid.nyquist)
    if turning + _MODE_MARGIN > limit:
        raise ResolutionError(
            f"mode {n} (turning point {turning:.2f}) not resolved: grid extent "
            f"{grid.half_width:g}, Nyquist frequency {grid.nyquist:.3g}"
        )


def hermite_basis(n_modes: int, grid: TimeGrid = REFERENCE_GRID) -> ModeBasis:
    """Gauss-Hermite modes u_0..u_{n_modes-1} from the normalized three-term recurrence."""
    if n_modes < 1:
        raise DomainError("need at least one mode")
    _check_resolution(n_modes - 1, grid)
    t = grid.t
    out = np.empty((n_modes, t.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * t * t)
    if n_modes > 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for n in range(1, n_modes - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * t * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    norms = np.sum(out * out, axis=1) * grid.spacing
    bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-8)
    if bad.size:
        raise ResolutionError(f"mode {bad[0]} has grid norm {norms[bad[0]]:.12f}")
    return ModeBasis(grid, out)


def hermite_mode(n: int, grid: TimeGrid = REFERENCE_GRID) -> np.ndarray:
    if n < 0:
        raise DomainError("mode index must be non-negative")
    return hermite_basis(n + 1, grid).samples[n]


@lru_cache(maxsize=8)
def _transfer_function(grid: TimeGrid) -> np.ndarray:
    # f(t) = u_0*(-t); for the real even Gaussian this is u_0 itself
    u0 = np.pi ** -0.25 * np.exp(-0.5 * grid.t ** 2)
    spectrum = np.fft.fft(np.fft.ifftshift(u0))
    spectrum = spectrum / np.max(np.abs(spectrum))
    spectrum.setflags(write=False)
    return spectrum


def transfer_function(grid: TimeGrid = REFERENCE_GRID) -> np.ndarray:
    """Matched-filter amplitude transfer on ``grid.omega``, unit peak magnitude."""
    return _transfer_function(grid)


def impulse_response_energy(grid: TimeGrid = REFERENCE_GRID) -> float:
    """Integral of |h(t)|^2 for the peak-normalized filter impulse response h."""
    h = transfer_function(grid)
    # sum |h_j|^2 dt with h_j = ifft(H)_j / dt, via discrete Parseval
    return float(np.sum(np.abs(h) ** 2) / (grid.n_points * grid.spacing))


def _filter_rows(samples, grid):
    spectrum = np.fft.fft(np.fft.ifftshift(samples, axes=-1), axis=-1)
    power = np.abs(spectrum) ** 2
    total = power.sum(axis=-1)
    edge = np.abs(grid.omega) > 0.95 * grid.nyquist
    frac = np.divide(power[..., edge].sum(axis=-1), total, out=np.zeros_like(total), where=total > 0)
    if np.any(frac > _ALIAS_TOL):
        raise ResolutionError(f"spectral energy fraction {frac.max():.2e} at the grid edge (aliasing)")
    out = np.fft.ifft(spectrum * transfer_function(grid), axis=-1)
    return np.fft.fftshift(out, axes=-1)


def matched_filter_output(field_samples: np.ndarray, grid: TimeGrid = REFERENCE_GRID) -> np.ndarray:
    """Apply the matched filter to an arbitrary field sampled on ``grid``."""
    field_samples = np.asarray(field_samples, dtype=complex)
    if field_samples.shape[-1] != grid.n_points:
        raise DomainError("field length does not match the grid")
    return _filter_rows(field_samples, grid)


def matched_filter_response(n: int, grid: TimeGrid = REFERENCE_GRID) -> np.ndarray:
    """Sampled (f * u_n)(t) on ``grid``."""
    return _filter_rows(hermite_mode(n, grid)[None, :].astype(complex), grid)[0]


def _window_integrals(density, windows, grid):
    """Integrate each row of ``density`` over [-dt/2, dt/2] for every dt in ``windows``.

    Integrates the trigonometric interpolant of the sampled density, which
    coincides with the trapezoid rule for full-period windows and keeps its
    spectral accuracy for partial ones.
    """
    windows = np.asarray(windows, dtype=float)
    if np.any(windows < 0.0):
        raise DomainError("detection windows must be non-negative")
    if np.any(windows > 2.0 * grid.half_width):
        raise ExtentError(f"window exceeds grid extent {2.0 * grid.half_width:g}")
    coeffs = np.fft.fft(np.fft.ifftshift(density, axes=-1), axis=-1).real / grid.n_points
    omega = grid.omega
    half = 0.5 * windows
    kernel = np.empty((omega.size, windows.size))
    kernel[0] = 2.0 * half
    w = omega[1:, None]
    kernel[1:] = 2.0 * np.sin(w * half[None, :]) / w
    return coeffs @ kernel


def transfer_profile(n_modes: int, windows: Sequence[float], grid: TimeGrid = REFERENCE_GRID) -> TransferProfile:
    """theta_n(dt) for n = 0..n_modes-1 over the given windows."""
    basis = hermite_basis(n_modes, grid)
    out = _filter_rows(basis.samples.astype(complex), grid)
    theta = _window_integrals(np.abs(out) ** 2, windows, grid)
    theta = np.clip(theta, 0.0, 1.0)
    # rounding makes saturated theta wobble at 1e-16; restore the exact monotonicity
    order = np.argsort(np.asarray(windows, dtype=float), kind="stable")
    envelope = np.maximum.accumulate(theta[:, order], axis=1)
    if np.any(envelope - theta[:, order] > 1e-12):
        raise ResolutionError("window integrals are not monotone beyond rounding")
    theta[:, order] = envelope
    desc = {"normalization": "unit peak spectral amplitude", "grid_points": grid.n_points,
            "half_width": grid.half_width}
    return TransferProfile(np.asarray(windows, dtype=float), theta, desc)


def power_transfer(n: int, dt: float, grid: TimeGrid = REFERENCE_GRID) -> float:
    """theta_n(dt) for a single mode and window."""
    if n < 0:
        raise DomainError("mode index must be non-negative")
    if dt < 0.0:
        raise DomainError("window must be non-negative")
    return float(transfer_profile(n + 1, [dt], grid).theta[n, 0])


def total_transfer(windows: Sequence[float], grid: TimeGrid = REFERENCE_GRID) -> np.ndarray:
    """sum over all n of theta_n(dt).

    By completeness of the mode basis the sum equals dt times the energy of
    the filter impulse response.
    """
    return np.asarray(windows, dtype=float) * impulse_response_energy(grid)


def tradeoff_curve(windows: Sequence[float], n_max: int = 32, grid: TimeGrid = REFERENCE_GRID,
                   mode_sum: str = "truncated") -> list[tuple[float, float]]:
    """(efficiency theta_0, selectivity theta_0 / sum_n theta_n) per window.

    ``mode_sum="truncated"`` sums n = 0..n_max and raises ConvergenceError
    unless theta_{n_max} is below 1e-6 at the longest window.
    ``mode_sum="complete"`` uses the closed-form sum over all modes.
    """
    windows = np.asarray(windows, dtype=float)
    if windows.size == 0:
        raise DomainError("empty window grid")
    if mode_sum == "complete":
        prof = transfer_profile(1, windows, grid)
        eff = prof.theta[0]
        total = total_transfer(windows, grid)
        out = matched_filter_response(0, grid)
        # dt -> 0: ratio of densities at t = 0
        limit = float(np.abs(out[grid.n_points // 2]) ** 2) / impulse_response_energy(grid)
        sel = np.where(total > 0.0, eff / np.where(total > 0.0, total, 1.0), limit)
        return [(float(e), float(min(s, 1.0))) for e, s in zip(eff, sel)]
    if mode_sum != "truncated":
        raise DomainError(f"unknown mode_sum {mode_sum!r}")
    prof = transfer_profile(n_max + 1, windows, grid)
    last = prof.theta[n_max, int(np.argmax(windows))]
    if n_max > 0 and last >= CONVERGENCE_TOL:
        raise ConvergenceError(
            f"mode sum not converged: theta_{n_max}({windows.max():g}) = {last:.3e} >= {CONVERGENCE_TOL:g}; "
            f"use more modes, shorter windows, or mode_sum='complete'"
        )
    eff = prof.theta[0]
    total = prof.theta.sum(axis=0)
    # at dt = 0 only mode 0 survives (matched filter output of u_n vanishes at t = 0)
    sel = np.where(total > 0.0, eff / np.where(total > 0.0, total, 1.0), 1.0)
    return [(float(e), float(min(s, 1.0))) for e, s in zip(eff, sel)]


def sample_noise_field(n_modes: int, n_b: float, alpha: complex, rng) -> NoiseField:
    """Draw i.i.d. circular Gaussian mode amplitudes with <|beta|^2> = n_b."""
    if n_modes < 1:
        raise DomainError("need at least one mode")
    if not n_b >= 0.0:
        raise DomainError("n_b must be non-negative")
    gen = as_generator(rng)
    z = gen.standard_normal((n_modes, 2))
    betas = math.sqrt(n_b / 2.0) * (z[:, 0] + 1j * z[:, 1])
    return NoiseField(complex(alpha), betas)
