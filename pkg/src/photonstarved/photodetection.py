"""Single-mode photocount statistics under Gaussian background noise.

An empty slot holds a thermal field with mean photon number ``n_b``; a pulsed
slot holds the same field displaced by a coherent amplitude of energy ``E_s``.
Counts therefore follow the Bose-Einstein law and its displaced (Laguerre)
generalization:

    p0(k) = n_b^k / (1+n_b)^(k+1)
    p1(k) = p0(k) * exp(-E_s/(1+n_b)) * L_k(-E_s / (n_b (1+n_b)))

Both pmfs are stored truncated at an adaptively chosen ``k_max`` together with
a Chernoff bound on the discarded tail.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import DomainError
from .rng import as_generator

TAIL_TOLERANCE = 1e-12
# truncate well inside the tolerance so that bound plus rounding still fits
_TRUNCATION_TARGET = 0.1 * TAIL_TOLERANCE


class DetectorKind(str, enum.Enum):
    PNR = "pnr"
    GEIGER = "geiger"


def _log_pgf_derivs(pulse_energy, n_b, u):
    """(log G, G'/G, G''/G) at z = e^u for the displaced-thermal generating function.

    G(z) = exp(E w / a) / a with w = z - 1, a = 1 - n_b w.
    """
    w = math.expm1(u)
    a = 1.0 - n_b * w
    log_g = pulse_energy * w / a - math.log(a)
    d1 = n_b / a + pulse_energy / (a * a)
    d2 = d1 * d1 + n_b * n_b / (a * a) + 2.0 * pulse_energy * n_b / (a * a * a)
    return log_g, d1, d2


def _u_max(n_b):
    # generating function has a pole at z = 1 + 1/n_b
    return math.log1p(1.0 / n_b) * (1.0 - 1e-9) if n_b > 0.0 else 60.0


def _min_over_u(fun, u_hi):
    grid = np.linspace(u_hi * 1e-4, u_hi, 64)
    vals = [fun(u) for u in grid]
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)] if i > 0 else u_hi * 1e-9
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(hi, 1.0)})
    return min(float(res.fun), vals[i])


def tail_moment_bound(pulse_energy, n_b, k_max, moment=0):
    """Upper bound on sum_{k > k_max} k^moment p1(k) (Chernoff / generating function)."""
    if n_b == 0.0 and pulse_energy == 0.0:
        return 0.0
    kk = k_max + 1

    def log_bound(u):
        log_g, d1, d2 = _log_pgf_derivs(pulse_energy, n_b, u)
        z = math.exp(u)
        if moment == 0:
            weight = 1.0
        elif moment == 1:
            weight = z * d1
        else:
            weight = z * d1 + z * z * d2
        # sum_{k>=kk} k^m p(k) <= z^-kk E[K^m z^K], and E[K^m z^K] = G * weight
        return log_g + math.log(weight) - kk * u

    return math.exp(_min_over_u(log_bound, _u_max(n_b)))


def truncation_point(pulse_energy, n_b, tol=_TRUNCATION_TARGET):
    """Smallest k_max whose Chernoff tail bound P(K > k_max) is below ``tol`` (default 1e-13)."""
    if n_b == 0.0 and pulse_energy == 0.0:
        return 0, 0.0
    big_l = -math.log(tol)

    def needed(u):
        log_g = _log_pgf_derivs(pulse_energy, n_b, u)[0]
        return (log_g + big_l) / u

    k_max = max(int(math.ceil(_min_over_u(needed, _u_max(n_b)))) - 1, 0)
    tail = tail_moment_bound(pulse_energy, n_b, k_max)
    while tail > tol:
        k_max += 1
        tail = tail_moment_bound(pulse_energy, n_b, k_max)
    return k_max, tail


def log_pmf_table(pulse_energy, n_b, k_max):
    """Natural-log pmf of the (displaced) thermal count law on 0..k_max."""
    if pulse_energy == 0.0 and n_b > 0.0:
        k = np.arange(k_max + 1)
        return k * math.log(n_b / (1.0 + n_b)) - math.log1p(n_b)
    return kernels.displaced_thermal_logpmf(float(pulse_energy), float(n_b), int(k_max))


@dataclass(frozen=True, eq=False)
class PhotocountPmf:
    """Truncated photocount pmf p(0..k_max) with a bound on the discarded tail."""

    probs: np.ndarray
    log_probs: np.ndarray
    tail_mass: float
    pulse_energy: float
    n_b: float

    @property
    def k_max(self) -> int:
        return len(self.probs) - 1

    def mean(self) -> float:
        return float(math.fsum(np.arange(len(self.probs)) * self.probs))

    def total(self) -> float:
        return math.fsum(self.probs) + self.tail_mass

    def log_pmf(self, k_max: int) -> np.ndarray:
        """Natural-log pmf on 0..k_max, extending past the stored support if needed."""
        if k_max <= self.k_max:
            return self.log_probs[: k_max + 1]
        return log_pmf_table(self.pulse_energy, self.n_b, k_max)

    def tail_moment_bound(self, moment: int) -> float:
        return tail_moment_bound(self.pulse_energy, self.n_b, self.k_max, moment)


def pulse_slot_pmf(pulse_energy: float, n_b: float) -> PhotocountPmf:
    """Counts for a slot carrying a pulse of ``pulse_energy`` mean photons over background ``n_b``."""
    if not pulse_energy >= 0.0 or not n_b >= 0.0:
        raise DomainError(f"need E_s >= 0 and n_b >= 0 (got {pulse_energy}, {n_b})")
    pulse_energy = float(pulse_energy)
    n_b = float(n_b)
    k_max, tail = truncation_point(pulse_energy, n_b)
    logs = log_pmf_table(pulse_energy, n_b, k_max)
    return PhotocountPmf(np.exp(logs), logs, tail, pulse_energy, n_b)


def empty_slot_pmf(n_b: float) -> PhotocountPmf:
    """Bose-Einstein counts of an unoccupied slot."""
    return pulse_slot_pmf(0.0, n_b)


def no_click_probability(pulse_energy: float, n_b: float) -> float:
    return math.exp(-pulse_energy / (1.0 + n_b)) / (1.0 + n_b)


def geigerize(pmf: PhotocountPmf) -> tuple[float, float]:
    """Collapse to (P(no click), P(click)) using the closed-form p(0)."""
    log_p0 = -pmf.pulse_energy / (1.0 + pmf.n_b) - math.log1p(pmf.n_b)
    return math.exp(log_p0), -math.expm1(log_p0)


def log_likelihood_ratios(pulse_energy: float, n_b: float, k_max: int) -> np.ndarray:
    """ln(p1(k)/p0(k)) for k = 0..k_max.

    With ``n_b = 0`` any click is proof of the pulse, so k > 0 maps to +inf.
    """
    if n_b == 0.0:
        out = np.full(k_max + 1, np.inf)
        out[0] = -pulse_energy
        if pulse_energy == 0.0 and k_max > 0:
            out[1:] = np.nan
        return out
    y = pulse_energy / (n_b * (1.0 + n_b))
    if y * k_max <= 0.5:
        return -pulse_energy / (1.0 + n_b) + np.log1p(_laguerre_excess(k_max, y))
    lp1 = log_pmf_table(pulse_energy, n_b, k_max)
    lp0 = log_pmf_table(0.0, n_b, k_max)
    return lp1 - lp0


def _laguerre_excess(k_max, y):
    """L_k(-y) - 1 = sum_{j>=1} C(k, j) y^j / j! for k = 0..k_max, assuming k_max * y small."""
    k = np.arange(k_max + 1, dtype=float)
    term = k * y
    total = term.copy()
    j = 1
    while np.any(term > 1e-17 * total):
        term = term * (k - j) * y / ((j + 1) ** 2)
        total += term
        j += 1
    return total


def log_likelihood_ratio(k: int, pulse_energy: float, n_b: float) -> float:
    """Natural log of p1(k)/p0(k)."""
    if k < 0:
        raise DomainError("photocount must be non-negative")
    if not pulse_energy >= 0.0 or not n_b >= 0.0:
        raise DomainError("need E_s >= 0 and n_b >= 0")
    if k == 0:
        return -pulse_energy / (1.0 + n_b)
    if pulse_energy == 0.0:
        if n_b == 0.0:
            raise DomainError("k > 0 has zero probability under both hypotheses when E_s = n_b = 0")
        return 0.0
    return float(log_likelihood_ratios(pulse_energy, n_b, k)[k])


def sample_photocounts(alpha, n_b: float, rng) -> np.ndarray:
    """Counts for an array of coherent amplitudes ``alpha`` plus circular Gaussian noise.

    Draws beta with <|beta|^2> = n_b per entry, then Poisson(|alpha + beta|^2).
    """
    gen = as_generator(rng)
    alpha = np.asarray(alpha, dtype=complex)
    sigma = math.sqrt(n_b / 2.0)
    noise = gen.standard_normal(alpha.shape + (2,))
    field = alpha + sigma * (noise[..., 0] + 1j * noise[..., 1])
    return gen.poisson(np.abs(field) ** 2)


def sample_photocount(alpha: complex, n_b: float, rng) -> int:
    return int(sample_photocounts(np.asarray([alpha]), n_b, rng)[0])


def sample_from_pmf(pmf: PhotocountPmf, size, rng) -> np.ndarray:
    """Inverse-cdf sampler on the truncated support (tail mass <= 1e-12 is ignored)."""
    gen = as_generator(rng)
    cdf = np.cumsum(pmf.probs)
    idx = np.searchsorted(cdf, gen.random(size) * cdf[-1], side="right")
    return np.minimum(idx, pmf.k_max)
