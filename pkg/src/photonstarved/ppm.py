"""Pulse position modulation over the single-mode noisy photon-counting channel.

A PPM frame has ``M`` slots; one carries a pulse of energy ``E_s = M n_a``,
the rest only background. With equiprobable symbols the posterior of slot
``j`` given the counts ``K`` is ``lambda(K_j) / sum_i lambda(K_i)``, where
``lambda = p1/p0`` is the per-slot likelihood ratio. Everything here (exact
Geiger mutual information, Monte Carlo estimates and the PIE lower bound)
is built on that identity.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from . import kernels
from .errors import ConvergenceError, DomainError
from .photodetection import (
    DetectorKind,
    PhotocountPmf,
    empty_slot_pmf,
    log_likelihood_ratios,
    log_pmf_table,
    pulse_slot_pmf,
    sample_photocounts,
    truncation_point,
)
from .rng import as_stream

LN2 = math.log(2.0)
DEFAULT_ORDERS = tuple(2**m for m in range(1, 25))
ENERGY_CAP = 1e3
DEFAULT_SHARDS = 16
_BATCH_ELEMENTS = 1 << 21
_DEEP_TAIL = 1e-30


class RelativeEntropy(NamedTuple):
    bits: float
    error: float


class MonteCarloEstimate(NamedTuple):
    bits: float
    stderr: float


@dataclass(frozen=True)
class PpmDesign:
    M: int
    n_a: float
    n_b: float
    detector: DetectorKind
    pie_lower_bound: float
    mi: Optional[float] = None
    mi_stderr: Optional[float] = None

    @property
    def pulse_energy(self) -> float:
        return self.M * self.n_a


def _neg_log_q_coefficients(q: PhotocountPmf):
    # -ln q(k) <= A + B k + C k^2 for every k
    if q.n_b > 0.0:
        return (
            q.pulse_energy / (1.0 + q.n_b) + math.log1p(q.n_b),
            math.log1p(1.0 / q.n_b),
            0.0,
        )
    if q.pulse_energy > 0.0:
        return q.pulse_energy, abs(math.log(q.pulse_energy)), 1.0
    return None


def relative_entropy(p: PhotocountPmf, q: PhotocountPmf) -> RelativeEntropy:
    """D(p || q) in bits, with a certified bound on the truncation error.

    Returns ``inf`` when p puts mass where q has none.
    """
    k_max = p.k_max
    lq = q.log_pmf(k_max)
    lp = p.log_probs
    support = p.probs > 0.0
    if np.any(support & np.isneginf(lq)):
        return RelativeEntropy(math.inf, 0.0)
    terms = p.probs[support] * (lp[support] - lq[support])
    value = math.fsum(terms) / LN2

    t0 = p.tail_mass
    if t0 == 0.0:
        return RelativeEntropy(value, 0.0)
    coeffs = _neg_log_q_coefficients(q)
    if coeffs is None:
        # q is a point mass at zero; any tail of p lies outside its support
        return RelativeEntropy(math.inf, 0.0)
    a, b, c = coeffs
    upper = a * t0
    if b:
        upper += b * p.tail_moment_bound(1)
    if c:
        upper += c * p.tail_moment_bound(2)
    lower = t0 * math.log(1.0 / t0)
    return RelativeEntropy(value, max(upper, lower) / LN2)


def binary_divergence(p_click: float, q_click: float) -> float:
    """D(Bernoulli(p) || Bernoulli(q)) in bits, inf on support violation."""
    total = 0.0
    for a, b in ((p_click, q_click), (1.0 - p_click, 1.0 - q_click)):
        if a == 0.0:
            continue
        if b == 0.0:
            return math.inf
        total += a * math.log(a / b)
    return total / LN2


def _geiger_probs(pulse_energy, n_b):
    """(P_click|pulse, P_click|empty), computed without cancellation."""
    a = -math.expm1(-pulse_energy / (1.0 + n_b) - math.log1p(n_b))
    b = n_b / (1.0 + n_b)
    return a, b


def pulse_divergence(pulse_energy: float, n_b: float, detector=DetectorKind.PNR) -> float:
    """D(p1 || p0) in bits for a single pulsed slot versus an empty one."""
    detector = DetectorKind(detector)
    if detector is DetectorKind.GEIGER:
        return binary_divergence(*_geiger_probs(pulse_energy, n_b))
    return relative_entropy(pulse_slot_pmf(pulse_energy, n_b), empty_slot_pmf(n_b)).bits


def _jensen_term(log_ratio, M):
    """ln(M lambda / (lambda + M - 1)) evaluated stably; lambda = +inf gives ln M."""
    log_ratio = np.asarray(log_ratio, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        # near lambda = 1 the form ln(lambda) - ln(1 + (lambda - 1)/M) avoids cancellation
        small = log_ratio - np.log1p(np.expm1(np.minimum(log_ratio, 30.0)) / M)
        large = math.log(M) - np.logaddexp(0.0, math.log(M - 1) - log_ratio)
    return np.where(log_ratio < 30.0, small, large)


def frame_information_lower_bound(M: int, n_a: float, n_b: float, detector=DetectorKind.PNR) -> float:
    """Lower bound on I(X;K) for one PPM frame, in bits.

    Jensen's inequality applied to the empty-slot part of the posterior
    normalizer gives ``I >= E_p1[log2(M lambda / (lambda + M - 1))]``, which
    equals D(p1 || p0) minus a non-negative correction and tends to it as M
    grows at fixed pulse energy.
    """
    detector = DetectorKind(detector)
    if M < 2:
        raise DomainError("PPM order must be at least 2")
    energy = M * n_a
    if energy == 0.0:
        return 0.0
    if detector is DetectorKind.GEIGER:
        a, _ = _geiger_probs(energy, n_b)
        x = energy / (1.0 + n_b)
        total = 0.0
        if 1.0 - a > 0.0:
            total += (1.0 - a) * _jensen_term(-x, M)
        if a > 0.0:
            # lambda(click) = 1 + (1 - e^-x) / n_b
            llr_click = math.inf if n_b == 0.0 else math.log1p(-math.expm1(-x) / n_b)
            total += a * _jensen_term(llr_click, M)
        return max(float(total), 0.0) / LN2
    # lambda(k) >= lambda(0) for every k, so writing the sum relative to the
    # k = 0 term lets the unseen tail be dropped as a non-negative remainder;
    # a deep cut keeps that remainder negligible even when the bound is ~E^2
    k_max, _ = truncation_point(energy, n_b, _DEEP_TAIL)
    probs = np.exp(log_pmf_table(energy, n_b, k_max))
    if n_b == 0.0:
        llr = np.full(k_max + 1, np.inf)
        llr[0] = -energy
    else:
        llr = log_likelihood_ratios(energy, n_b, k_max)
    base = float(_jensen_term(-energy / (1.0 + n_b), M))
    terms = probs * (_jensen_term(llr, M) - base)
    # mutual information is non-negative, so flooring at zero keeps this a bound
    return max(base + math.fsum(terms), 0.0) / LN2


def ppm_pie_lower_bound(M: int, n_a: float, n_b: float, detector=DetectorKind.PNR) -> float:
    """PIE lower bound (bits per detected photon) for M-ary PPM."""
    if not n_a > 0.0 or not n_b >= 0.0:
        raise DomainError("need n_a > 0 and n_b >= 0")
    return frame_information_lower_bound(M, n_a, n_b, detector) / (M * n_a)


def capped_divergence_pie(M: int, n_a: float, n_b: float, detector=DetectorKind.PNR) -> float:
    """Heuristic ``min(D(p1||p0), log2 M) / (M n_a)``.

    Not a lower bound in general: when the cap is active it equals
    ``log2 M``, above the mutual information of any noisy frame.
    """
    if not n_a > 0.0 or M < 2:
        raise DomainError("need n_a > 0 and M >= 2")
    d = pulse_divergence(M * n_a, n_b, detector)
    return min(d, math.log2(M)) / (M * n_a)


def exact_mi_geiger(M: int, n_a: float, n_b: float) -> float:
    """Exact I(X; clicks) for M-ary PPM with Geiger-mode detection, in bits.

    Uses the sufficient statistic (click in the pulsed slot, number of clicks
    among the other M - 1 slots); O(M) work.
    """
    if M < 2:
        raise DomainError("PPM order must be at least 2")
    energy = M * n_a
    if energy == 0.0:
        return 0.0
    a, b = _geiger_probs(energy, n_b)
    log_m = math.log(M)
    if b == 0.0:
        return a * log_m / LN2
    log_lc = math.log(a) - math.log(b)
    log_ln = math.log1p(-a) - math.log1p(-b) if a < 1.0 else -math.inf
    m_hi = M - 1
    if M > 4096:
        m_hi = min(M - 1, int(stats.binom.isf(1e-18, M - 1, b)) + 2)
    m = np.arange(m_hi + 1)
    weights = stats.binom.pmf(m, M - 1, b)
    total = 0.0
    for c, pc, log_lam in ((1, a, log_lc), (0, 1.0 - a, log_ln)):
        if pc == 0.0:
            continue
        n_click = c + m
        with np.errstate(divide="ignore"):
            norm = np.logaddexp(np.log(n_click) + log_lc, np.log(M - n_click) + log_ln)
        total += pc * math.fsum(weights * (log_m + log_lam - norm))
    return total / LN2


def _count_tables(energy, n_b, k_max, geiger):
    if geiger:
        a, b = _geiger_probs(energy, n_b)
        lp1 = np.array([math.log1p(-a) if a < 1.0 else -math.inf, math.log(a)])
        lp0 = np.array([math.log1p(-b), math.log(b) if b > 0.0 else -math.inf])
        return lp1, lp0
    return log_pmf_table(energy, n_b, k_max), log_pmf_table(0.0, n_b, k_max)


def _mc_shard(M, energy, n_b, frames, stream, geiger):
    gen = stream.generator()
    batch = max(1, _BATCH_ELEMENTS // M)
    sums, sumsq = [], []
    done = 0
    amp = math.sqrt(energy)
    while done < frames:
        f = min(batch, frames - done)
        truth = gen.integers(0, M, size=f)
        alpha = np.zeros((f, M), dtype=complex)
        alpha[np.arange(f), truth] = amp
        counts = sample_photocounts(alpha, n_b, gen).astype(np.int64)
        if geiger:
            counts = (counts > 0).astype(np.int64)
        lp1, lp0 = _count_tables(energy, n_b, int(counts.max()), geiger)
        log2_post, _ = kernels.frame_scores(np.ascontiguousarray(counts), truth.astype(np.int64), lp1, lp0)
        info = math.log2(M) + log2_post
        sums.append(float(np.sum(info)))
        sumsq.append(float(np.sum(info * info)))
        done += f
    return sums, sumsq


def _shard_sizes(total, shards):
    return [total // shards + (1 if s < total % shards else 0) for s in range(shards)]


def mi_monte_carlo(M, n_a, n_b, n_samples, rng_stream, detector=DetectorKind.PNR,
                   shards=DEFAULT_SHARDS, workers=1) -> MonteCarloEstimate:
    """Monte Carlo estimate of I(X;K) in bits per frame with its standard error.

    Frames are split over ``shards`` fixed sub-streams; the result depends on
    (seed, shards) only, not on ``workers``.
    """
    detector = DetectorKind(detector)
    if M < 2:
        raise DomainError("PPM order must be at least 2")
    if n_samples < 1000:
        raise DomainError("need at least 1000 Monte Carlo frames")
    energy = M * n_a
    if energy == 0.0:
        return MonteCarloEstimate(0.0, 0.0)
    streams = as_stream(rng_stream).child("ppm-mi").split(shards)
    sizes = _shard_sizes(n_samples, shards)
    geiger = detector is DetectorKind.GEIGER
    jobs = [(M, energy, n_b, n, s, geiger) for n, s in zip(sizes, streams) if n > 0]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _mc_shard(*j), jobs))
    else:
        parts = [_mc_shard(*j) for j in jobs]
    total = math.fsum(x for s, _ in parts for x in s)
    total_sq = math.fsum(x for _, s in parts for x in s)
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return MonteCarloEstimate(mean, math.sqrt(var / n_samples))


def mi_monte_carlo_pnr(M, n_a, n_b, n_samples, rng_stream, geiger_collapse=False,
                       shards=DEFAULT_SHARDS, workers=1) -> MonteCarloEstimate:
    """PNR-detection Monte Carlo MI; ``geiger_collapse`` thresholds counts to clicks."""
    detector = DetectorKind.GEIGER if geiger_collapse else DetectorKind.PNR
    return mi_monte_carlo(M, n_a, n_b, n_samples, rng_stream, detector, shards, workers)


def optimize_order(n_a: float, n_b: float, detector=DetectorKind.PNR,
                   M_candidates: Optional[Sequence[int]] = None, energy_cap: float = ENERGY_CAP,
                   mi_frames: int = 0, rng_stream=None) -> PpmDesign:
    """PPM order maximizing the PIE lower bound; ties go to the smaller M.

    Candidates whose pulse energy exceeds ``energy_cap`` are skipped unless
    that would leave none. With ``mi_frames > 0`` the design also carries
    the frame mutual information (exact for Geiger, Monte Carlo for PNR).
    """
    detector = DetectorKind(detector)
    cands = sorted(set(int(m) for m in (M_candidates or DEFAULT_ORDERS)))
    if not cands:
        raise DomainError("no PPM order candidates")
    if cands[0] < 2:
        raise DomainError("PPM orders must be at least 2")
    within = [m for m in cands if m * n_a <= energy_cap]
    cands = within or cands[:1]
    best_m, best = None, -math.inf
    for m in cands:
        value = ppm_pie_lower_bound(m, n_a, n_b, detector)
        if value > best:
            best_m, best = m, value
    mi = stderr = None
    if mi_frames:
        if detector is DetectorKind.GEIGER:
            mi, stderr = exact_mi_geiger(best_m, n_a, n_b), 0.0
        else:
            if rng_stream is None:
                raise DomainError("Monte Carlo MI needs an rng stream")
            mi, stderr = mi_monte_carlo(best_m, n_a, n_b, mi_frames, rng_stream, detector)
    return PpmDesign(best_m, n_a, n_b, detector, best, mi, stderr)


def _golden_max(fun, x_lo, x_mid, x_hi):
    res = optimize.minimize_scalar(lambda x: -fun(x), bracket=(x_lo, x_mid, x_hi), method="golden",
                                   options={"xtol": 1e-6})
    return -float(res.fun), float(res.x)


def verdu_optimum(n_b: float, detector=DetectorKind.PNR, energy_cap: float = ENERGY_CAP,
                  points: int = 61, retries: int = 3) -> tuple[float, float]:
    """Maximize D(p1(E) || p0) / E over pulse energy; returns (bits per photon, E*).

    For PNR detection the ratio keeps increasing toward log2(1 + 1/n_b), so
    the optimum sits at ``energy_cap``. Geiger detection has an interior
    maximum.
    """
    detector = DetectorKind(detector)
    if not n_b > 0.0:
        raise DomainError("capacity per unit cost needs n_b > 0")

    def ratio(log_e):
        e = math.exp(log_e)
        return pulse_divergence(e, n_b, detector) / e

    lo = math.log(energy_cap) - 12.0
    hi = math.log(energy_cap)
    for _ in range(retries + 1):
        grid = np.linspace(lo, hi, points)
        vals = np.array([ratio(x) for x in grid])
        i = int(np.argmax(vals))
        if i == len(grid) - 1:
            return float(vals[i]), math.exp(grid[i])
        if i == 0:
            lo -= 12.0
            continue
        try:
            best, x = _golden_max(ratio, grid[i - 1], grid[i], grid[i + 1])
        except ValueError:
            lo, hi = grid[max(i - 2, 0)], grid[min(i + 2, len(grid) - 1)]
            continue
        if best >= vals[i]:
            return best, math.exp(x)
        return float(vals[i]), math.exp(grid[i])
    raise ConvergenceError(f"no interior maximum of D/E found for n_b={n_b} ({detector.value})")


def verdu_pie_limit(n_b: float, detector=DetectorKind.PNR, energy_cap: float = ENERGY_CAP) -> float:
    """Capacity per unit cost sup_E D(p1(E) || p0) / E in bits per photon."""
    return verdu_optimum(n_b, detector, energy_cap)[0]
