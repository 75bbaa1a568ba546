"""PPM, FSK and BPSK-Hadamard symbols, the structured Hadamard receiver, and link simulation.

All three formats spread one symbol over the same M-slot time-frequency
area with total energy ``M n_a``. PPM puts it in one time slot, FSK in one
frequency bin, and BPSK-Hadamard spreads it evenly over M pulses whose signs
follow a Hadamard row. The structured receiver applies the unitary
``H / sqrt(M)``, turning a Hadamard word back into a single PPM pulse.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from . import kernels
from .errors import DomainError, UnsupportedOrderError
from .photodetection import DetectorKind
from .ppm import DEFAULT_SHARDS, _count_tables, _shard_sizes
from .rng import as_stream

_BATCH_ELEMENTS = 1 << 20


class Format(str, enum.Enum):
    PPM = "ppm"
    FSK = "fsk"
    HADAMARD = "hadamard"


def is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


def _require_power_of_two(m):
    if not is_power_of_two(int(m)):
        raise UnsupportedOrderError(f"Hadamard order must be a power of two, got {m}")


@dataclass(frozen=True, eq=False)
class HadamardCode:
    M: int
    rows: np.ndarray


@dataclass(frozen=True, eq=False)
class SymbolWord:
    amplitudes: np.ndarray
    format: Format
    index: int
    M: int

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def hadamard_matrix(M: int) -> HadamardCode:
    """Sylvester construction: H_1 = [1], H_2k = [[H_k, H_k], [H_k, -H_k]]."""
    _require_power_of_two(M)
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < M:
        h = np.block([[h, h], [h, -h]])
    return HadamardCode(M, h)


def encode_symbol(fmt, index: int, M: int, n_a: float) -> SymbolWord:
    fmt = Format(fmt)
    if M < 1:
        raise DomainError("order must be positive")
    if not 0 <= index < M:
        raise DomainError(f"symbol index {index} outside 0..{M - 1}")
    if not n_a >= 0.0:
        raise DomainError("n_a must be non-negative")
    if fmt is Format.HADAMARD:
        _require_power_of_two(M)
        amps = math.sqrt(n_a) * hadamard_matrix(M).rows[index].astype(complex)
    else:
        # FSK occupies frequency bin `index`; same vector, different axis
        amps = np.zeros(M, dtype=complex)
        amps[index] = math.sqrt(M * n_a)
    return SymbolWord(amps, fmt, index, M)


def structured_receive(word) -> np.ndarray:
    """Apply the unitary H/sqrt(M) to a length-M field (or to each row of a 2-D array)."""
    amps = word.amplitudes if isinstance(word, SymbolWord) else word
    amps = np.array(amps, dtype=complex, copy=True)
    one_d = amps.ndim == 1
    rows = np.ascontiguousarray(amps.reshape(1, -1) if one_d else amps)
    _require_power_of_two(rows.shape[1])
    kernels.fwht_rows(rows)
    rows /= math.sqrt(rows.shape[1])
    return rows[0] if one_d else rows


@dataclass(frozen=True)
class LinkSimReport:
    format: str
    M: int
    n_a: float
    n_b: float
    detector: str
    seed: int
    shards: int
    frames: int
    errors: int
    fer: float
    fer_low: float
    fer_high: float
    mi: float
    mi_stderr: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _words(fmt, symbols, M, n_a):
    f = symbols.size
    if fmt is Format.HADAMARD:
        e = np.zeros((f, M), dtype=complex)
        e[np.arange(f), symbols] = 1.0
        # H is symmetric, so H e_r is row r
        return math.sqrt(n_a) * kernels.fwht_rows(e)
    words = np.zeros((f, M), dtype=complex)
    words[np.arange(f), symbols] = math.sqrt(M * n_a)
    return words


def _sim_shard(fmt, M, n_a, n_b, frames, stream, geiger):
    gen = stream.generator()
    batch = max(1, _BATCH_ELEMENTS // M)
    energy = M * n_a
    sigma = math.sqrt(n_b / 2.0)
    errors = 0
    sums, sumsq = [], []
    done = 0
    while done < frames:
        f = min(batch, frames - done)
        symbols = gen.integers(0, M, size=f)
        noise = gen.standard_normal((f, M, 2))
        field = _words(fmt, symbols, M, n_a) + sigma * (noise[..., 0] + 1j * noise[..., 1])
        if fmt is Format.HADAMARD:
            field = structured_receive(field)
        counts = gen.poisson(np.abs(field) ** 2).astype(np.int64)
        if geiger:
            counts = (counts > 0).astype(np.int64)
        lp1, lp0 = _count_tables(energy, n_b, int(counts.max()), geiger)
        log2_post, decision = kernels.frame_scores(np.ascontiguousarray(counts), symbols.astype(np.int64), lp1, lp0)
        errors += int(np.count_nonzero(decision != symbols))
        info = math.log2(M) + log2_post
        sums.append(float(np.sum(info)))
        sumsq.append(float(np.sum(info * info)))
        done += f
    return errors, sums, sumsq


def simulate_link(fmt, M: int, n_a: float, n_b: float, detector, n_frames: int, rng_stream,
                  shards: int = DEFAULT_SHARDS, workers: int = 1) -> LinkSimReport:
    """Monte Carlo link: random symbols, per-slot Gaussian noise, photon counting, ML decoding.

    Noise is added in the slot basis before the structured receiver. The
    mutual information estimate averages log2(M * posterior of the sent symbol).
    """
    fmt = Format(fmt)
    detector = DetectorKind(detector)
    if M < 2:
        raise DomainError("order must be at least 2")
    if fmt is Format.HADAMARD:
        _require_power_of_two(M)
    if n_frames < 100:
        raise DomainError("need at least 100 frames")
    if not n_a >= 0.0 or not n_b >= 0.0:
        raise DomainError("n_a and n_b must be non-negative")
    stream = as_stream(rng_stream)
    streams = stream.child("link").split(shards)
    sizes = _shard_sizes(n_frames, shards)
    geiger = detector is DetectorKind.GEIGER
    jobs = [(fmt, M, n_a, n_b, n, s, geiger) for n, s in zip(sizes, streams) if n > 0]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _sim_shard(*j), jobs))
    else:
        parts = [_sim_shard(*j) for j in jobs]
    errors = sum(p[0] for p in parts)
    total = math.fsum(x for p in parts for x in p[1])
    total_sq = math.fsum(x for p in parts for x in p[2])
    mean = total / n_frames
    var = max(total_sq / n_frames - mean * mean, 0.0) * n_frames / (n_frames - 1)
    ci = stats.binomtest(errors, n_frames).proportion_ci(confidence_level=0.95, method="wilson")
    return LinkSimReport(
        format=fmt.value, M=M, n_a=n_a, n_b=n_b, detector=detector.value, seed=stream.seed,
        shards=shards, frames=n_frames, errors=errors, fer=errors / n_frames,
        fer_low=float(ci.low), fer_high=float(ci.high), mi=mean, mi_stderr=math.sqrt(var / n_frames),
    )


@dataclass(frozen=True)
class EquivalenceReport:
    reports: dict
    mi_z: dict
    fer_z: dict
    passed: bool

    def to_dict(self) -> dict:
        return {
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
            "mi_z": self.mi_z,
            "fer_z": self.fer_z,
            "passed": self.passed,
        }


def _z(a, b, sa, sb):
    s = math.hypot(sa, sb)
    if s == 0.0:
        return 0.0 if a == b else math.inf
    return abs(a - b) / s


def _fer_sigma(r: LinkSimReport):
    p = r.fer
    return math.sqrt(max(p * (1.0 - p), 1.0 / r.frames) / r.frames)


def format_equivalence_check(M: int, n_a: float, n_b: float, detector, n_frames: int, seed: int,
                             shards: int = DEFAULT_SHARDS, workers: int = 1,
                             threshold: float = 3.0) -> EquivalenceReport:
    """Simulate PPM, FSK and BPSK-Hadamard on common seeds and compare MI and FER pairwise."""
    _require_power_of_two(M)
    reports = {
        fmt.value: simulate_link(fmt, M, n_a, n_b, detector, n_frames, seed, shards, workers)
        for fmt in Format
    }
    names = list(reports)
    mi_z, fer_z = {}, {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = reports[a], reports[b]
            key = f"{a}-{b}"
            mi_z[key] = _z(ra.mi, rb.mi, ra.mi_stderr, rb.mi_stderr)
            fer_z[key] = _z(ra.fer, rb.fer, _fer_sigma(ra), _fer_sigma(rb))
    passed = all(z <= threshold for z in list(mi_z.values()) + list(fer_z.values()))
    return EquivalenceReport(reports, mi_z, fer_z, passed)

