"""Per-slot capacities and photon information efficiency (PIE) of a noisy optical link.

Signal and background strengths are mean detected photon numbers per slot,
``n_a`` and ``n_b``. All capacities are in bits per slot; PIE is bits per
detected signal photon.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DivergentLimitError, DomainError

PLANCK = 6.626e-34  # J s
LOG2E = 1.0 / math.log(2.0)

# below this, g(x) is evaluated from its small-argument expansion
_G_SERIES_CUTOFF = 1e-8


class Scheme(str, enum.Enum):
    HETERODYNE = "heterodyne"
    HOMODYNE = "homodyne"
    HOLEVO = "holevo"


@dataclass(frozen=True)
class LinkParams:
    """Detected signal/background photon numbers per slot, with an optional link budget.

    Use :meth:`from_link_budget` to derive ``n_a`` and ``n_b`` from transmitter
    power, channel transmission, bandwidth, carrier frequency and background
    spectral density.
    """

    n_a: float
    n_b: float = 0.0
    P_tx: Optional[float] = None
    eta: Optional[float] = None
    B: Optional[float] = None
    f_c: Optional[float] = None
    N_b: Optional[float] = None

    def __post_init__(self):
        if not (self.n_a >= 0.0) or not (self.n_b >= 0.0):
            raise DomainError(f"photon numbers must be non-negative (n_a={self.n_a}, n_b={self.n_b})")
        budget = (self.P_tx, self.eta, self.B, self.f_c)
        if any(v is not None for v in budget):
            if any(v is None for v in budget):
                raise DomainError("link budget needs all of P_tx, eta, B, f_c")
            if not 0.0 < self.eta <= 1.0:
                raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
            if self.B <= 0.0 or self.f_c <= 0.0 or self.P_tx < 0.0:
                raise DomainError("need P_tx >= 0, B > 0, f_c > 0")
            expected = signal_photons_per_slot(self.P_tx, self.eta, self.B, self.f_c)
            if not math.isclose(self.n_a, expected, rel_tol=1e-12, abs_tol=0.0):
                raise DomainError(f"n_a={self.n_a} inconsistent with link budget ({expected})")
        if self.N_b is not None:
            if self.f_c is None:
                raise DomainError("N_b requires the carrier frequency f_c")
            expected = background_photons_per_slot(self.N_b, self.f_c)
            if not math.isclose(self.n_b, expected, rel_tol=1e-12, abs_tol=0.0):
                raise DomainError(f"n_b={self.n_b} inconsistent with N_b ({expected})")

    @property
    def slot_duration(self) -> Optional[float]:
        return None if self.B is None else 1.0 / self.B

    @classmethod
    def from_link_budget(cls, P_tx, eta, B, f_c, N_b=0.0) -> "LinkParams":
        return cls(
            n_a=signal_photons_per_slot(P_tx, eta, B, f_c),
            n_b=background_photons_per_slot(N_b, f_c),
            P_tx=P_tx,
            eta=eta,
            B=B,
            f_c=f_c,
            N_b=N_b,
        )


def signal_photons_per_slot(P_tx, eta, B, f_c):
    return eta * P_tx / (B * PLANCK * f_c)


def background_photons_per_slot(N_b, f_c):
    return N_b / (PLANCK * f_c)


@dataclass(frozen=True)
class CapacityResult:
    bits_per_slot: float
    pie: float
    scheme: Scheme


def holevo_g(x: float) -> float:
    """Entropy of a thermal state with mean photon number ``x``, in bits.

    ``g(x) = (x+1) log2(x+1) - x log2 x`` with ``g(0) = 0``.
    """
    if not x >= 0.0:
        raise DomainError(f"holevo_g needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < _G_SERIES_CUTOFF:
        return _holevo_g_series(x)
    return ((x + 1.0) * math.log1p(x) - x * math.log(x)) * LOG2E


def _holevo_g_series(x):
    # (x+1)ln(1+x) = x + x^2/2 - x^3/6 + ...
    return (x * (1.0 - math.log(x)) + 0.5 * x * x) * LOG2E


def _holevo_g_direct(x):
    return ((x + 1.0) * math.log1p(x) - x * math.log(x)) * LOG2E


def _holevo_bits(n_a, n_b):
    if n_a == 0.0:
        return 0.0
    if n_b == 0.0:
        return holevo_g(n_a)
    # g(n_a+n_b) - g(n_b) regrouped so that no O(1) terms cancel
    total = n_a + n_b
    nats = (
        n_a * math.log1p(1.0 / total)
        + (n_b + 1.0) * math.log1p(n_a / (n_b + 1.0))
        - n_b * math.log1p(n_a / n_b)
    )
    return max(nats, 0.0) * LOG2E


def _bits(scheme, n_a, n_b):
    if scheme is Scheme.HETERODYNE:
        return math.log1p(n_a / (1.0 + n_b)) * LOG2E
    if scheme is Scheme.HOMODYNE:
        return 0.5 * math.log1p(4.0 * n_a / (1.0 + 2.0 * n_b)) * LOG2E
    return _holevo_bits(n_a, n_b)


def _result(scheme, p: LinkParams) -> CapacityResult:
    bits = _bits(scheme, p.n_a, p.n_b)
    if p.n_a > 0.0:
        pie = bits / p.n_a
    else:
        try:
            pie = pie_asymptote(scheme, p.n_b)
        except DivergentLimitError:
            pie = math.inf
    return CapacityResult(bits, pie, scheme)


def cap_heterodyne(p: LinkParams) -> CapacityResult:
    return _result(Scheme.HETERODYNE, p)


def cap_homodyne(p: LinkParams) -> CapacityResult:
    return _result(Scheme.HOMODYNE, p)


def cap_holevo(p: LinkParams) -> CapacityResult:
    """Holevo capacity ``g(n_a + n_b) - g(n_b)``; reduces to ``g(n_a)`` when ``n_b = 0``."""
    return _result(Scheme.HOLEVO, p)


_CAPACITY = {
    Scheme.HETERODYNE: cap_heterodyne,
    Scheme.HOMODYNE: cap_homodyne,
    Scheme.HOLEVO: cap_holevo,
}


def capacity(scheme, p: LinkParams) -> CapacityResult:
    return _CAPACITY[Scheme(scheme)](p)


def pie_asymptote(scheme, n_b: float) -> float:
    """Limit of PIE as ``n_a -> 0``, in bits per photon.

    Heterodyne and homodyne saturate at 1 and 2 nats respectively (divided by
    the noise factor); the Holevo limit ``log2(1 + 1/n_b)`` diverges at
    ``n_b = 0``, which raises :class:`DivergentLimitError`.
    """
    scheme = Scheme(scheme)
    if not n_b >= 0.0:
        raise DomainError(f"n_b must be non-negative, got {n_b}")
    if scheme is Scheme.HETERODYNE:
        return LOG2E / (1.0 + n_b)
    if scheme is Scheme.HOMODYNE:
        return 2.0 * LOG2E / (1.0 + 2.0 * n_b)
    if n_b == 0.0:
        raise DivergentLimitError("noiseless Holevo PIE is unbounded as n_a -> 0")
    return math.log1p(1.0 / n_b) * LOG2E


def capacity_sweep(scheme, n_a_grid: Iterable[float], n_b_list: Iterable[float]) -> list[dict]:
    """Tabulate capacity and PIE over ``n_b_list x n_a_grid`` (n_b outer)."""
    scheme = Scheme(scheme)
    n_a_grid = [float(v) for v in n_a_grid]
    n_b_list = [float(v) for v in n_b_list]
    if not n_a_grid or not n_b_list:
        raise ValueError("capacity_sweep needs a non-empty n_a grid and n_b list")
    if any(v <= 0.0 for v in n_a_grid):
        raise DomainError("n_a grid must be strictly positive")
    if any(b <= a for a, b in zip(n_a_grid, n_a_grid[1:])):
        raise DomainError("n_a grid must be strictly increasing")
    if any(v < 0.0 for v in n_b_list):
        raise DomainError("n_b values must be non-negative")
    rows = []
    for n_b in n_b_list:
        for n_a in n_a_grid:
            res = capacity(scheme, LinkParams(n_a, n_b))
            rows.append(
                {"scheme": scheme.value, "n_a": n_a, "n_b": n_b,
                 "bits_per_slot": res.bits_per_slot, "pie": res.pie}
            )
    return rows
