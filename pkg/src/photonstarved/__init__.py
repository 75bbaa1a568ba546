"""Capacity limits and photon-efficient modulation for photon-starved optical links."""
from .capacity import (
    CapacityResult,
    LinkParams,
    Scheme,
    cap_heterodyne,
    cap_holevo,
    cap_homodyne,
    capacity_sweep,
    holevo_g,
    pie_asymptote,
)
from .kernels import BACKEND
from .modes import (
    TimeGrid,
    hermite_mode,
    matched_filter_response,
    power_transfer,
    sample_noise_field,
    tradeoff_curve,
    transfer_profile,
)
from .modulation import (
    Format,
    encode_symbol,
    format_equivalence_check,
    hadamard_matrix,
    simulate_link,
    structured_receive,
)
from .photodetection import (
    DetectorKind,
    PhotocountPmf,
    empty_slot_pmf,
    geigerize,
    log_likelihood_ratio,
    pulse_slot_pmf,
    sample_photocount,
)
from .ppm import (
    PpmDesign,
    exact_mi_geiger,
    mi_monte_carlo_pnr,
    optimize_order,
    ppm_pie_lower_bound,
    relative_entropy,
    verdu_pie_limit,
)
from .rng import RandomStream

__version__ = "0.1.0"

__all__ = [
    "CapacityResult",
    "LinkParams",
    "Scheme",
    "cap_heterodyne",
    "cap_holevo",
    "cap_homodyne",
    "capacity_sweep",
    "holevo_g",
    "pie_asymptote",
    "TimeGrid",
    "hermite_mode",
    "matched_filter_response",
    "power_transfer",
    "sample_noise_field",
    "tradeoff_curve",
    "transfer_profile",
    "Format",
    "encode_symbol",
    "format_equivalence_check",
    "hadamard_matrix",
    "simulate_link",
    "structured_receive",
    "DetectorKind",
    "PhotocountPmf",
    "empty_slot_pmf",
    "geigerize",
    "log_likelihood_ratio",
    "pulse_slot_pmf",
    "sample_photocount",
    "PpmDesign",
    "exact_mi_geiger",
    "mi_monte_carlo_pnr",
    "optimize_order",
    "ppm_pie_lower_bound",
    "relative_entropy",
    "verdu_pie_limit",
    "BACKEND",
    "RandomStream",
]
