"""Pure-Python/NumPy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one for one and are used whenever the compiled
extension is unavailable (or ``PHOTONSTARVED_PURE_PYTHON=1`` is set).
"""
import math

import numpy as np

_BIG = 1e250
_SMALL = 1e-250


def displaced_thermal_logpmf(pulse_energy, n_b, k_max):
    """Natural-log photocount pmf of a displaced thermal state, k = 0..k_max.

    The three-term Laguerre recurrence is run directly on the probability
    terms (the geometric prefactor folded in), with periodic rescaling so
    that neither overflow nor underflow occurs for large pulse energies.
    """
    k_max = int(k_max)
    out = np.empty(k_max + 1)
    if n_b == 0.0:
        if pulse_energy == 0.0:
            out[:] = -np.inf
            out[0] = 0.0
            return out
        log_e = math.log(pulse_energy)
        for k in range(k_max + 1):
            out[k] = k * log_e - pulse_energy - math.lgamma(k + 1.0)
        return out

    r = n_b / (1.0 + n_b)
    c = pulse_energy / ((1.0 + n_b) * (1.0 + n_b))
    r2 = r * r
    shift = -pulse_energy / (1.0 + n_b) - math.log1p(n_b)
    s_prev = 0.0
    s_cur = 1.0
    out[0] = shift
    for k in range(k_max):
        s_next = ((r * (2 * k + 1) + c) * s_cur - r2 * k * s_prev) / (k + 1)
        s_prev = s_cur
        s_cur = s_next
        if s_cur > _BIG or s_cur < _SMALL:
            shift += math.log(s_cur)
            s_prev /= s_cur
            s_cur = 1.0
        out[k + 1] = shift + math.log(s_cur)
    return out


def fwht_rows(x):
    """In-place unnormalized Walsh-Hadamard transform (Sylvester order) of each row."""
    n_rows, m = x.shape
    h = 1
    while h < m:
        v = x.reshape(n_rows, m // (2 * h), 2, h)
        a = v[:, :, 0, :].copy()
        b = v[:, :, 1, :]
        v[:, :, 0, :] += b
        b *= -1.0
        b += a
        h *= 2
    return x


def frame_scores(counts, truth, log_p1, log_p0):
    """Per-frame log2 posterior of the true slot and the ML decision.

    Returns ``(log2_post, decision)`` where ``log2_post[f]`` is the base-2 log
    of the posterior probability assigned to the transmitted slot and
    ``decision[f]`` the lowest-index maximizer of the posterior.
    """
    lp1 = log_p1[counts]
    lp0 = log_p0[counts]
    impossible = np.isneginf(lp0)
    n_inf = impossible.sum(axis=1)
    if np.any(n_inf > 1):
        raise FloatingPointError("degenerate likelihoods: outcome impossible under every hypothesis")
    with np.errstate(invalid="ignore"):
        scores = lp1 - lp0
    rows = n_inf == 1
    if np.any(rows):
        scores[rows] = np.where(impossible[rows], 0.0, -np.inf)
        if np.any(np.isneginf(lp1[rows][impossible[rows]])):
            raise FloatingPointError("degenerate likelihoods: outcome impossible under every hypothesis")
    peak = scores.max(axis=1)
    if np.any(np.isneginf(peak)):
        raise FloatingPointError("degenerate likelihoods: all likelihood ratios vanish")
    decision = scores.argmax(axis=1)
    lse = peak + np.log(np.exp(scores - peak[:, None]).sum(axis=1))
    true_score = scores[np.arange(scores.shape[0]), truth]
    log2_post = (true_score - lse) / math.log(2.0)
    return log2_post, decision.astype(np.int64)
