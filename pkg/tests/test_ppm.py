import itertools
import math

import mpmath
import numpy as np
import pytest

from photonstarved.capacity import pie_asymptote
from photonstarved.errors import DomainError
from photonstarved.photodetection import empty_slot_pmf, pulse_slot_pmf
from photonstarved.ppm import (
    binary_divergence, capped_divergence_pie, exact_mi_geiger, frame_information_lower_bound,
    mi_monte_carlo, mi_monte_carlo_pnr, optimize_order, ppm_pie_lower_bound, pulse_divergence,
    relative_entropy, verdu_optimum, verdu_pie_limit,
)
from photonstarved.rng import RandomStream

mpmath.mp.dps = 50

D_HALF_1E3 = 3.6548639250315921791


def brute_force_geiger(M, n_a, n_b):
    """I(X;B) by enumerating all 2^M click patterns."""
    E = M * n_a
    a = 1.0 - math.exp(-E / (1 + n_b)) / (1 + n_b)
    b = n_b / (1 + n_b)
    pats = np.array(list(itertools.product((0, 1), repeat=M)), dtype=float)
    clicks = pats.sum(axis=1)
    log_empty = clicks * math.log(b) + (M - clicks) * math.log1p(-b) if b > 0 else None
    # P(B | X = x) = P_empty(B) * lambda(B_x)
    log_lam = np.where(pats == 1, math.log(a) - math.log(b), math.log1p(-a) - math.log1p(-b))
    log_cond = log_empty[:, None] + log_lam
    log_marg = np.logaddexp.reduce(log_cond, axis=1) - math.log(M)
    cond = np.exp(log_cond)
    return float(np.sum(cond * (log_cond - log_marg[:, None])) / M / math.log(2))


class TestRelativeEntropy:
    def test_self_divergence(self):
        for p in (pulse_slot_pmf(1.0, 0.0), pulse_slot_pmf(0.3, 0.1), empty_slot_pmf(0.5)):
            d = relative_entropy(p, p)
            assert abs(d.bits) <= 1e-15 + d.error
            assert d.bits == pytest.approx(0.0, abs=1e-12)

    def test_frozen_value(self):
        d = relative_entropy(pulse_slot_pmf(0.5, 1e-3), empty_slot_pmf(1e-3))
        assert d.bits == pytest.approx(D_HALF_1E3, rel=1e-11)
        assert d.error < 1e-9

    @pytest.mark.parametrize("E,n_b", [(2.0, 0.05), (10.0, 1e-4)])
    def test_against_term_oracle(self, E, n_b):
        p = pulse_slot_pmf(E, n_b)
        ref = mpmath.mpf(0)
        for k in range(p.k_max + 40):
            En, nb = mpmath.mpf(E), mpmath.mpf(n_b)
            base = nb ** k / (1 + nb) ** (k + 1)
            p1 = base * mpmath.exp(-En / (1 + nb)) * mpmath.laguerre(k, 0, -En / (nb * (1 + nb)))
            if p1 > 0:
                ref += p1 * mpmath.log(p1 / base, 2)
        d = relative_entropy(p, empty_slot_pmf(n_b))
        assert abs(d.bits - float(ref)) <= max(d.error, 1e-11)

    def test_support_violation(self):
        assert relative_entropy(pulse_slot_pmf(1.0, 0.0), empty_slot_pmf(0.0)).bits == math.inf

    def test_binary(self):
        assert binary_divergence(0.3, 0.3) == 0.0
        assert binary_divergence(0.5, 0.0) == math.inf
        assert binary_divergence(1.0, 0.5) == pytest.approx(1.0)

    def test_geiger_noiseless_is_binary(self):
        E = 0.7
        assert pulse_divergence(E, 0.0, "geiger") == binary_divergence(-math.expm1(-E), 0.0) == math.inf
        nb = 1e-3
        expect = binary_divergence(1 - math.exp(-E / (1 + nb)) / (1 + nb), nb / (1 + nb))
        assert pulse_divergence(E, nb, "geiger") == pytest.approx(expect, rel=1e-12)


class TestExactGeiger:
    @pytest.mark.parametrize("M", [2, 3, 4, 7, 8, 12, 16])
    @pytest.mark.parametrize("n_a,n_b", [(0.1, 1e-2), (1e-3, 1e-3), (0.5, 0.2), (2.0, 1e-5)])
    def test_brute_force(self, M, n_a, n_b):
        assert exact_mi_geiger(M, n_a, n_b) == pytest.approx(brute_force_geiger(M, n_a, n_b), abs=1e-12)

    def test_examples(self):
        assert exact_mi_geiger(8, 0.0, 0.1) == 0.0
        assert exact_mi_geiger(16, 50.0, 0.0) == pytest.approx(4.0, abs=1e-12)
        assert exact_mi_geiger(16, 0.1, 0.0) == pytest.approx((1 - math.exp(-1.6)) * 4.0, rel=1e-14)

    def test_large_order_truncation(self):
        M, n_a, n_b = 1 << 14, 1e-4, 1e-5
        v = exact_mi_geiger(M, n_a, n_b)
        assert 0.0 < v <= math.log2(M)
        # M - 1 binomial terms versus the truncated range: neighbouring orders bracket smoothly
        assert exact_mi_geiger(4096, n_a * 4, n_b) < v

    def test_domain(self):
        with pytest.raises(DomainError):
            exact_mi_geiger(1, 0.1, 0.1)


class TestLowerBound:
    @pytest.mark.parametrize("M", [2, 4, 8, 16])
    @pytest.mark.parametrize("n_a,n_b", [(1e-3, 1e-3), (0.05, 1e-2), (0.5, 1e-4), (0.2, 0.5), (1.0, 0.0)])
    def test_below_exact_geiger(self, M, n_a, n_b):
        lb = ppm_pie_lower_bound(M, n_a, n_b, "geiger") * M * n_a
        assert lb <= exact_mi_geiger(M, n_a, n_b) + 1e-12

    @pytest.mark.parametrize("M,n_a,n_b", [(4, 0.1, 1e-2), (16, 0.05, 1e-3), (64, 0.02, 1e-3)])
    def test_below_pnr_monte_carlo(self, M, n_a, n_b):
        est = mi_monte_carlo(M, n_a, n_b, 200_000, RandomStream(7), "pnr")
        lb = frame_information_lower_bound(M, n_a, n_b, "pnr")
        assert lb <= est.bits + 3 * est.stderr

    @pytest.mark.parametrize("n_b", [1e-3, 0.5])
    def test_approaches_divergence_for_large_order(self, n_b):
        # the correction vanishes once M dwarfs the typical likelihood ratio
        E = 2.0
        d = pulse_divergence(E, n_b)
        gaps = [d - frame_information_lower_bound(2**m, E / 2**m, n_b) for m in (6, 12, 18, 30, 50, 80)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert -1e-12 < gaps[-1] < 1e-3

    def test_noiseless_geiger_closed_form(self):
        M, n_a = 8, 0.1
        E = M * n_a
        q = math.exp(-E)
        expect = (1 - q) * 3.0 + q * math.log2(M * q / (q + M - 1))
        assert frame_information_lower_bound(M, n_a, 0.0, "geiger") == pytest.approx(expect, rel=1e-13)

    def test_capped_heuristic_overshoots(self):
        # with the cap active the heuristic claims log2 M bits from a noisy frame
        M, n_a, n_b = 16, 0.5, 1e-3
        assert pulse_divergence(M * n_a, n_b) >= math.log2(M)
        assert capped_divergence_pie(M, n_a, n_b) == pytest.approx(math.log2(M) / (M * n_a))
        assert capped_divergence_pie(M, n_a, n_b, "geiger") * M * n_a > exact_mi_geiger(M, n_a, n_b)

    def test_non_negative_and_domain(self):
        assert ppm_pie_lower_bound(2, 1e-6, 1e-2, "geiger") >= 0.0
        with pytest.raises(DomainError):
            ppm_pie_lower_bound(4, 0.0, 0.1)
        with pytest.raises(DomainError):
            frame_information_lower_bound(1, 0.1, 0.1)


class TestMonteCarlo:
    def test_zero_signal(self):
        assert mi_monte_carlo_pnr(8, 0.0, 0.1, 1000, RandomStream(1)) == (0.0, 0.0)

    def test_noiseless_limit(self):
        est = mi_monte_carlo_pnr(8, 5.0, 0.0, 10_000, RandomStream(2))
        assert abs(est.bits - 3.0) <= 3 * est.stderr + 1e-12

    def test_geiger_collapse_matches_exact(self):
        est = mi_monte_carlo_pnr(4, 0.1, 1e-2, 200_000, RandomStream(3), geiger_collapse=True)
        assert abs(est.bits - exact_mi_geiger(4, 0.1, 1e-2)) <= 3 * est.stderr

    @pytest.mark.parametrize("M,n_a,n_b", [(4, 0.1, 1e-2), (8, 0.05, 1e-3), (32, 0.02, 0.05)])
    def test_data_processing(self, M, n_a, n_b):
        est = mi_monte_carlo(M, n_a, n_b, 200_000, RandomStream(4), "pnr")
        assert exact_mi_geiger(M, n_a, n_b) <= est.bits + 3 * est.stderr
        assert 0.0 <= est.bits <= math.log2(M)

    def test_worker_independence(self):
        a = mi_monte_carlo(16, 0.05, 1e-2, 50_000, RandomStream(5), "pnr", workers=1)
        b = mi_monte_carlo(16, 0.05, 1e-2, 50_000, RandomStream(5), "pnr", workers=4)
        assert a == b

    def test_seed_matters(self):
        a = mi_monte_carlo(16, 0.05, 1e-2, 5_000, RandomStream(5))
        b = mi_monte_carlo(16, 0.05, 1e-2, 5_000, RandomStream(6))
        assert a != b

    def test_domain(self):
        with pytest.raises(DomainError):
            mi_monte_carlo(4, 0.1, 0.1, 999, RandomStream(0))


class TestOptimizeOrder:
    def test_single_candidate(self):
        d = optimize_order(1e-3, 1e-3, "pnr", [64])
        assert d.M == 64
        assert d.pie_lower_bound == pytest.approx(ppm_pie_lower_bound(64, 1e-3, 1e-3))
        assert d.pulse_energy == 64 * 1e-3

    def test_noise_favours_brighter_pulses(self):
        noisy = optimize_order(1e-3, 1e-2, "pnr")
        quiet = optimize_order(1e-3, 1e-5, "pnr")
        assert noisy.M > quiet.M

    def test_noiseless_order_grows(self):
        orders = [optimize_order(n_a, 0.0, "pnr").M for n_a in (1e-1, 1e-2, 1e-3, 1e-4)]
        assert all(b > a for a, b in zip(orders, orders[1:]))

    def test_tie_breaks_to_smaller(self):
        # energy cap excludes everything, leaving only the smallest order
        assert optimize_order(10.0, 0.5, "geiger", [256, 128], energy_cap=100.0).M == 128
        # a vanishing signal scores zero for every order
        d = optimize_order(1e-300, 0.5, "pnr", [8, 4, 16])
        assert d.pie_lower_bound == 0.0
        assert d.M == 4

    def test_tiny_signal_is_accurate(self):
        # small-n_a PIE is linear in n_a; check the slope is resolved at 1e-12
        for det in ("pnr", "geiger"):
            a = ppm_pie_lower_bound(8, 1e-12, 0.5, det)
            b = ppm_pie_lower_bound(8, 1e-10, 0.5, det)
            assert b / a == pytest.approx(100.0, rel=1e-3)

    def test_mi_attached(self):
        d = optimize_order(0.05, 1e-2, "geiger", [2, 4, 8, 16], mi_frames=1)
        assert d.mi == pytest.approx(exact_mi_geiger(d.M, 0.05, 1e-2))
        assert d.mi <= math.log2(d.M) + 1e-9
        assert d.pie_lower_bound * d.pulse_energy <= d.mi + 1e-12

    @pytest.mark.parametrize("detector", ["pnr", "geiger"])
    def test_holevo_dominance(self, detector):
        for n_b in (1e-5, 1e-3, 1e-1):
            cap = pie_asymptote("holevo", n_b)
            for n_a in (1e-6, 1e-4, 1e-2, 1e-1):
                assert optimize_order(n_a, n_b, detector).pie_lower_bound <= cap + 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            optimize_order(1e-3, 1e-3, "pnr", [1, 2])


class TestVerdu:
    @pytest.mark.parametrize("n_b", [1e-3, 1e-2])
    def test_pnr_reaches_holevo(self, n_b):
        assert verdu_pie_limit(n_b) == pytest.approx(math.log2(1 + 1 / n_b), rel=1e-2)

    def test_examples(self):
        assert verdu_pie_limit(1e-2) == pytest.approx(6.6582, rel=1e-2)
        assert verdu_pie_limit(1e-3, "geiger") < 9.96723

    def test_geiger_interior_optimum(self):
        value, e_star = verdu_optimum(1e-3, "geiger")
        assert 0.0 < e_star < 1e3
        for e in (e_star * 0.8, e_star * 1.25):
            assert pulse_divergence(e, 1e-3, "geiger") / e <= value + 1e-9

    def test_domain(self):
        with pytest.raises(DomainError):
            verdu_pie_limit(0.0)
