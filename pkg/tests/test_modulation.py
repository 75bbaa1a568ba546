import json
import math

import numpy as np
import pytest

from photonstarved import kernels
from photonstarved.errors import DomainError, UnsupportedOrderError
from photonstarved.modulation import (
    Format, _words, encode_symbol, format_equivalence_check, hadamard_matrix, is_power_of_two,
    simulate_link, structured_receive,
)
from photonstarved.ppm import _count_tables, exact_mi_geiger
from photonstarved.rng import RandomStream


class TestHadamard:
    def test_small_orders(self):
        assert hadamard_matrix(1).rows.tolist() == [[1]]
        assert hadamard_matrix(2).rows.tolist() == [[1, 1], [1, -1]]

    @pytest.mark.parametrize("M", [8, 64, 256])
    def test_exact_orthogonality(self, M):
        h = hadamard_matrix(M).rows
        assert h.dtype.kind == "i"
        assert np.array_equal(h @ h.T, M * np.eye(M, dtype=h.dtype))
        assert set(np.unique(h)) == {-1, 1}

    @pytest.mark.parametrize("M", [0, 3, 6, 12, 1000])
    def test_unsupported(self, M):
        with pytest.raises(UnsupportedOrderError):
            hadamard_matrix(M)
        assert not is_power_of_two(M)


class TestEncode:
    def test_examples(self):
        np.testing.assert_allclose(encode_symbol("ppm", 0, 4, 0.25).amplitudes, [1, 0, 0, 0])
        np.testing.assert_allclose(encode_symbol("hadamard", 1, 2, 0.5).amplitudes, [math.sqrt(0.5), -math.sqrt(0.5)])

    @pytest.mark.parametrize("fmt", list(Format))
    @pytest.mark.parametrize("M,n_a", [(2, 0.5), (16, 1e-3), (128, 0.07)])
    def test_energy(self, fmt, M, n_a):
        for r in (0, M // 2, M - 1):
            w = encode_symbol(fmt, r, M, n_a)
            assert w.energy == pytest.approx(M * n_a, rel=1e-12)
            mags = np.abs(w.amplitudes)
            if fmt is Format.HADAMARD:
                np.testing.assert_allclose(mags, math.sqrt(n_a), rtol=1e-15)
            else:
                assert np.count_nonzero(mags) == 1 and mags[r] > 0

    def test_errors(self):
        with pytest.raises(DomainError):
            encode_symbol("ppm", 4, 4, 0.1)
        with pytest.raises(DomainError):
            encode_symbol("fsk", -1, 4, 0.1)
        with pytest.raises(UnsupportedOrderError):
            encode_symbol("hadamard", 0, 6, 0.1)
        with pytest.raises(ValueError):
            encode_symbol("ook", 0, 4, 0.1)


class TestStructuredReceiver:
    def test_example(self):
        out = structured_receive(encode_symbol("hadamard", 2, 4, 0.25))
        np.testing.assert_allclose(out, [0, 0, 1, 0], atol=1e-12)

    def test_zero(self):
        assert np.all(structured_receive(np.zeros(16)) == 0)

    @pytest.mark.parametrize("M", [2**m for m in range(1, 11)])
    def test_conversion_and_unitarity(self, M):
        n_a = 0.3
        scale = math.sqrt(M * n_a)
        for r in {0, 1, M // 3, M - 1}:
            out = structured_receive(encode_symbol("hadamard", r, M, n_a))
            off = np.delete(np.abs(out), r)
            assert off.max(initial=0.0) < 1e-12 * scale
            assert abs(out[r] - scale) < 1e-12 * scale
        rng = np.random.default_rng(M)
        v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        assert np.linalg.norm(structured_receive(v)) == pytest.approx(np.linalg.norm(v), rel=1e-12)

    def test_matches_matrix(self):
        M = 32
        v = np.random.default_rng(0).standard_normal((3, M)).astype(complex)
        np.testing.assert_allclose(structured_receive(v), v @ hadamard_matrix(M).rows.T / math.sqrt(M), atol=1e-13)

    def test_noiseless_hadamard_equals_ppm(self):
        M, n_a = 16, 0.2
        symbols = np.arange(M)
        had = structured_receive(_words(Format.HADAMARD, symbols, M, n_a))
        ppm = _words(Format.PPM, symbols, M, n_a)
        assert np.max(np.abs(had - ppm)) < 1e-12

    def test_noise_stays_white(self):
        M, n_b, draws = 8, 0.1, 100_000
        g = RandomStream(9).generator()
        z = math.sqrt(n_b / 2) * (g.standard_normal((draws, M)) + 1j * g.standard_normal((draws, M)))
        out = structured_receive(z)
        cov = out.T @ out.conj() / draws
        pseudo = out.T @ out / draws
        # each entry of the sample covariance has standard deviation about n_b / sqrt(draws)
        tol = 5 * n_b / math.sqrt(draws)
        assert np.max(np.abs(cov - n_b * np.eye(M))) < tol
        assert np.max(np.abs(pseudo)) < tol

    def test_bad_length(self):
        with pytest.raises(UnsupportedOrderError):
            structured_receive(np.ones(6))


class TestSimulation:
    @pytest.mark.parametrize("fmt", list(Format))
    def test_noiseless_bright(self, fmt):
        r = simulate_link(fmt, 8, 2.5, 0.0, "pnr", 10_000, RandomStream(1))
        assert r.fer < 1e-3
        assert r.mi == pytest.approx(3.0, abs=1e-3)

    @pytest.mark.parametrize("fmt", list(Format))
    def test_guessing(self, fmt):
        M = 8
        r = simulate_link(fmt, M, 0.0, 0.05, "pnr", 20_000, RandomStream(2))
        assert r.fer_low <= (M - 1) / M <= r.fer_high
        assert abs(r.mi) < 1e-12

    def test_geiger_mi_matches_exact(self):
        r = simulate_link("ppm", 4, 0.1, 1e-2, "geiger", 200_000, RandomStream(3))
        assert abs(r.mi - exact_mi_geiger(4, 0.1, 1e-2)) <= 3 * r.mi_stderr

    def test_report_invariants(self):
        r = simulate_link("hadamard", 16, 0.05, 1e-2, "pnr", 5_000, RandomStream(4))
        assert 0.0 <= r.fer_low <= r.fer <= r.fer_high <= 1.0
        assert r.mi <= math.log2(16) + 3 * r.mi_stderr
        assert (r.format, r.M, r.n_a, r.n_b, r.seed, r.frames) == ("hadamard", 16, 0.05, 1e-2, 4, 5_000)
        assert list(json.loads(r.to_json())) == list(r.to_dict())

    def test_permutation_symmetry(self):
        # the posterior, and the error rate on frames without a tied maximum,
        # do not depend on which symbol was sent
        M, frames, n_a, n_b = 4, 100_000, 0.3, 0.1
        lp1, lp0 = _count_tables(M * n_a, n_b, 200, False)
        info, untied_err = [], []
        for r in range(M):
            gen = RandomStream(5).child(f"perm-{r}").generator()
            noise = gen.standard_normal((frames, M, 2))
            field = _words(Format.PPM, np.full(frames, r), M, n_a) + math.sqrt(n_b / 2) * (
                noise[..., 0] + 1j * noise[..., 1])
            counts = np.ascontiguousarray(gen.poisson(np.abs(field) ** 2), dtype=np.int64)
            post, dec = kernels.frame_scores(counts, np.full(frames, r, dtype=np.int64), lp1, lp0)
            top = counts.max(axis=1)
            untied = (counts == top[:, None]).sum(axis=1) == 1
            info.append((post.mean(), post.std() / math.sqrt(frames)))
            untied_err.append((np.mean(dec[untied] != r), untied.sum()))
        for (a, sa), (b, sb) in zip(info, info[1:]):
            assert abs(a - b) < 4 * math.hypot(sa, sb)
        for (a, na), (b, nb) in zip(untied_err, untied_err[1:]):
            s = math.sqrt(a * (1 - a) / na + b * (1 - b) / nb)
            assert abs(a - b) < 4 * s

    def test_ties_resolve_to_lowest_index(self):
        lp1, lp0 = _count_tables(1.0, 0.1, 5, False)
        counts = np.array([[0, 0, 0, 0], [0, 2, 0, 2], [1, 0, 3, 3]], dtype=np.int64)
        _, dec = kernels.frame_scores(counts, np.zeros(3, dtype=np.int64), lp1, lp0)
        assert dec.tolist() == [0, 1, 2]

    def test_determinism_and_workers(self):
        a = simulate_link("hadamard", 8, 0.05, 1e-3, "pnr", 4_000, RandomStream(6), workers=1)
        b = simulate_link("hadamard", 8, 0.05, 1e-3, "pnr", 4_000, RandomStream(6), workers=3)
        assert a == b
        assert a.to_json() == b.to_json()

    def test_config_errors(self):
        with pytest.raises(UnsupportedOrderError):
            simulate_link("hadamard", 12, 0.1, 0.1, "pnr", 1000, 0)
        with pytest.raises(DomainError):
            simulate_link("ppm", 8, 0.1, 0.1, "pnr", 99, 0)
        with pytest.raises(DomainError):
            simulate_link("ppm", 1, 0.1, 0.1, "pnr", 1000, 0)


class TestEquivalence:
    def test_ppm_and_fsk_identical(self):
        rep = format_equivalence_check(8, 0.05, 1e-3, "pnr", 20_000, seed=7)
        a, b = rep.reports["ppm"].to_dict(), rep.reports["fsk"].to_dict()
        a.pop("format"), b.pop("format")
        assert a == b

    def test_three_formats_agree(self):
        rep = format_equivalence_check(8, 0.05, 1e-3, "pnr", 100_000, seed=8)
        assert rep.passed
        assert all(z <= 3.0 for z in rep.mi_z.values())
        assert set(rep.mi_z) == {"ppm-fsk", "ppm-hadamard", "fsk-hadamard"}

    def test_requires_power_of_two(self):
        with pytest.raises(UnsupportedOrderError):
            format_equivalence_check(6, 0.05, 1e-3, "pnr", 1000, seed=1)
