import math

import numpy as np
import pytest
from scipy import stats

from photonstarved import _pykernels
from photonstarved.modulation import hadamard_matrix


@pytest.mark.parametrize("energy,n_b", [(0.0, 0.0), (0.0, 0.3), (1.0, 0.0), (0.5, 1e-2), (800.0, 1e-3), (50.0, 2.0)])
def test_logpmf_matches_fallback(backend, energy, n_b):
    k_max = int(energy + 20 * math.sqrt(energy + 1) + 60)
    a = backend.displaced_thermal_logpmf(energy, n_b, k_max)
    b = _pykernels.displaced_thermal_logpmf(energy, n_b, k_max)
    finite = np.isfinite(b)
    assert np.array_equal(finite, np.isfinite(a))
    np.testing.assert_allclose(a[finite], b[finite], rtol=1e-13, atol=1e-12)


def test_logpmf_poisson_branch(backend):
    k = np.arange(30)
    np.testing.assert_allclose(backend.displaced_thermal_logpmf(3.0, 0.0, 29), stats.poisson.logpmf(k, 3.0), rtol=1e-13)


def test_logpmf_rescaling_survives_huge_energy(backend):
    # p(0) = exp(-3000) underflows; the rescaled recurrence must still normalize
    lp = backend.displaced_thermal_logpmf(3000.0, 1e-4, 4000)
    assert np.all(np.isfinite(lp))
    assert math.fsum(np.exp(lp)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("m", [1, 2, 8, 64])
def test_fwht_matches_hadamard_product(backend, m):
    rng = np.random.default_rng(m)
    x = rng.standard_normal((5, m)) + 1j * rng.standard_normal((5, m))
    expected = x @ hadamard_matrix(m).rows.T
    got = backend.fwht_rows(np.ascontiguousarray(x.copy()))
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_frame_scores_agree(backend):
    rng = np.random.default_rng(4)
    counts = rng.poisson(0.3, size=(200, 8)).astype(np.int64)
    truth = rng.integers(0, 8, size=200).astype(np.int64)
    lp1 = _pykernels.displaced_thermal_logpmf(2.0, 0.1, counts.max())
    lp0 = _pykernels.displaced_thermal_logpmf(0.0, 0.1, counts.max())
    a_post, a_dec = backend.frame_scores(counts, truth, lp1, lp0)
    b_post, b_dec = _pykernels.frame_scores(counts, truth, lp1, lp0)
    np.testing.assert_allclose(a_post, b_post, rtol=1e-12, atol=1e-12)
    assert np.array_equal(a_dec, b_dec)


def test_frame_scores_noiseless_click_is_certain(backend):
    lp1 = _pykernels.displaced_thermal_logpmf(2.0, 0.0, 5)
    lp0 = _pykernels.displaced_thermal_logpmf(0.0, 0.0, 5)
    counts = np.array([[0, 0, 3, 0], [0, 0, 0, 0]], dtype=np.int64)
    post, dec = backend.frame_scores(counts, np.array([2, 1], dtype=np.int64), lp1, lp0)
    assert post[0] == 0.0
    assert post[1] == pytest.approx(-2.0)
    assert list(dec) == [2, 0]


def test_frame_scores_degenerate_raises(backend):
    lp1 = _pykernels.displaced_thermal_logpmf(2.0, 0.0, 5)
    lp0 = _pykernels.displaced_thermal_logpmf(0.0, 0.0, 5)
    with pytest.raises(FloatingPointError):
        backend.frame_scores(np.array([[1, 1]], dtype=np.int64), np.array([0], dtype=np.int64), lp1, lp0)
