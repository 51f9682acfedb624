"""Distributional and plumbing tests for the stable noise generator."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from flmc.stable import StableNoise, sample_sas, sample_sas_vector


def test_parameter_validation():
    with pytest.raises(ValueError):
        StableNoise(0.0, 1.0)
    with pytest.raises(ValueError):
        StableNoise(2.5, 1.0)
    with pytest.raises(ValueError):
        StableNoise(1.5, 0.0)
    with pytest.raises(ValueError):
        StableNoise(1.5, -1.0)
    StableNoise(2.0, 1.0)
    StableNoise(0.3, 2.0)


def test_vector_shape_and_validation():
    rng = np.random.default_rng(0)
    out = sample_sas_vector(StableNoise(1.5), 7, rng)
    assert out.shape == (7,)
    with pytest.raises(ValueError):
        sample_sas_vector(StableNoise(1.5), 0, rng)


def test_scalar_matches_vector_stream():
    # a dim-1 vector draw consumes the stream exactly like the scalar draw
    noise = StableNoise(1.7, 2.0)
    a = sample_sas(noise, np.random.default_rng(42))
    b = sample_sas_vector(noise, 1, np.random.default_rng(42))[0]
    assert a == b


def test_determinism():
    noise = StableNoise(1.3, 1.0)
    x = sample_sas_vector(noise, 100, np.random.default_rng(7))
    y = sample_sas_vector(noise, 100, np.random.default_rng(7))
    assert np.array_equal(x, y)


def test_gaussian_case_law():
    # alpha=2 with scale sigma is N(0, 2*sigma^2)
    rng = np.random.default_rng(11)
    x = sample_sas_vector(StableNoise(2.0, 1.5), 10**5, rng)
    p = stats.kstest(x, "norm", args=(0.0, 1.5 * math.sqrt(2.0))).pvalue
    assert p > 0.01


def test_cauchy_case_law():
    # alpha=1 reduces to the Cauchy distribution with the matching scale
    rng = np.random.default_rng(12)
    x = sample_sas_vector(StableNoise(1.0, 1.0), 10**5, rng)
    p = stats.kstest(x, "cauchy").pvalue
    assert p > 0.01


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.9])
def test_sum_stability(alpha):
    # X1 + X2 has the same law as 2^(1/alpha) * X
    rng = np.random.default_rng(13)
    n = 10**5
    noise = StableNoise(alpha, 1.0)
    a = sample_sas_vector(noise, n, rng)
    b = sample_sas_vector(noise, n, rng)
    c = sample_sas_vector(noise, n, rng)
    p = stats.ks_2samp(a + b, 2.0 ** (1.0 / alpha) * c).pvalue
    assert p > 0.01


def test_scale_equivariance():
    # sigma enters as a pure scale factor of the same draw
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    x1 = sample_sas_vector(StableNoise(1.6, 1.0), 1000, rng1)
    x3 = sample_sas_vector(StableNoise(1.6, 3.0), 1000, rng2)
    assert np.allclose(3.0 * x1, x3, rtol=1e-12, atol=0.0)


def test_symmetry():
    rng = np.random.default_rng(21)
    x = sample_sas_vector(StableNoise(1.4, 1.0), 10**5, rng)
    p = stats.ks_2samp(x, -x).pvalue
    assert p > 0.01


def test_heavy_tail_frequency():
    # for alpha < 2, P(|X| > t) ~ const * t^(-alpha); Gaussian tails vanish
    rng = np.random.default_rng(31)
    n = 10**5
    x15 = sample_sas_vector(StableNoise(1.5, 1.0), n, rng)
    x20 = sample_sas_vector(StableNoise(2.0, 1.0), n, rng)
    assert np.mean(np.abs(x15) > 10.0) > 50.0 / n
    assert np.mean(np.abs(x20) > 10.0) == 0.0


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.5, 2.0), sigma=st.floats(0.1, 5.0),
       seed=st.integers(0, 2**32 - 1))
def test_draws_always_finite(alpha, sigma, seed):
    rng = np.random.default_rng(seed)
    x = sample_sas_vector(StableNoise(alpha, sigma), 256, rng)
    assert np.all(np.isfinite(x))
