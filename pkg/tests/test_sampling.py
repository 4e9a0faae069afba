import math

import numpy as np
import pytest

from dpmedreg import (
    NoiseVector,
    RngStream,
    gamma_tail_bound,
    sample_l1_perturbation,
    sample_laplace,
)


def test_stream_replay_is_bit_identical():
    a = RngStream(123, stream=4).laplaces(1.0, 1000)
    b = RngStream(123, stream=4).laplaces(1.0, 1000)
    assert np.array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(123, stream=0).uniform_open(100)
    b = RngStream(123, stream=1).uniform_open(100)
    assert not np.array_equal(a, b)
    c = RngStream(123).derive(7).uniform_open(100)
    d = RngStream(123).derive(8).uniform_open(100)
    assert not np.array_equal(c, d)
    assert np.array_equal(c, RngStream(123).derive(7).uniform_open(100))


def test_uniform_open_strictly_interior():
    u = RngStream(0).uniform_open(100_000)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_noise_vector_validation():
    with pytest.raises(ValueError):
        NoiseVector(values=np.array([1.0]), scale=0.0, kind="laplace_iid")
    with pytest.raises(ValueError):
        NoiseVector(values=np.array([1.0]), scale=1.0, kind="gaussian")
    with pytest.raises(ValueError):
        NoiseVector(values=np.zeros(0), scale=1.0, kind="laplace_iid")


def test_sample_laplace_validation():
    with pytest.raises(ValueError):
        sample_laplace(0.0, 5, RngStream(0))
    with pytest.raises(ValueError):
        sample_laplace(1.0, 0, RngStream(0))


def test_laplace_median_of_absolute_values():
    # P(|x| <= c ln 2) is exactly 1/2
    c = 0.7
    draws = np.asarray(sample_laplace(c, 1_000_000, RngStream(1)).values)
    frac = float(np.mean(np.abs(draws) <= c * math.log(2)))
    assert abs(frac - 0.5) < 0.01


def test_laplace_variance():
    draws = np.asarray(sample_laplace(1.0, 1_000_000, RngStream(2)).values)
    assert abs(float(np.var(draws)) - 2.0) < 0.02


def test_laplace_ks_distance():
    draws = np.sort(np.asarray(sample_laplace(1.0, 100_000, RngStream(3)).values))
    cdf = np.where(draws < 0, 0.5 * np.exp(draws), 1.0 - 0.5 * np.exp(-draws))
    n = draws.shape[0]
    hi = np.arange(1, n + 1) / n
    ks = float(np.max(np.maximum(np.abs(hi - cdf), np.abs(hi - 1.0 / n - cdf))))
    assert ks < 0.01


def test_l1_perturbation_norm_is_the_gamma_draw():
    # replay the stream: the norm is the sum of dim exponentials drawn first
    dim, eps = 4, 0.1
    vec = sample_l1_perturbation(dim, eps, RngStream(9, stream=2))
    replay = RngStream(9, stream=2)
    expected_norm = float(replay.exponentials(4.0 / eps, dim).sum())
    assert vec.l1_norm == pytest.approx(expected_norm, rel=1e-12)
    assert vec.scale == pytest.approx(4.0 / eps)


def test_l1_perturbation_gamma_mean():
    dim, eps = 4, 0.1
    norms = np.array(
        [sample_l1_perturbation(dim, eps, RngStream(5).derive(i)).l1_norm for i in range(100_000)]
    )
    expected = dim * 4.0 / eps  # 160
    assert abs(float(norms.mean()) - expected) / expected < 0.02


def test_l1_perturbation_sign_symmetry():
    rng = RngStream(6)
    vals = np.array([np.asarray(sample_l1_perturbation(2, 1.0, rng.derive(i)).values) for i in range(100_000)])
    for k in range(2):
        frac = float(np.mean(vals[:, k] > 0))
        assert abs(frac - 0.5) < 0.01


def test_l1_perturbation_direction_shares_are_symmetric_dirichlet():
    rng = RngStream(7)
    dim = 4
    shares = np.empty((100_000, dim))
    for i in range(100_000):
        v = np.abs(np.asarray(sample_l1_perturbation(dim, 0.5, rng.derive(i)).values))
        shares[i] = v / v.sum()
    means = shares.mean(axis=0)
    assert np.all(np.abs(means - 1.0 / dim) < 0.01 * (1.0 / dim))  # within 1% of 1/dim


def test_l1_perturbation_validation():
    with pytest.raises(ValueError):
        sample_l1_perturbation(4, 0.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_l1_perturbation(0, 1.0, RngStream(0))
    with pytest.raises(ValueError):
        sample_l1_perturbation(4, math.inf, RngStream(0))


def test_gamma_tail_bound_value():
    # 4 * (3+1) * ln(4/0.1) / 0.1, natural log
    assert gamma_tail_bound(3, 0.1, 0.1) == pytest.approx(590.2207126582298, abs=1e-3)


def test_gamma_tail_bound_monotone_and_limit():
    assert gamma_tail_bound(3, 0.2, 0.1) < gamma_tail_bound(3, 0.1, 0.1)
    assert gamma_tail_bound(3, 0.1, 0.2) < gamma_tail_bound(3, 0.1, 0.1)
    assert gamma_tail_bound(0, 1 - 1e-12, 1.0) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        gamma_tail_bound(3, 1.5, 0.1)
    with pytest.raises(ValueError):
        gamma_tail_bound(3, 0.1, 0.0)


def test_gamma_tail_bound_empirical_coverage():
    d, eps = 3, 0.1
    rng = RngStream(8)
    norms = np.array(
        [sample_l1_perturbation(d + 1, eps, rng.derive(i)).l1_norm for i in range(100_000)]
    )
    for alpha in (0.5, 0.1, 0.01):
        bound = gamma_tail_bound(d, alpha, eps)
        assert float(np.mean(norms <= bound)) >= 1.0 - alpha
