import math

import numpy as np
import pytest

from dpmedreg import (
    Dataset,
    IrlsConfig,
    RngStream,
    SingularSystemError,
    SmoothingConfig,
    default_coefficient_bound,
    fit_irls_private,
    fit_smoothed_baseline,
    irls_accuracy_bound,
    irls_fit,
    irls_sensitivity,
    irls_sensitivity_probe,
    perturbed_objective_le,
    residuals,
    weighted_ridge_solve,
)

from conftest import benchmark_instance, bounded_instance


def test_weighted_solve_intercept_only_sample():
    data = Dataset(X=np.zeros((1, 1)), Y=np.array([3.0]), B=3.0)
    theta = weighted_ridge_solve(data, np.ones(1), lam=0.5)
    assert theta.mu == pytest.approx(3.0)
    assert theta.beta[0] == pytest.approx(0.0)


def test_weighted_solve_equals_ols(rng):
    # unit weights, lam = 0, full-rank X: ordinary least squares
    X = rng.uniforms(-0.5, 0.5, 10).reshape(5, 2)
    Y = rng.uniforms(-1, 1, 5)
    data = Dataset(X=X, Y=Y, B=2.0)
    theta = weighted_ridge_solve(data, np.ones(5), lam=0.0)
    Xt = np.column_stack([np.ones(5), X])
    expected, *_ = np.linalg.lstsq(Xt, Y, rcond=None)
    assert np.allclose(theta.as_vector(), expected, atol=1e-10)


def test_weighted_solve_stationarity_identity(rng):
    data, _ = bounded_instance(rng, n=50, d=3)
    w = 0.5 + rng.uniform_open(50)
    theta = weighted_ridge_solve(data, w, lam=0.05)
    expected_mu = -float(np.sum(w * (data.X @ theta.beta - data.Y))) / float(np.sum(w))
    assert theta.mu == pytest.approx(expected_mu, abs=1e-10)


def test_weighted_solve_singular_raises():
    data = Dataset(X=np.zeros((3, 1)), Y=np.array([1.0, 2.0, 3.0]), B=3.0)
    with pytest.raises(SingularSystemError):
        weighted_ridge_solve(data, np.ones(3), lam=0.0)


def test_weighted_solve_weight_validation(rng):
    data, _ = bounded_instance(rng, n=5, d=1)
    with pytest.raises(ValueError):
        weighted_ridge_solve(data, np.array([1.0, 1.0, 0.0, 1.0, 1.0]), lam=0.1)
    with pytest.raises(ValueError):
        weighted_ridge_solve(data, np.ones(4), lam=0.1)


def test_irls_intercept_only_fixed_point():
    # a vanishing ridge pins beta at zero, leaving the pure intercept recursion
    data = Dataset(X=np.zeros((3, 1)), Y=np.array([1.0, 2.0, 9.0]), B=9.0)
    e = 0.05
    cfg = IrlsConfig(lam=1e-12, e=e, tau=1e-12, max_iters=500, v=1.0)
    trace = irls_fit(data, cfg)
    assert trace.converged
    mu = trace.final.mu
    assert abs(trace.final.beta[0]) < 1e-9
    # fixed point solves sum_i r_i / (|r_i| + e) = 0
    r = mu - data.Y
    assert float(np.sum(r / (np.abs(r) + e))) == pytest.approx(0.0, abs=1e-8)
    # grid minimizer of the descent-certified criterion coincides
    mus = np.linspace(1.8, 2.2, 400001)
    vals = [float(np.sum(np.abs(m - data.Y) - e * np.log(e + np.abs(m - data.Y)))) for m in mus]
    assert abs(mu - mus[int(np.argmin(vals))]) <= 1e-5
    # the classically displayed criterion has its minimizer nearby (at the kink)
    vals_raw = [
        float(np.sum(np.abs(m - data.Y) - 0.5 * e * np.log(e + np.abs(m - data.Y))))
        for m in mus
    ]
    assert abs(mu - mus[int(np.argmin(vals_raw))]) <= 0.01
    assert abs(mu - 2.0) <= 0.01


def test_irls_exact_linear_noise_free(rng):
    data, beta = bounded_instance(rng, n=80, d=2, noise=1e-300)
    trace = irls_fit(data, IrlsConfig(lam=1e-10, e=1e-6, tau=1e-10, max_iters=500, v=100.0))
    assert trace.converged
    assert np.all(np.abs(trace.final.beta - beta) < 1e-4)
    assert float(np.abs(residuals(trace.final, data)).max()) < 1e-4


def test_irls_benchmark_converges_quickly():
    data, _, _ = benchmark_instance(5000, RngStream(7))
    cfg = IrlsConfig(lam=0.002, e=0.2, tau=1e-6, max_iters=200)
    trace = irls_fit(data, cfg)
    assert trace.converged
    assert trace.iterations < 30
    assert trace.bracket_violations == 0
    # converged means the last move was within tau in both blocks
    assert trace.mu_changes[-1] <= cfg.tau
    assert trace.beta_changes[-1] <= cfg.tau


def test_irls_descent_and_iterate_bounds():
    root = RngStream(21)
    for rep in range(5):
        data, _, _ = benchmark_instance(5000, root.derive(rep))
        cfg = IrlsConfig(lam=0.002, e=0.2, tau=1e-6, max_iters=200)
        trace = irls_fit(data, cfg)
        vals = [
            perturbed_objective_le(th, data, cfg.lam, cfg.e, form="mm") for th in trace.thetas
        ]
        assert float(np.max(np.diff(vals))) <= 1e-10
        v = trace.v
        reach = math.sqrt(data.d * v) + data.B
        for th in trace.thetas:
            assert float(th.beta @ th.beta) <= v
        assert abs(trace.final.mu) <= reach


def test_irls_weights_inside_bracket_every_iteration():
    data, _, _ = benchmark_instance(2000, RngStream(3))
    cfg = IrlsConfig(lam=0.002, e=0.2)
    trace = irls_fit(data, cfg)
    assert trace.bracket_violations == 0
    lo = 1.0 / (2.0 * (math.sqrt(data.d * trace.v) + data.B) + cfg.e)
    for th in trace.thetas:
        w = 1.0 / (np.abs(residuals(th, data)) + cfg.e)
        assert float(w.max()) <= 1.0 / cfg.e + 1e-12
        assert float(w.min()) >= lo - 1e-12


def test_default_coefficient_bound_formula():
    assert default_coefficient_bound(2.0, 0.002, 0.2) == pytest.approx(80000.0)
    with pytest.raises(ValueError):
        default_coefficient_bound(0.0, 0.002, 0.2)


def test_sensitivity_value_and_scalings():
    c = irls_sensitivity(3, 5000, 2.0, 0.002, 0.2, 1.0)
    assert c == pytest.approx(14.928203230275509, abs=1e-2)
    # halves when n doubles
    assert irls_sensitivity(3, 10000, 2.0, 0.002, 0.2, 1.0) == pytest.approx(c / 2)
    # increases in v and B, decreases in n
    assert irls_sensitivity(3, 5000, 2.0, 0.002, 0.2, 2.0) > c
    assert irls_sensitivity(3, 5000, 3.0, 0.002, 0.2, 1.0) > c
    assert irls_sensitivity(3, 50000, 2.0, 0.002, 0.2, 1.0) < c


def test_accuracy_bound_value_and_scaling():
    got = irls_accuracy_bound(3, 0.1, 5000, 0.002, 0.1, 0.2, 1.0, 2.0)
    assert got == pytest.approx(2202.7336873200247, rel=1e-6)
    assert irls_accuracy_bound(3, 0.1, 10000, 0.002, 0.1, 0.2, 1.0, 2.0) == pytest.approx(
        got / 2
    )
    with pytest.raises(ValueError):
        irls_accuracy_bound(3, 0.1, 5000, 0.002, 0.0, 0.2, 1.0, 2.0)


def test_private_fit_infinite_epsilon_matches_noiseless(rng):
    data, _ = bounded_instance(rng, n=100, d=2)
    cfg = IrlsConfig(epsilon=math.inf, lam=0.01, e=0.2)
    report = fit_irls_private(data, cfg, rng)
    plain = irls_fit(data, cfg)
    assert report.theta.mu == plain.final.mu
    assert np.array_equal(report.theta.beta, plain.final.beta)
    assert np.all(report.noise == 0.0)


def test_private_fit_noise_metadata(rng):
    data, _ = bounded_instance(rng, n=100, d=2)
    cfg = IrlsConfig(epsilon=0.5, lam=0.01, e=0.2, v=4.0)
    report = fit_irls_private(data, cfg, RngStream(5))
    c = irls_sensitivity(2, 100, data.B, 0.01, 0.2, 4.0)
    assert report.sensitivity == pytest.approx(c)
    assert report.noise_scale == pytest.approx(c / 0.5)
    delta = report.theta.as_vector() - report.trace.final.as_vector()
    assert np.allclose(delta, report.noise)


def test_sensitivity_probe_dominated_and_scales(rng):
    cfg = IrlsConfig(lam=0.002, e=0.2)
    r50 = irls_sensitivity_probe(50, 3, 150, cfg, RngStream(5))
    assert r50.ok
    assert r50.observed > 0
    r100 = irls_sensitivity_probe(100, 3, 150, cfg, RngStream(6))
    assert r100.ok
    # one-record influence decays like 1/n
    ratio = r50.observed / r100.observed
    assert 1.2 <= ratio <= 3.0


def test_probe_identical_data_gives_identical_fits(rng):
    data, _ = bounded_instance(rng, n=50, d=3)
    cfg = IrlsConfig(lam=0.002, e=0.2)
    a = irls_fit(data, cfg).final
    b = irls_fit(data, cfg).final
    assert a.mu == b.mu and np.array_equal(a.beta, b.beta)


def test_irls_limit_matches_smoothed_baseline(rng):
    # both solvers approximate the same L1 minimizer on sharp-noise data
    worst = 0.0
    for t in range(8):
        sub = rng.derive(3, t)
        X = sub.uniforms(-0.5, 0.5, 200 * 3).reshape(200, 3)
        X = X / max(float(np.abs(X).sum(axis=1).max()), 1.0)
        beta = np.array([0.8, -0.5, 0.3])
        Y = X @ beta + sub.laplaces(0.05, 200)
        B = max(2.0, float(np.abs(Y).max()) + 0.1)
        data = Dataset(X=X, Y=Y, B=B)
        lam = 1e-3
        ti = irls_fit(data, IrlsConfig(lam=lam, e=1e-4, tau=1e-10, max_iters=2000, v=1e12))
        assert ti.converged
        ts = fit_smoothed_baseline(data, SmoothingConfig(lam=lam, gamma=1e-3))
        diff = abs(ti.final.mu - ts.mu) + float(np.abs(ti.final.beta - ts.beta).sum())
        worst = max(worst, diff)
    assert worst <= 1e-2


def test_config_validation():
    with pytest.raises(ValueError):
        IrlsConfig(e=0.0)
    with pytest.raises(ValueError):
        IrlsConfig(tau=-1.0)
    with pytest.raises(ValueError):
        IrlsConfig(v=0.0)
    with pytest.raises(ValueError):
        irls_sensitivity(3, 5000, 2.0, 0.0, 0.2, 1.0)
