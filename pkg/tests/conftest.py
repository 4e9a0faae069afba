import numpy as np
import pytest

from dpmedreg import Dataset, RngStream, default_generator_spec, generate, normalize


def bounded_instance(sub: RngStream, n: int, d: int, noise: float = 0.25, beta_scale: float = 1.5):
    """Random bounded dataset with planted linear structure and Laplace noise.

    Covariates are centered; rows are rescaled so the largest L1 norm is 1.
    Returns (dataset, planted_beta).
    """
    X = sub.uniforms(-0.5, 0.5, n * d).reshape(n, d)
    X = X / max(float(np.abs(X).sum(axis=1).max()), 1.0)
    beta = sub.uniforms(-beta_scale, beta_scale, d)
    Y = X @ beta + sub.laplaces(noise, n)
    B = max(2.0, float(np.abs(Y).max()) + 0.1)
    return Dataset(X=X, Y=Y, B=B), beta


def benchmark_instance(n: int, rng: RngStream):
    """One normalized draw of the stock benchmark model."""
    X, Y, truth = generate(default_generator_spec(n), rng)
    data, record = normalize(X, Y)
    return data, record, truth


@pytest.fixture
def rng():
    return RngStream(20240901)
