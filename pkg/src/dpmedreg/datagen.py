"""Synthetic data generation, normalization into the bounded domain, and CSV
ingestion/emission.

The stock benchmark model is y = 2 + 3 x1 - 4 x3 + u with u ~ Laplace(2) and
covariates uniform on a box; :func:`default_generator_spec` builds it.  The
default box is centered, [-0.5, 0.5]^d: an uncentered box makes the intercept
column nearly collinear with the covariate means after row-norm scaling,
which amplifies both the intercept damping term and the perturbation noise by
an order of magnitude.  The box is recorded in run manifests and can be
overridden.  Bounds produced by :func:`normalize` are treated as public
knowledge by the fitters; data-dependent scaling is not itself privatized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, Theta
from .sampling import RngStream

__all__ = [
    "GeneratorSpec",
    "ScalingRecord",
    "default_generator_spec",
    "generate",
    "normalize",
    "unscale_theta",
    "read_csv",
    "write_csv",
]


@dataclass(frozen=True)
class GeneratorSpec:
    """Linear model with additive Laplace noise and box-uniform covariates."""

    n: int
    d: int
    mu: float
    beta: np.ndarray
    noise_scale: float
    box: tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self) -> None:
        beta = np.array(self.beta, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        if beta.shape != (self.d,):
            raise ValueError(f"beta must have length d={self.d}, got {beta.shape}")
        if not self.noise_scale > 0:
            raise ValueError("noise_scale must be positive")
        lo, hi = self.box
        if not lo < hi:
            raise ValueError(f"box must satisfy lo < hi, got {self.box}")

    @property
    def truth(self) -> Theta:
        return Theta(mu=self.mu, beta=self.beta)


def default_generator_spec(n: int = 5000) -> GeneratorSpec:
    """The stock three-covariate benchmark model."""
    return GeneratorSpec(n=n, d=3, mu=2.0, beta=(3.0, 0.0, -4.0), noise_scale=2.0)


def generate(spec: GeneratorSpec, rng: RngStream):
    """Draw a raw (unnormalized) table (X, Y) and return it with the truth."""
    lo, hi = spec.box
    X = lo + (hi - lo) * rng.uniform_open(spec.n * spec.d).reshape(spec.n, spec.d)
    u = rng.laplaces(spec.noise_scale, spec.n)
    Y = spec.mu + X @ spec.beta + u
    return X, Y, spec.truth


@dataclass(frozen=True)
class ScalingRecord:
    """Divisors applied to bring a raw table into the bounded domain."""

    x_scale: float
    y_scale: float
    B: float

    def __post_init__(self) -> None:
        if not (self.x_scale > 0 and self.y_scale > 0 and self.B > 0):
            raise ValueError("scales and B must be positive")


def normalize(X: np.ndarray, Y: np.ndarray, target_b: float = 2.0):
    """Scale rows of X to L1 norm <= 1 and Y to |Y_i| <= target_b.

    Scaling is global (a single divisor per block), never per-row clipping, so
    the linear structure of the table is preserved.  Idempotent: a conforming
    table gets identity scales.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != Y.shape[0] or X.shape[0] < 1:
        raise ValueError("need X (n, d) and Y (n,) with matching n >= 1")
    if not target_b > 0:
        raise ValueError("target_b must be positive")
    max_row = float(np.abs(X).sum(axis=1).max())
    if max_row == 0.0:
        raise ValueError("design matrix is identically zero")
    x_scale = max_row if max_row > 1.0 else 1.0
    max_y = float(np.abs(Y).max())
    y_scale = max_y / target_b if max_y > target_b else 1.0
    data = Dataset(X=X / x_scale, Y=Y / y_scale, B=target_b)
    return data, ScalingRecord(x_scale=x_scale, y_scale=y_scale, B=target_b)


def unscale_theta(theta: Theta, rec: ScalingRecord) -> Theta:
    """Express a fit on normalized data in the raw table's units."""
    return Theta(
        mu=theta.mu * rec.y_scale,
        beta=theta.beta * (rec.y_scale / rec.x_scale),
    )


def _expected_header(d: int) -> list[str]:
    return [f"x{j}" for j in range(1, d + 1)] + ["y"]


def write_csv(path, X: np.ndarray, Y: np.ndarray) -> None:
    """UTF-8, LF-terminated CSV with header x1,...,xd,y.

    Floats are written with shortest round-trip formatting, so
    write-then-read reproduces the exact doubles.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    lines = [",".join(_expected_header(X.shape[1]))]
    for i in range(X.shape[0]):
        lines.append(",".join([repr(float(v)) for v in X[i]] + [repr(float(Y[i]))]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a table written by :func:`write_csv`; d is inferred from the header."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split(",")
    d = len(header) - 1
    if d < 1:
        raise ValueError(f"{path}: header must name at least one covariate and y")
    expected = _expected_header(d)
    for got, want in zip(header, expected):
        if got != want:
            raise ValueError(f"{path}: header column {got!r} does not match expected {want!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != d + 1:
            raise ValueError(f"{path}:{lineno}: expected {d + 1} fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"{path}:{lineno}: non-finite value rejected")
        rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    return table[:, :d], table[:, d]
