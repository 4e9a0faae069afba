"""Data model and deterministic objective mathematics for median (L1) regression.

All containers are immutable after construction and every operation is a pure
function of its arguments, so everything in this module can be evaluated
concurrently without synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "Theta",
    "ObjectiveConfig",
    "residuals",
    "objective_l1",
    "huber_rho",
    "sign_vector",
    "smoothed_objective",
    "smoothed_gradient",
    "directional_derivatives",
    "perturbed_objective_le",
]

# Absolute slack on construction-time bound checks; normalized data leaves row
# norms within a few ulps of the bound, which must not be rejected.
_BOUND_SLACK = 1e-9


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimension(s), got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Bounded regression data: ``n`` rows of predictors plus responses.

    Every row of ``X`` must have L1 norm at most 1 and every response must
    satisfy ``|Y_i| <= B``; both are checked at construction.  Use
    :func:`dpmedreg.datagen.normalize` to bring raw data into this domain.
    """

    X: np.ndarray
    Y: np.ndarray
    B: float

    def __post_init__(self) -> None:
        X = _frozen_array(self.X, 2, "X")
        Y = _frozen_array(self.Y, 1, "Y")
        B = float(self.B)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "B", B)
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        if Y.shape[0] != n:
            raise ValueError(f"X has {n} rows but Y has {Y.shape[0]} entries")
        if not B > 0:
            raise ValueError(f"B must be positive, got {B}")
        max_row = float(np.abs(X).sum(axis=1).max())
        if max_row > 1.0 + _BOUND_SLACK:
            raise ValueError(f"max row L1 norm {max_row} exceeds 1")
        max_y = float(np.abs(Y).max())
        if max_y > B + _BOUND_SLACK:
            raise ValueError(f"max |Y_i| {max_y} exceeds bound B={B}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Theta:
    """Intercept ``mu`` and coefficient vector ``beta``."""

    mu: float
    beta: np.ndarray

    def __post_init__(self) -> None:
        mu = float(self.mu)
        if not np.isfinite(mu):
            raise ValueError("mu must be finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "beta", _frozen_array(self.beta, 1, "beta"))

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    def as_vector(self) -> np.ndarray:
        """Stacked parameter vector (mu, beta_1, ..., beta_d)."""
        return np.concatenate(([self.mu], self.beta))

    @classmethod
    def from_vector(cls, omega: np.ndarray) -> "Theta":
        omega = np.asarray(omega, dtype=float)
        return cls(mu=float(omega[0]), beta=omega[1:])


@dataclass(frozen=True)
class ObjectiveConfig:
    """Shared objective knobs: ridge weight, smoothing width, weight floor."""

    lam: float = 0.002
    gamma: float = 0.05
    e: float = 0.2

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.e > 0:
            raise ValueError(f"e must be positive, got {self.e}")


def residuals(theta: Theta, data: Dataset) -> np.ndarray:
    """r_i = mu + X_i . beta - Y_i for every sample."""
    if theta.d != data.d:
        raise ValueError(f"theta has d={theta.d} but data has d={data.d}")
    return theta.mu + data.X @ theta.beta - data.Y


def objective_l1(theta: Theta, data: Dataset, lam: float) -> float:
    """Mean absolute residual plus the ridge penalty (lam/2) beta'beta."""
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    r = residuals(theta, data)
    return float(np.abs(r).sum() / data.n + 0.5 * lam * theta.beta @ theta.beta)


def huber_rho(t, gamma: float):
    """Quadratic-near-zero surrogate for |t| with half-width ``gamma``.

    t^2 / (2 gamma) on |t| <= gamma, |t| - gamma/2 outside; continuous with a
    continuous first derivative at |t| = gamma.  The uniform gap to |t| never
    exceeds gamma/2.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    arr = np.asarray(t, dtype=float)
    at = np.abs(arr)
    out = np.where(at <= gamma, arr * arr / (2.0 * gamma), at - 0.5 * gamma)
    if arr.ndim == 0:
        return float(out)
    return out


def sign_vector(r: np.ndarray, gamma: float) -> np.ndarray:
    """Three-way sign of each residual against the band [-gamma, gamma].

    Returns -1 / 0 / +1 per entry; the band is inclusive, so |r_i| == gamma
    maps to 0 (deterministic even though float equality is measure zero).
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    r = np.asarray(r, dtype=float)
    return np.where(r < -gamma, -1, np.where(r > gamma, 1, 0)).astype(int)


def smoothed_objective(theta: Theta, data: Dataset, cfg: ObjectiveConfig) -> float:
    """Mean smoothed absolute residual plus the ridge penalty."""
    r = residuals(theta, data)
    return float(
        np.sum(huber_rho(r, cfg.gamma)) / data.n
        + 0.5 * cfg.lam * theta.beta @ theta.beta
    )


def smoothed_gradient(theta: Theta, data: Dataset, cfg: ObjectiveConfig) -> Theta:
    """Gradient of :func:`smoothed_objective`, returned in Theta shape.

    The per-sample factor (r_i / gamma) inside the band and sign(r_i) outside
    always lies in [-1, 1]; at |r_i| == gamma the two branches coincide, so the
    inclusive band assignment is immaterial here.
    """
    r = residuals(theta, data)
    s = sign_vector(r, cfg.gamma).astype(float)
    w = 1.0 - s * s
    bracket = (w * r) / cfg.gamma + s
    dmu = float(bracket.sum() / data.n)
    dbeta = data.X.T @ bracket / data.n + cfg.lam * theta.beta
    return Theta(mu=dmu, beta=dbeta)


def _one_sided_slopes(r: np.ndarray, xk: np.ndarray, n: int, lam_beta_k: float):
    """Forward/backward coordinate slopes of the mean absolute residual."""
    pos = r > 0
    neg = r < 0
    zero = ~(pos | neg)
    kink = float(np.abs(xk[zero]).sum())
    swing = float(xk[pos].sum() - xk[neg].sum())
    d_plus = (swing + kink) / n + lam_beta_k
    d_minus = (-swing + kink) / n + lam_beta_k
    return d_plus, d_minus


def directional_derivatives(theta: Theta, data: Dataset, lam: float, k: int):
    """One-sided derivatives of :func:`objective_l1` along +/- coordinate k.

    Samples with r_i exactly zero contribute |x_ik| to both sides.  The ridge
    term contributes lam * beta_k to both returned values, so away from kinks
    d_plus == -d_minus + 2 lam beta_k.  ``k`` is a 0-based coordinate index.
    """
    if not 0 <= k < data.d:
        raise IndexError(f"coordinate k={k} out of range for d={data.d}")
    r = residuals(theta, data)
    return _one_sided_slopes(r, data.X[:, k], data.n, lam * float(theta.beta[k]))


def perturbed_objective_le(
    theta: Theta, data: Dataset, lam: float, e: float, form: str = "raw"
) -> float:
    """Log-perturbed absolute-deviation criterion.

    form="raw" evaluates the unnormalized sum

        sum_i [ |r_i| - (e/2) ln(e + |r_i|) ] + (lam/2) beta'beta,

    form="mm" evaluates the per-sample-normalized variant

        (2/n) sum_i [ |r_i| - e ln(e + |r_i|) ] + (lam/2) beta'beta,

    which is tangent from below to the 1/(|r|+e)-reweighted quadratic
    criterion and therefore cannot increase across a reweighted least-squares
    update; use the latter for descent checks.
    """
    if not e > 0:
        raise ValueError(f"e must be positive, got {e}")
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    r = np.abs(residuals(theta, data))
    ridge = 0.5 * lam * float(theta.beta @ theta.beta)
    if form == "raw":
        return float(np.sum(r - 0.5 * e * np.log(e + r)) + ridge)
    if form == "mm":
        return float(2.0 / data.n * np.sum(r - e * np.log(e + r)) + ridge)
    raise ValueError(f"unknown form {form!r}, expected 'raw' or 'mm'")
