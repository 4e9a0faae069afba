"""Seedable randomness: replayable streams, Laplace noise, and the
Gamma-norm / uniform-L1-direction perturbation vector.

Every sampler is an inverse-CDF construction (no rejection steps), so a fixed
(seed, stream) pair replays bit-identically.  All randomness in the package
flows through :class:`RngStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "NoiseVector",
    "sample_laplace",
    "sample_l1_perturbation",
    "gamma_tail_bound",
]

_TWO53 = float(2**53)

_NOISE_KINDS = ("laplace_iid", "l1_gamma_direction")


class RngStream:
    """Single-owner random stream identified by (seed, stream id).

    The same (seed, stream) always yields the same draw sequence; distinct
    stream ids are statistically independent.  A stream must not be shared
    across threads; give concurrent work units their own :meth:`derive` child.
    """

    __slots__ = ("seed", "stream", "_path", "_gen")

    def __init__(self, seed: int, stream: int = 0, *, _path: tuple = ()):
        self.seed = int(seed)
        path = tuple(int(p) for p in _path) if _path else (int(stream),)
        self.stream = path[0] if len(path) == 1 else path
        self._path = path
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=path)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *subids: int) -> "RngStream":
        """Independent child stream; children with distinct subids are independent."""
        return RngStream(self.seed, _path=self._path + tuple(int(s) for s in subids))

    def uniform_open(self, k: int) -> np.ndarray:
        """k uniforms strictly inside (0, 1); one 53-bit integer per draw."""
        ints = self._gen.integers(0, 2**53, size=int(k), dtype=np.int64)
        return (ints.astype(float) + 0.5) / _TWO53

    def exponentials(self, scale: float, k: int) -> np.ndarray:
        return -float(scale) * np.log(self.uniform_open(k))

    def laplaces(self, scale: float, k: int) -> np.ndarray:
        u = self.uniform_open(k) - 0.5
        return -float(scale) * np.sign(u) * np.log1p(-2.0 * np.abs(u))

    def uniforms(self, lo: float, hi: float, k: int) -> np.ndarray:
        return lo + (hi - lo) * self.uniform_open(k)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(int(n))

    def integer(self, lo: int, hi: int) -> int:
        """One integer in [lo, hi)."""
        return int(self._gen.integers(lo, hi))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class NoiseVector:
    """A realized noise draw plus the scale and family it came from."""

    values: np.ndarray
    scale: float
    kind: str

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] < 1:
            raise ValueError("values must be a nonempty 1-d vector")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "scale", float(self.scale))
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.kind not in _NOISE_KINDS:
            raise ValueError(f"kind must be one of {_NOISE_KINDS}, got {self.kind!r}")

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum())


def sample_laplace(scale: float, k: int, rng: RngStream) -> NoiseVector:
    """k i.i.d. draws with density (1/2c) exp(-|x|/c), c = scale.

    Inverse CDF from one uniform per draw: x = -c sign(u - 1/2) ln(1 - 2|u - 1/2|).
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    return NoiseVector(values=rng.laplaces(scale, k), scale=float(scale), kind="laplace_iid")


def sample_l1_perturbation(dim: int, epsilon: float, rng: RngStream) -> NoiseVector:
    """Random vector b with density proportional to exp(-epsilon ||b||_1 / 4).

    ||b||_1 is drawn as the sum of ``dim`` i.i.d. exponentials of mean
    4/epsilon (a Gamma(dim, 4/epsilon) variate), then multiplied by a
    direction uniform on the L1 sphere (``dim`` unit-Laplace draws divided by
    their L1 norm).  Draw order: norm first, then direction.
    """
    if dim < 1:
        raise ValueError(f"need dim >= 1, got {dim}")
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    scale = 4.0 / epsilon
    norm = float(rng.exponentials(scale, dim).sum())
    raw = rng.laplaces(1.0, dim)
    direction = raw / np.abs(raw).sum()
    return NoiseVector(values=norm * direction, scale=scale, kind="l1_gamma_direction")


def gamma_tail_bound(d: int, alpha: float, epsilon: float) -> float:
    """(1 - alpha)-quantile upper bound for a Gamma(d+1, 4/epsilon) norm draw.

    Returns 4 (d+1) ln((d+1)/alpha) / epsilon (natural log).  Monotone
    decreasing in both alpha and epsilon.
    """
    if d < 0:
        raise ValueError(f"need d >= 0, got {d}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return 4.0 * (d + 1) * math.log((d + 1) / alpha) / epsilon
