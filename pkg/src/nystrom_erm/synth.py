"""Synthetic Gaussian data with controlled covariance decay and a linear target."""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InvalidInputError

HARD_MARGIN_DEFAULT = 0.1


@dataclass(frozen=True)
class SynthSpec:
    n: int
    d: int
    decay: str = "polynomial"
    p: float = 0.5
    beta: float = 1.0
    target_norm: float = 1.0
    noise: float = 0.0
    margin: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("n must be >= 1")
        if self.d < 2:
            raise InvalidInputError("d must be >= 2")
        if self.decay == "polynomial":
            if not 0 < self.p < 1:
                raise InvalidInputError("p must lie in (0, 1)")
        elif self.decay == "exponential":
            if not self.beta > 0:
                raise InvalidInputError("beta must be positive")
        else:
            raise InvalidInputError(f"unknown decay {self.decay!r}")
        if not 0 <= self.noise < 0.5:
            raise InvalidInputError("label noise must lie in [0, 0.5)")
        if not self.target_norm > 0:
            raise InvalidInputError("target norm must be positive")
        if self.margin < 0:
            raise InvalidInputError("margin must be nonnegative")


def covariance_diagonal(spec):
    """Trace-normalized ``j^{-1/p}`` or ``e^{-beta j}``, j = 1..d."""
    j = np.arange(1, spec.d + 1, dtype=np.float64)
    if spec.decay == "polynomial":
        D = j ** (-1.0 / spec.p)
    else:
        D = np.exp(-spec.beta * j)
    return D / D.sum()


def generate(spec):
    """Return ``(dataset, w_star)``.

    Labels are ``sign(<w*, x>)`` (sign(0) = +1), flipped independently with
    probability ``noise``. With ``margin > 0`` points with
    ``|<w*, x>| < margin`` are rejected and redrawn.
    """
    rng = np.random.default_rng(spec.seed)
    D = covariance_diagonal(spec)
    scale = np.sqrt(D)
    u = rng.standard_normal(spec.d)
    w = spec.target_norm * u / np.linalg.norm(u)

    chunks, have = [], 0
    tries = 0
    while have < spec.n:
        batch = max(spec.n - have, 256)
        X = rng.standard_normal((batch, spec.d)) * scale
        if spec.margin > 0:
            X = X[np.abs(X @ w) >= spec.margin]
        chunks.append(X)
        have += len(X)
        tries += 1
        if tries > 10_000:
            raise InvalidInputError("margin rejection accepts too few points")
    X = np.concatenate(chunks)[: spec.n]
    y = np.where(X @ w >= 0, 1.0, -1.0)
    if spec.noise > 0:
        flip = rng.random(spec.n) < spec.noise
        y[flip] = -y[flip]
    name = f"synth-{spec.decay}-{spec.p if spec.decay == 'polynomial' else spec.beta}"
    return Dataset(X, y, name), w
