"""Landmark selection: uniform subsets and ridge-leverage-score sampling.

The ridge leverage score of point ``i`` at level ``alpha`` is the kernel form
``l_i(alpha) = (K (K + alpha n I)^{-1})_{ii}``. The scores sum to the
empirical effective dimension ``Tr((K + alpha n I)^{-1} K)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .kernel import kernel_diag
from .linalg import check_square, psd_eigh


@dataclass(frozen=True)
class LeverageScores:
    alpha: float
    scores: np.ndarray
    kind: str = "exact"
    T: float = 1.0

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("index,score\n")
            for i, s in enumerate(self.scores):
                fh.write(f"{i},{s!r}\n")


@dataclass(frozen=True)
class LandmarkSet:
    indices: np.ndarray
    method: str
    seed: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        if len(np.unique(idx)) != len(idx):
            raise InvalidInputError("landmark indices must be distinct")
        if idx.size and idx.min() < 0:
            raise InvalidInputError("landmark indices must be nonnegative")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self):
        return len(self.indices)

    def check_bounds(self, n):
        if self.indices.size and self.indices.max() >= n:
            raise InvalidInputError(f"landmark index {self.indices.max()} out of range for n={n}")

    def to_dict(self):
        return {
            "indices": self.indices.tolist(),
            "method": self.method,
            "seed": self.seed,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["indices"], dtype=np.int64), d["method"], d.get("seed"), d.get("alpha"))


def _leverage_from_eig(w, U, ridge):
    return np.einsum("ij,j,ij->i", U, w / (w + ridge), U)


def exact_leverage_scores(K, alpha):
    K = check_square(K)
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    n = K.shape[0]
    w, U = psd_eigh(K)
    scores = _leverage_from_eig(w, U, alpha * n)
    return LeverageScores(float(alpha), np.clip(scores, 0.0, 1.0), "exact", 1.0)


def approximate_leverage_scores(ds, spec, alpha, pilot_size, seed, tol=None):
    """Two-pass estimate from a uniform pilot of ``pilot_size`` landmarks.

    Each point is scored as ``q_i^T (Q^T Q + alpha n I)^{-1} q_i`` plus the
    residual ``(K_ii - |q_i|^2) / (alpha n)``, where the rows ``q_i`` of ``Q``
    are the pilot Nystrom embeddings, capped at 1. Without the residual term points far
    from the pilot get scores near zero and are never sampled.
    """
    from .nystrom import embed, fit_embedding

    n = ds.n
    if pilot_size < 1:
        raise InvalidInputError("pilot size must be >= 1")
    if pilot_size > n:
        raise InvalidInputError(f"pilot size {pilot_size} exceeds n={n}")
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    pilot = uniform_landmarks(n, pilot_size, seed)
    kw = {} if tol is None else {"tol": tol}
    nmap = fit_embedding(ds, spec, pilot, **kw)
    Q = embed(nmap, ds.features)
    A = Q.T @ Q
    A[np.diag_indices_from(A)] += alpha * n
    L = np.linalg.cholesky(A)
    Z = np.linalg.solve(L, Q.T)
    scores = np.einsum("ij,ij->j", Z, Z)
    resid = kernel_diag(spec, ds.features) - np.einsum("ij,ij->i", Q, Q)
    scores += np.clip(resid, 0.0, None) / (alpha * n)
    # exact scores never exceed 1
    np.minimum(scores, 1.0, out=scores)
    return LeverageScores(float(alpha), scores, "approximate", float("nan"))


def uniform_landmarks(n, m, seed):
    if not 1 <= m <= n:
        raise InvalidInputError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=m, replace=False)
    return LandmarkSet(idx, "uniform", seed)


def als_landmarks(scores, m, seed):
    """Draw ``m`` indices i.i.d. from ``Q(i) = s_i / sum(s)``, then drop duplicates.

    The returned set keeps first-occurrence order and may be smaller than m.
    """
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    s = np.asarray(scores.scores if isinstance(scores, LeverageScores) else scores, dtype=np.float64)
    if np.any(~np.isfinite(s)) or np.any(s < 0):
        raise InvalidInputError("scores must be finite and nonnegative")
    total = s.sum()
    if not total > 0:
        raise InvalidInputError("all scores are zero")
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(s), size=m, replace=True, p=s / total)
    _, first = np.unique(draws, return_index=True)
    idx = draws[np.sort(first)]
    alpha = scores.alpha if isinstance(scores, LeverageScores) else None
    return LandmarkSet(idx, "als", seed, alpha)
