"""Nystrom subspace embedding ``x -> (K_m^{1/2})^+ k_m(x)``.

``k_m(x) = (K(x~_1, x), ..., K(x~_m, x))`` collects kernel values against the
landmarks and ``K_m`` is the landmark Gram matrix. Eigenvalues of ``K_m`` at
or below ``tol * lambda_max`` are dropped, so the embedding dimension is the
numerical rank ``r <= m``.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import InvalidInputError, NumericalDomainError
from .kernel import KernelSpec, gram
from .sampling import LandmarkSet

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class NystromMap:
    spec: KernelSpec
    landmarks: LandmarkSet
    points: np.ndarray
    Km: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    factor: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def rank(self):
        return self.factor.shape[0]

    @property
    def m(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return None if self.spec.family == "precomputed" else self.points.shape[1]


def fit_embedding(ds, spec, landmarks, tol=DEFAULT_TOL):
    if landmarks.m == 0:
        raise InvalidInputError("empty landmark set")
    if not 0.0 <= tol < 1.0:
        raise InvalidInputError("tol must lie in [0, 1)")
    landmarks.check_bounds(ds.n)
    points = ds.features[landmarks.indices].copy()
    Km = gram(spec, points)
    w, U = sla.eigh(Km)
    order = np.argsort(-w, kind="stable")
    w, U = w[order], U[:, order]
    top = w[0]
    if top <= 0.0:
        raise NumericalDomainError("landmark Gram matrix has no positive eigenvalue")
    if w[-1] < -1e-8 * top:
        raise NumericalDomainError(
            f"landmark Gram matrix is indefinite: min eigenvalue {w[-1]:.3e}, max {top:.3e}"
        )
    keep = w > tol * top
    r = int(keep.sum())
    if r < landmarks.m:
        log.info("landmark Gram has numerical rank %d < m=%d; embedding in R^%d", r, landmarks.m, r)
    factor = U[:, :r].T / np.sqrt(w[:r])[:, None]
    return NystromMap(spec, landmarks, points, Km, w, U, factor, tol)


def embed(nmap, X, batch_size=None):
    """Embed points in batches (default: batches of ``m`` rows)."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if nmap.dim is not None and X.shape[1] != nmap.dim:
        raise InvalidInputError(f"dimension mismatch: points have {X.shape[1]}, map expects {nmap.dim}")
    n = X.shape[0]
    bs = int(batch_size or max(nmap.m, 1))
    out = np.empty((n, nmap.rank))
    Ft = nmap.factor.T
    for start in range(0, n, bs):
        stop = min(start + bs, n)
        out[start:stop] = gram(nmap.spec, X[start:stop], nmap.points) @ Ft
    return out


def map_to_arrays(nmap):
    """Arrays needed to rebuild the map for prediction without the training set."""
    return {
        "landmark_points": nmap.points,
        "landmark_indices": nmap.landmarks.indices,
        "factor": nmap.factor,
        "eigvals": nmap.eigvals,
        "eigvecs": nmap.eigvecs,
        "Km": nmap.Km,
    }


def map_from_arrays(spec, arrays, method, seed=None, alpha=None, tol=DEFAULT_TOL):
    lm = LandmarkSet(arrays["landmark_indices"], method, seed, alpha)
    return NystromMap(
        spec,
        lm,
        np.asarray(arrays["landmark_points"]),
        np.asarray(arrays["Km"]),
        np.asarray(arrays["eigvals"]),
        np.asarray(arrays["eigvecs"]),
        np.asarray(arrays["factor"]),
        tol,
    )
