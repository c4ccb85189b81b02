"""Small symmetric-matrix helpers shared by the sampling and diagnostics code."""

import numpy as np
from scipy import linalg as sla

from .errors import InvalidInputError, NumericalDomainError

PSD_RTOL = 1e-8


def check_square(K):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {K.shape}")
    return K


def psd_eigh(K, rtol=PSD_RTOL):
    """Eigendecomposition of a PSD matrix, eigenvalues nonincreasing.

    Negative eigenvalues above ``-rtol * lambda_max`` are roundoff and are
    clamped to zero; anything more negative raises.
    """
    K = check_square(K)
    if K.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    w, U = sla.eigh(0.5 * (K + K.T))
    order = np.argsort(-w, kind="stable")
    w, U = w[order], U[:, order]
    top = max(w[0], 0.0)
    if w[-1] < -rtol * top or (top == 0.0 and w[-1] < 0.0):
        raise NumericalDomainError(
            f"matrix is indefinite: smallest eigenvalue {w[-1]:.3e}, largest {top:.3e}"
        )
    return np.maximum(w, 0.0), U


def psd_eigvalsh(K, rtol=PSD_RTOL):
    K = check_square(K)
    if K.shape[0] == 0:
        return np.zeros(0)
    w = sla.eigvalsh(0.5 * (K + K.T))[::-1]
    top = max(w[0], 0.0)
    if w[-1] < -rtol * top or (top == 0.0 and w[-1] < 0.0):
        raise NumericalDomainError(
            f"matrix is indefinite: smallest eigenvalue {w[-1]:.3e}, largest {top:.3e}"
        )
    return np.maximum(w, 0.0)
