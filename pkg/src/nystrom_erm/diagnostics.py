"""Tradeoff diagnostics: effective dimensions, projection residuals, eigendecay.

Population quantities are replaced by their empirical counterparts, computed
from the Gram matrix: the empirical covariance has eigenvalues ``eig(K) / n``.
Logarithms are natural and constants hidden in ``m >~ ...`` are taken as 1.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.sparse.linalg import eigsh

from .errors import InsufficientDataError, InvalidInputError, NumericalDomainError
from .kernel import gram
from .linalg import check_square, psd_eigh, psd_eigvalsh
from .nystrom import embed, fit_embedding


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    family: str = "none"  # "polynomial", "exponential" or "none"
    params: dict = field(default_factory=dict)
    residual: float = float("nan")
    residuals: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.params.get("p")

    @property
    def beta(self):
        return self.params.get("beta")

    def to_dict(self):
        return {
            "family": self.family,
            "params": self.params,
            "residual": self.residual,
            "residuals": self.residuals,
            "n_eigenvalues": int(len(self.eigenvalues)),
        }


def covariance_spectrum(K):
    """Nonincreasing eigenvalues of the empirical covariance, ``eig(K) / n``."""
    K = check_square(K)
    return psd_eigvalsh(K) / max(K.shape[0], 1)


def _check_alpha(alpha):
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")


def effective_dim_2(K, alpha):
    """``Tr((K + alpha n I)^{-1} K) = sum_j lam_j / (lam_j + alpha)``."""
    _check_alpha(alpha)
    lam = covariance_spectrum(K)
    return float(np.sum(lam / (lam + alpha)))


def effective_dim_2_from_spectrum(spectrum, alpha):
    _check_alpha(alpha)
    s = np.asarray(spectrum, dtype=np.float64)
    return float(np.sum(s / (s + alpha)))


def effective_dim_inf(K, alpha):
    """Sample-max proxy ``n * max_i l_i(alpha)`` for the sup-norm dimension."""
    _check_alpha(alpha)
    K = check_square(K)
    n = K.shape[0]
    w, U = psd_eigh(K)
    scores = np.einsum("ij,j,ij->i", U, w / (w + alpha * n), U)
    return float(n * scores.max())


def _largest_eig(A):
    n = A.shape[0]
    if n <= 600:
        return float(np.linalg.eigvalsh(A)[-1])
    v0 = np.ones(n) / math.sqrt(n)
    return float(eigsh(A, k=1, which="LA", v0=v0, return_eigenvectors=False, tol=1e-12)[0])


def _psd_within(A, eps):
    """True iff ``A + eps I`` admits a Cholesky factorization (lambda_min >= -eps)."""
    B = A.copy()
    B[np.diag_indices_from(B)] += eps
    try:
        sla.cholesky(B, lower=True, check_finite=False, overwrite_a=True)
    except np.linalg.LinAlgError:
        return False
    return True


def projection_residual(ds, spec, landmarks, K=None, tol=None):
    """``lambda_max(K - K_nm K_m^+ K_mn) / n``, i.e. ``||S^{1/2}(I - P_m)||^2``.

    ``K`` may be passed to reuse a full Gram matrix of ``ds``.
    """
    if landmarks.m == 0:
        raise InvalidInputError("empty landmark set")
    kw = {} if tol is None else {"tol": tol}
    nmap = fit_embedding(ds, spec, landmarks, **kw)
    Z = embed(nmap, ds.features)
    if K is None:
        K = gram(spec, ds.features)
    R = K - Z @ Z.T
    R = 0.5 * (R + R.T)
    kmax = _largest_eig(K)
    if not _psd_within(R, 1e-8 * max(kmax, 1e-300)):
        raise NumericalDomainError("Nystrom residual is indefinite beyond -1e-8 lambda_max(K)")
    return float(max(_largest_eig(R), 0.0) / ds.n)


def polynomial_dim_bound(gamma, beta, alpha):
    """Upper bound ``gamma beta / (beta - 1) alpha^{-1/beta}`` for ``s_j <= gamma j^{-beta}``."""
    if not beta > 1:
        raise InvalidInputError("polynomial bound needs beta > 1")
    if not (gamma > 0 and alpha > 0):
        raise InvalidInputError("gamma and alpha must be positive")
    return gamma * beta / (beta - 1.0) * alpha ** (-1.0 / beta)


def exponential_dim_bound(gamma, beta, alpha):
    """Upper bound ``ln(1 + gamma / alpha) / beta`` for ``s_j <= gamma e^{-beta j}``."""
    if not (gamma > 0 and beta > 0 and alpha > 0):
        raise InvalidInputError("gamma, beta and alpha must be positive")
    return math.log1p(gamma / alpha) / beta


def fit_eigendecay(spectrum, min_count=10):
    """Least-squares decay fit on the middle 80% of the positive spectrum.

    Polynomial: ``log s_j ~ c - (1/p) log j``; exponential: ``log s_j ~ c - beta j``.
    The family with the smaller residual (RMS in log space) wins.
    """
    s = np.sort(np.asarray(spectrum, dtype=np.float64))[::-1]
    j_all = np.arange(1, len(s) + 1, dtype=np.float64)
    pos = s > 0
    s, j_all = s[pos], j_all[pos]
    if len(s) < min_count:
        raise InsufficientDataError(f"need at least {min_count} positive eigenvalues, got {len(s)}")
    lo = int(math.floor(0.1 * len(s)))
    hi = max(int(math.ceil(0.9 * len(s))), lo + 2)
    j, ls = j_all[lo:hi], np.log(s[lo:hi])

    def lsq(t):
        A = np.column_stack([np.ones_like(t), t])
        coef, *_ = np.linalg.lstsq(A, ls, rcond=None)
        res = float(np.sqrt(np.mean((A @ coef - ls) ** 2)))
        return coef, res

    (c_p, slope_p), res_p = lsq(np.log(j))
    (c_e, slope_e), res_e = lsq(j)
    residuals = {"polynomial": res_p, "exponential": res_e}
    if res_p <= res_e:
        p = -1.0 / slope_p if slope_p < 0 else 1.0
        p = float(min(max(p, 1e-6), 1.0 - 1e-6))
        return SpectrumReport(s, "polynomial", {"p": p, "gamma": float(math.exp(c_p))}, res_p, residuals)
    beta = float(max(-slope_e, 1e-12))
    return SpectrumReport(s, "exponential", {"beta": beta, "gamma": float(math.exp(c_e))}, res_e, residuals)


def size_exponent(report, regime="basic", r=None, theta=None):
    p = report.p
    if regime == "basic":
        return p
    if regime == "fast":
        return 2 * p / (1 + p)
    if regime == "general":
        if r is None or theta is None or not (0 < r <= 1) or not (0 <= theta <= 1):
            raise InvalidInputError("general regime needs r in (0, 1] and theta in [0, 1]")
        return min(2 * p, p * (r + 1) / (r * (2 - p - theta + theta * p) + p))
    raise InvalidInputError(f"unknown regime {regime!r}")


def suggest_subspace_size(n, report, regime="basic", r=None, theta=None):
    """Landmark count implied by the fitted decay, clamped to ``[1, n]``.

    basic: ``n^p log n`` (``(log n)^2`` for exponential decay); fast:
    ``n^{2p/(1+p)} log n``; general: ``n^{min(2p, p(r+1)/(r(2-p-theta+theta p)+p))} log n``.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if regime == "general":
        if r is None or theta is None or not (0 < r <= 1) or not (0 <= theta <= 1):
            raise InvalidInputError("general regime needs r in (0, 1] and theta in [0, 1]")
    if report.family == "exponential":
        if regime not in ("basic", "fast", "general"):
            raise InvalidInputError(f"unknown regime {regime!r}")
        m = math.ceil(math.log(n) ** 2)
    elif report.family == "polynomial":
        m = math.ceil(n ** size_exponent(report, regime, r, theta) * math.log(n))
    else:
        raise InvalidInputError("spectrum report has no fitted decay family")
    return int(min(max(m, 1), n))


def diagnose(ds, spec, alphas, landmarks=None, K=None):
    """Per-alpha table of empirical d_2, d_inf and (optionally) the residual."""
    if K is None:
        K = gram(spec, ds.features)
    n = ds.n
    w, U = psd_eigh(K)
    lam = w / n
    rows = []
    residual = projection_residual(ds, spec, landmarks, K=K) if landmarks is not None else None
    for a in alphas:
        _check_alpha(a)
        scores = np.einsum("ij,j,ij->i", U, w / (w + a * n), U)
        rows.append(
            {
                "alpha": float(a),
                "d2": float(np.sum(lam / (lam + a))),
                "dinf": float(n * scores.max()),
                "residual": residual,
            }
        )
    try:
        report = fit_eigendecay(lam)
    except InsufficientDataError:
        report = SpectrumReport(lam)
    return rows, report


def write_diagnostics(rows, report, csv_path=None, json_path=None):
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("alpha,d2,dinf,residual\n")
            for row in rows:
                res = "" if row["residual"] is None else repr(row["residual"])
                fh.write(f"{row['alpha']!r},{row['d2']!r},{row['dinf']!r},{res}\n")
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump({"rows": rows, "spectrum": report.to_dict()}, fh, indent=2)
