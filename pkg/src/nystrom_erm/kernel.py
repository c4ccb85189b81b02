"""Kernel evaluation and blocked Gram assembly.

The Gaussian kernel is parameterized as ``exp(-||x - x'||^2 / (2 sigma^2))``,
i.e. ``gamma = 1 / (2 sigma^2)`` in the usual SVM convention.

For the ``precomputed`` family, points are integer indices into the stored
Gram matrix (either a 1-d index array or an ``(k, 1)`` column).
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidInputError

FAMILIES = ("gaussian", "linear", "precomputed")
DEFAULT_BLOCK = 2048


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    sigma: float = 1.0
    matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown kernel family {self.family!r}")
        if self.family == "gaussian" and not self.sigma > 0:
            raise InvalidInputError("gaussian kernel needs sigma > 0")
        if self.family == "precomputed":
            if self.matrix is None:
                raise InvalidInputError("precomputed kernel needs a matrix")
            _check_precomputed(self.matrix)

    @property
    def gamma(self):
        return 1.0 / (2.0 * self.sigma**2)

    def to_dict(self):
        if self.family == "precomputed":
            raise InvalidInputError("precomputed kernels are not serializable by value")
        return {"family": self.family, "sigma": float(self.sigma)}

    @classmethod
    def from_dict(cls, d):
        return cls(family=d["family"], sigma=float(d.get("sigma", 1.0)))


def _check_precomputed(K):
    K = np.asarray(K)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InvalidInputError(f"precomputed Gram must be square, got {K.shape}")
    if K.size and np.max(np.abs(K - K.T)) > 1e-10:
        raise InvalidInputError("precomputed Gram is not symmetric within 1e-10")
    if K.size and np.min(np.diag(K)) < 0:
        raise InvalidInputError("precomputed Gram has a negative diagonal entry")


def _as_points(spec, A):
    A = np.asarray(A)
    if spec.family == "precomputed":
        idx = A.reshape(-1).astype(np.int64)
        n = spec.matrix.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidInputError("precomputed kernel index out of range")
        return idx
    if A.ndim == 1:
        A = A[None, :]
    return np.asarray(A, dtype=np.float64)


def eval_kernel(spec, x, x2):
    """K(x, x2) for a single pair of points."""
    if spec.family == "precomputed":
        i, j = int(np.asarray(x).reshape(-1)[0]), int(np.asarray(x2).reshape(-1)[0])
        n = spec.matrix.shape[0]
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidInputError("precomputed kernel index out of range")
        return float(spec.matrix[i, j])
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    x2 = np.asarray(x2, dtype=np.float64).reshape(-1)
    if x.shape != x2.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape[0]} vs {x2.shape[0]}")
    if spec.family == "linear":
        return float(x @ x2)
    diff = x - x2
    return float(np.exp(-(diff @ diff) / (2.0 * spec.sigma**2)))


def _block(spec, A, B, sqA=None, sqB=None):
    if spec.family == "precomputed":
        return spec.matrix[np.ix_(A, B)].astype(np.float64)
    G = A @ B.T
    if spec.family == "linear":
        return G
    if sqA is None:
        sqA = np.einsum("ij,ij->i", A, A)
    if sqB is None:
        sqB = np.einsum("ij,ij->i", B, B)
    D = sqA[:, None] + sqB[None, :] - 2.0 * G
    np.maximum(D, 0.0, out=D)
    D *= -spec.gamma
    return np.exp(D, out=D)


def gram(spec, A, B=None, block_size=DEFAULT_BLOCK):
    """Gram matrix with entries K(A_i, B_j), assembled in row blocks.

    ``B=None`` means ``B = A``; the result is then exactly symmetric with a
    unit diagonal for the Gaussian kernel.
    """
    same = B is None
    A = _as_points(spec, A)
    B = A if same else _as_points(spec, B)
    nA, nB = len(A), len(B)
    if nA == 0 or nB == 0:
        return np.zeros((nA, nB))
    if spec.family != "precomputed" and A.shape[1] != B.shape[1]:
        raise InvalidInputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    sqB = None if spec.family != "gaussian" else np.einsum("ij,ij->i", B, B)
    out = np.empty((nA, nB))
    for start in range(0, nA, block_size):
        stop = min(start + block_size, nA)
        out[start:stop] = _block(spec, A[start:stop], B, sqB=sqB)
    if same:
        out = 0.5 * (out + out.T)
        if spec.family == "gaussian":
            np.fill_diagonal(out, 1.0)
    return out


def kernel_diag(spec, A):
    """K(x, x) for each point."""
    A = _as_points(spec, A)
    if spec.family == "gaussian":
        return np.ones(len(A))
    if spec.family == "linear":
        return np.einsum("ij,ij->i", A, A)
    return np.diag(spec.matrix)[A].astype(np.float64)


# Precomputed matrix files.
#   CSV:    first line holds n, then n rows of n comma-separated values.
#   binary: little-endian int64 n, then n*n float64 values, row-major.

_MAGIC = b"NYGRAM1\0"


def save_gram(path, K, fmt=None):
    path = Path(path)
    K = np.asarray(K, dtype=np.float64)
    _check_precomputed(K)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "bin")
    n = K.shape[0]
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write(f"{n}\n")
            for row in K:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<q", n))
            fh.write(K.astype("<f8").tobytes(order="C"))


def load_gram(path):
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(_MAGIC))
        if head == _MAGIC:
            (n,) = struct.unpack("<q", fh.read(8))
            data = np.frombuffer(fh.read(), dtype="<f8")
            if data.size != n * n:
                raise InvalidInputError(f"{path}: expected {n * n} values, found {data.size}")
            K = data.reshape(n, n).astype(np.float64)
            _check_precomputed(K)
            return K
    with open(path) as fh:
        n = int(fh.readline().strip())
        K = np.loadtxt(fh, delimiter=",", ndmin=2) if n else np.zeros((0, 0))
    if K.shape != (n, n):
        raise InvalidInputError(f"{path}: header says n={n}, matrix is {K.shape}")
    _check_precomputed(K)
    return K
