"""Dataset ingestion: LIBSVM text format, label normalization, splitting."""

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if X.ndim != 2:
            raise InvalidInputError("features must be a 2-d array")
        if X.shape[0] != y.shape[0]:
            raise InvalidInputError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("features contain NaN or Inf")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidInputError("labels must be -1 or +1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, idx, name=None):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], name or self.name)


def _parse_label(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad label {tok!r}", lineno) from None


def parse_libsvm(stream, dim=None, binarize=None, name=""):
    """Parse LIBSVM ``label idx:val ...`` lines into a dense Dataset.

    Two distinct raw labels map to -1/+1 (smaller raw value -> -1). With more
    classes, ``binarize`` must list the raw labels that map to +1; all others
    map to -1. ``binarize`` may also be given for two-class input.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    raw_labels, rows, cols, vals = [], [], [], []
    max_idx = 0
    r = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        raw_labels.append(_parse_label(toks[0], lineno))
        prev = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {tok!r}", lineno)
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise ParseError(f"bad feature {tok!r}", lineno) from None
            if idx < 1:
                raise ParseError(f"feature index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise ParseError(f"feature indices not strictly increasing at {idx}", lineno)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {val_s!r}", lineno)
            prev = idx
            rows.append(r)
            cols.append(idx - 1)
            vals.append(val)
        max_idx = max(max_idx, prev)
        r += 1

    d = max_idx if dim is None else int(dim)
    if d < max_idx:
        raise InvalidInputError(f"dimension hint {d} smaller than max index {max_idx}")
    X = np.zeros((r, d))
    if vals:
        X[rows, cols] = vals
    y = binarize_labels(np.asarray(raw_labels), binarize)
    return Dataset(X, y, name)


def binarize_labels(raw, positive=None):
    raw = np.asarray(raw, dtype=np.float64)
    if positive is not None:
        pos = np.asarray([float(v) for v in positive])
        return np.where(np.isin(raw, pos), 1.0, -1.0)
    classes = np.unique(raw)
    if len(classes) > 2:
        raise InvalidInputError(
            f"{len(classes)} classes found; supply a binarization rule (labels mapped to +1)"
        )
    if len(classes) == 1:
        # A single class keeps its sign when it is already +/-1.
        c = classes[0]
        return np.full(raw.shape, 1.0 if c > 0 else -1.0)
    return np.where(raw == classes[1], 1.0, -1.0)


def load_libsvm(path, dim=None, binarize=None):
    path = Path(path)
    with open(path) as fh:
        return parse_libsvm(fh, dim=dim, binarize=binarize, name=path.stem)


def load_train_test(train_path, test_path, binarize=None):
    """Load a dataset with an official test file, sharing one dimension."""
    tr = load_libsvm(train_path, binarize=binarize)
    te = load_libsvm(test_path, binarize=binarize)
    d = max(tr.d, te.d)
    if tr.d < d:
        tr = Dataset(np.pad(tr.features, ((0, 0), (0, d - tr.d))), tr.labels, tr.name)
    if te.d < d:
        te = Dataset(np.pad(te.features, ((0, 0), (0, d - te.d))), te.labels, te.name)
    return tr, te


def format_libsvm(ds):
    out = io.StringIO()
    for x, y in zip(ds.features, ds.labels):
        nz = np.flatnonzero(x)
        feats = " ".join(f"{j + 1}:{float(x[j])!r}" for j in nz)
        out.write(f"{int(y):+d} {feats}".rstrip() + "\n")
    return out.getvalue()


def write_libsvm(ds, path):
    Path(path).write_text(format_libsvm(ds))


def write_csv(ds, path):
    """Dense CSV: label first, then the d feature columns."""
    header = "label," + ",".join(f"x{j + 1}" for j in range(ds.d))
    data = np.column_stack([ds.labels, ds.features])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def split(ds, test_fraction, seed):
    """Seeded train/test partition with ``ceil(n (1 - f))`` training points."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError(f"test fraction must lie in (0, 1), got {test_fraction}")
    if ds.n < 2:
        raise InvalidInputError("need at least two points to split")
    # Guard against products like 5 * 0.8 = 4.000000000000001.
    n_train = math.ceil(ds.n * (1.0 - test_fraction) - 1e-9)
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(perm[:n_train], ds.name), ds.subset(perm[n_train:], ds.name)
