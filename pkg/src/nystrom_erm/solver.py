"""Regularized and norm-constrained ERM in the embedded space.

Both trainers run single-sample stochastic subgradient steps (Pegasos style)
over the embedded matrix. For a loss written as ``l(y, s) = phi(y s)`` the
per-sample direction is ``g * y * x`` with ``g = phi'(y s)``; this ``g`` is
what :func:`loss_subgradient` returns (the derivative in ``s`` is ``y * g``).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .errors import InvalidInputError, NumericalDivergenceError

HINGE, LOGISTIC = 0, 1
_LOSS_CODES = {"hinge": HINGE, "logistic": LOGISTIC}
SCHEDULES = ("pegasos", "sqrt")


@dataclass(frozen=True)
class LossSpec:
    family: str = "hinge"
    clip: float = 1.0

    def __post_init__(self):
        if self.family not in _LOSS_CODES:
            raise InvalidInputError(f"unknown loss {self.family!r}")
        if not self.clip > 0:
            raise InvalidInputError("clip level M must be positive")

    @property
    def lipschitz(self):
        return 1.0

    @property
    def ell0(self):
        return 1.0 if self.family == "hinge" else math.log(2.0)

    @property
    def code(self):
        return _LOSS_CODES[self.family]


@dataclass
class TrainedModel:
    weights: np.ndarray
    lam: float
    loss: LossSpec
    nmap: object = None
    epochs: int = 0
    objective: float = float("nan")
    radius: Optional[float] = None
    history: list = field(default_factory=list)


def loss_value(loss, y, score):
    """Pointwise loss; accepts scalars or arrays."""
    m = np.asarray(y, dtype=np.float64) * np.asarray(score, dtype=np.float64)
    if loss.family == "hinge":
        out = np.maximum(0.0, 1.0 - m)
    else:
        out = np.logaddexp(0.0, -m)
    return float(out) if out.ndim == 0 else out


def loss_subgradient(loss, y, score):
    """Margin derivative ``g``; at the hinge kink ``y s = 1`` it is -1."""
    m = np.asarray(y, dtype=np.float64) * np.asarray(score, dtype=np.float64)
    if loss.family == "hinge":
        out = np.where(m <= 1.0, -1.0, 0.0)
    else:
        # -1 / (1 + exp(m)), written to avoid overflow for large |m|
        out = -0.5 * (1.0 - np.tanh(0.5 * m))
    return float(out) if out.ndim == 0 else out


def empirical_risk(loss, embedded, labels, weights):
    return float(np.mean(loss_value(loss, labels, embedded @ weights)))


def objective(loss, embedded, labels, weights, lam):
    return empirical_risk(loss, embedded, labels, weights) + lam * float(weights @ weights)


@numba.njit(cache=True)
def _margin_grad(code, m):
    if code == 0:
        return -1.0 if m <= 1.0 else 0.0
    return -0.5 * (1.0 - math.tanh(0.5 * m))


@numba.njit(cache=True, nogil=True)
def _sgd_epoch(X, y, order, a, avg, t0, lam, code, sched, c, radius):
    # sched 0: eta = 1 / (2 lam t); sched 1: eta = c / sqrt(t)
    # radius < 0 disables projection. Returns the first bad step or -1.
    r = X.shape[1]
    for k in range(order.shape[0]):
        t = t0 + k + 1
        i = order[k]
        s = 0.0
        for j in range(r):
            s += a[j] * X[i, j]
        g = _margin_grad(code, y[i] * s)
        if sched == 0:
            eta = 1.0 / (2.0 * lam * t)
        else:
            eta = c / math.sqrt(t)
        shrink = 1.0 - 2.0 * lam * eta
        step = -eta * g * y[i]
        nrm = 0.0
        for j in range(r):
            a[j] = shrink * a[j] + step * X[i, j]
            nrm += a[j] * a[j]
        if not math.isfinite(nrm):
            return t
        if radius >= 0.0 and nrm > radius * radius:
            f = radius / math.sqrt(nrm)
            for j in range(r):
                a[j] *= f
        w = 1.0 / t
        for j in range(r):
            avg[j] += w * (a[j] - avg[j])
    return -1


def _full_batch_step(X, y, a, t, lam, code, sched, c, radius):
    m = y * (X @ a)
    if code == HINGE:
        g = np.where(m <= 1.0, -1.0, 0.0)
    else:
        g = -0.5 * (1.0 - np.tanh(0.5 * m))
    grad = X.T @ (g * y) / len(y) + 2.0 * lam * a
    eta = 1.0 / (2.0 * lam * t) if sched == 0 else c / math.sqrt(t)
    a = a - eta * grad
    nrm = float(np.sqrt(a @ a))
    if not math.isfinite(nrm):
        raise NumericalDivergenceError(t)
    if radius >= 0.0 and nrm > radius:
        a *= radius / nrm
    return a


def _check_inputs(embedded, labels, epochs):
    X = np.ascontiguousarray(embedded, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidInputError("embedded matrix and labels disagree in length")
    if X.shape[0] == 0:
        raise InvalidInputError("empty training set")
    if epochs < 1:
        raise InvalidInputError("epochs must be >= 1")
    return X, y


def _run(X, y, loss, lam, epochs, seed, sched, c, radius, average, full_batch, record_history):
    n, r = X.shape
    a = np.zeros(r)
    avg = np.zeros(r)
    history = []
    rng = np.random.default_rng(seed)
    for ep in range(epochs):
        if full_batch:
            a = _full_batch_step(X, y, a, ep + 1, lam, loss.code, sched, c, radius)
            avg += (a - avg) / (ep + 1)
        else:
            order = rng.integers(0, n, size=n)
            bad = _sgd_epoch(X, y, order, a, avg, ep * n, lam, loss.code, sched, c, radius)
            if bad >= 0:
                raise NumericalDivergenceError(bad)
        if record_history:
            history.append(objective(loss, X, y, avg if average else a, lam))
    w = avg.copy() if average else a
    return w, history


def train_penalized(
    embedded,
    labels,
    loss,
    lam,
    epochs=10,
    seed=0,
    schedule="pegasos",
    step_scale=None,
    average=False,
    full_batch=False,
    project=True,
    record_history=True,
):
    """Minimize ``mean(loss) + lam * ||a||^2`` by stochastic subgradient steps.

    ``epochs * n`` steps with uniformly sampled indices and ``eta_t = 1/(2 lam t)``.
    Iterates are projected onto the ball of radius ``sqrt(ell0 / lam)``, which
    contains the minimizer. The last iterate is returned unless ``average``.
    """
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    if schedule not in SCHEDULES:
        raise InvalidInputError(f"unknown schedule {schedule!r}")
    X, y = _check_inputs(embedded, labels, epochs)
    sched = SCHEDULES.index(schedule)
    c = 1.0 if step_scale is None else float(step_scale)
    radius = math.sqrt(loss.ell0 / lam) if project else -1.0
    w, history = _run(X, y, loss, lam, epochs, seed, sched, c, radius, average, full_batch, record_history)
    obj = history[-1] if history else objective(loss, X, y, w, lam)
    return TrainedModel(w, float(lam), loss, None, int(epochs), obj, None, history)


def default_step_scale(embedded, radius, loss):
    xmax = float(np.max(np.linalg.norm(embedded, axis=1))) if len(embedded) else 0.0
    if xmax == 0.0:
        return 1.0
    return radius / (loss.lipschitz * xmax)


def train_constrained(
    embedded,
    labels,
    loss,
    radius,
    epochs=10,
    seed=0,
    schedule="sqrt",
    step_scale=None,
    average=False,
    full_batch=False,
    record_history=True,
):
    """Minimize ``mean(loss)`` over ``||a|| <= radius`` by projected steps.

    Default schedule ``eta_t = c / sqrt(t)`` with ``c = R / (G max ||x||)``.
    """
    if not radius >= 0:
        raise InvalidInputError("radius must be nonnegative")
    if schedule not in SCHEDULES or schedule == "pegasos":
        raise InvalidInputError("constrained training uses the 'sqrt' schedule")
    X, y = _check_inputs(embedded, labels, epochs)
    if radius == 0:
        w = np.zeros(X.shape[1])
        obj = objective(loss, X, y, w, 0.0)
        return TrainedModel(w, 0.0, loss, None, int(epochs), obj, 0.0, [obj] * epochs)
    if step_scale is not None:
        c = float(step_scale)
    else:
        # an infinite ball has no natural scale; fall back to R = 1
        c = default_step_scale(X, radius if math.isfinite(radius) else 1.0, loss)
    R = float(radius) if math.isfinite(radius) else -1.0
    w, history = _run(X, y, loss, 0.0, epochs, seed, 1, c, R, average, full_batch, record_history)
    obj = history[-1] if history else objective(loss, X, y, w, 0.0)
    return TrainedModel(w, 0.0, loss, None, int(epochs), obj, float(radius), history)


def decision_scores(model, embedded, clip=False):
    s = np.asarray(embedded, dtype=np.float64) @ model.weights
    if clip:
        M = model.loss.clip
        s = np.clip(s, -M, M)
    return s


def predict(model, X, clip=False, batch_size=None):
    """Scores ``<a, embed(x)>`` for raw points; needs ``model.nmap``."""
    from .nystrom import embed

    if model.nmap is None:
        raise InvalidInputError("model has no Nystrom map attached")
    Z = embed(model.nmap, X, batch_size=batch_size)
    return decision_scores(model, Z, clip=clip)


def labels_from_scores(scores):
    """sign(score) with sign(0) = +1."""
    return np.where(np.asarray(scores) >= 0, 1.0, -1.0)


def classification_error(predictions, labels):
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if p.size == 0:
        raise InvalidInputError("empty input")
    if p.shape != y.shape:
        raise InvalidInputError("predictions and labels differ in length")
    return float(np.mean(labels_from_scores(p) != labels_from_scores(y)))
