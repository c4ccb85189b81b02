"""Experiment orchestration: single runs, (sigma, lambda, m) grids, heatmaps.

Configs are TOML files::

    name = "usps"
    epochs = 10
    repeats = 5
    seeds = [0, 1, 2, 3, 4]
    output_dir = "results/usps"

    [data]
    train = "data/usps"
    test = "data/usps.t"        # or test_fraction = 0.2
    binarize = [2, 4, 6, 8, 10]

    [kernel]
    family = "gaussian"
    sigma = [10.0]

    [loss]
    family = "hinge"
    clip = 1.0

    [sampling]
    method = "als"
    pilot_size = 1250           # optional
    alpha = 5e-6                # optional, defaults to lambda

    [grid]
    m = [2500]
    lambda = [5e-6]

A ``[data.synth]`` table (keys of :class:`SynthSpec`) replaces ``train``.
"""

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .data import load_libsvm, load_train_test, split
from .errors import InvalidInputError
from .kernel import KernelSpec
from .nystrom import DEFAULT_TOL, embed, fit_embedding
from .sampling import als_landmarks, approximate_leverage_scores, uniform_landmarks
from .solver import (
    LossSpec,
    classification_error,
    decision_scores,
    loss_value,
    train_constrained,
    train_penalized,
)
from .synth import SynthSpec, generate

log = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "dataset",
    "method",
    "sigma",
    "lambda",
    "m",
    "m_eff_mean",
    "c_err_mean",
    "c_err_std",
    "hinge_clip_mean",
    "t_train_mean",
    "t_train_std",
    "t_pred_mean",
    "t_pred_std",
    "runs",
    "status",
]
TIMING_COLUMNS = ("t_train_mean", "t_train_std", "t_pred_mean", "t_pred_std")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    test_fraction: float = 0.2
    split_seed: int = 0
    binarize: Optional[list] = None
    synth: Optional[dict] = None
    kernel_family: str = "gaussian"
    sigmas: list = field(default_factory=lambda: [1.0])
    loss: str = "hinge"
    clip: float = 1.0
    method: str = "als"
    alpha: Optional[float] = None
    pilot_size: Optional[int] = None
    m_grid: list = field(default_factory=lambda: [100])
    lambda_grid: list = field(default_factory=lambda: [1e-3])
    epochs: int = 10
    repeats: int = 1
    seeds: Optional[list] = None
    radius: Optional[float] = None
    workers: int = 1
    output_dir: Optional[str] = None

    def validate(self):
        if not self.sigmas or not self.m_grid or not self.lambda_grid:
            raise InvalidInputError("sigma, m and lambda grids must be nonempty")
        if self.repeats < 1:
            raise InvalidInputError("repeats must be >= 1")
        if self.seeds is not None and len(self.seeds) < self.repeats:
            raise InvalidInputError("need one seed per repeat")
        if self.method not in ("uniform", "als"):
            raise InvalidInputError(f"unknown sampling method {self.method!r}")
        if self.train_path is None and self.synth is None:
            raise InvalidInputError("config needs data.train or data.synth")
        return self

    @property
    def run_seeds(self):
        return list(self.seeds[: self.repeats]) if self.seeds else list(range(self.repeats))


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def config_from_dict(d, base_dir=None):
    base = Path(base_dir) if base_dir else None

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return str(base / p) if base is not None and not p.is_absolute() else str(p)

    data = d.get("data", {})
    kernel = d.get("kernel", {})
    loss = d.get("loss", {})
    samp = d.get("sampling", {})
    grid = d.get("grid", {})
    cfg = ExperimentConfig(
        name=d.get("name", "experiment"),
        train_path=resolve(data.get("train")),
        test_path=resolve(data.get("test")),
        test_fraction=float(data.get("test_fraction", 0.2)),
        split_seed=int(data.get("split_seed", 0)),
        binarize=data.get("binarize"),
        synth=data.get("synth"),
        kernel_family=kernel.get("family", "gaussian"),
        sigmas=[float(s) for s in _as_list(kernel.get("sigma", 1.0))],
        loss=loss.get("family", "hinge"),
        clip=float(loss.get("clip", 1.0)),
        method=samp.get("method", "als"),
        alpha=samp.get("alpha"),
        pilot_size=samp.get("pilot_size"),
        m_grid=[int(m) for m in _as_list(grid.get("m", 100))],
        lambda_grid=[float(v) for v in _as_list(grid.get("lambda", 1e-3))],
        epochs=int(d.get("epochs", 10)),
        repeats=int(d.get("repeats", 1)),
        seeds=d.get("seeds"),
        radius=d.get("constrained_radius"),
        workers=int(d.get("workers", 1)),
        output_dir=resolve(d.get("output_dir")),
    )
    return cfg.validate()


def load_config(path):
    path = Path(path)
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh), base_dir=path.parent)


def load_data(cfg):
    """(train, test) per the config: synthetic, fixed test file, or seeded split."""
    if cfg.synth is not None:
        s = dict(cfg.synth)
        n_test = int(s.pop("n_test", 0))
        spec = SynthSpec(**s)
        if n_test:
            full, _ = generate(replace(spec, n=spec.n + n_test))
            idx = np.arange(full.n)
            return full.subset(idx[: spec.n], full.name), full.subset(idx[spec.n :], full.name)
        return split(generate(spec)[0], cfg.test_fraction, cfg.split_seed)
    if cfg.test_path:
        return load_train_test(cfg.train_path, cfg.test_path, binarize=cfg.binarize)
    return split(load_libsvm(cfg.train_path, binarize=cfg.binarize), cfg.test_fraction, cfg.split_seed)


def _child_seeds(seed, k):
    entropy = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return [int(s) for s in np.random.SeedSequence(entropy).generate_state(k)]


def select_landmarks(train, kernel, m, method, seed, alpha=None, pilot_size=None):
    m = min(int(m), train.n)
    if method == "uniform":
        return uniform_landmarks(train.n, m, seed)
    if alpha is None:
        raise InvalidInputError("ALS sampling needs alpha")
    pilot = pilot_size or max(1, m // 2)
    pilot = min(int(pilot), train.n)
    s_pilot, s_draw = _child_seeds(seed, 2)
    scores = approximate_leverage_scores(train, kernel, alpha, pilot, s_pilot)
    return als_landmarks(scores, m, s_draw)


def fit_pipeline(
    train,
    kernel,
    loss,
    lam,
    m,
    method="als",
    alpha=None,
    pilot_size=None,
    epochs=10,
    seed=0,
    radius=None,
    tol=DEFAULT_TOL,
    average=False,
):
    """Landmarks -> embedding -> training. Returns the model (map attached)."""
    s_land, s_train = _child_seeds(seed, 2)
    if alpha is None:
        alpha = lam
    lm = select_landmarks(train, kernel, m, method, s_land, alpha, pilot_size)
    nmap = fit_embedding(train, kernel, lm, tol=tol)
    Z = embed(nmap, train.features)
    if radius is not None:
        model = train_constrained(Z, train.labels, loss, radius, epochs=epochs, seed=s_train, average=average)
    else:
        model = train_penalized(Z, train.labels, loss, lam, epochs=epochs, seed=s_train, average=average)
    model.nmap = nmap
    return model


def evaluate(model, test, clip=True):
    t0 = time.monotonic()
    Z = embed(model.nmap, test.features)
    scores = decision_scores(model, Z, clip=clip)
    t_pred = time.monotonic() - t0
    err = classification_error(scores, test.labels)
    hinge = float(np.mean(loss_value(LossSpec("hinge"), test.labels, np.clip(scores, -1, 1))))
    return {"c_err": err, "hinge_clip": hinge, "t_pred": t_pred}


def run_single(cfg, train, test, sigma, lam, m, seed):
    kernel = KernelSpec(cfg.kernel_family, sigma)
    loss = LossSpec(cfg.loss, cfg.clip)
    t0 = time.monotonic()
    model = fit_pipeline(
        train,
        kernel,
        loss,
        lam,
        m,
        method=cfg.method,
        alpha=cfg.alpha,
        pilot_size=cfg.pilot_size,
        epochs=cfg.epochs,
        seed=seed,
        radius=cfg.radius,
    )
    t_train = time.monotonic() - t0
    res = evaluate(model, test)
    res.update(t_train=t_train, m_eff=model.nmap.landmarks.m, objective=model.objective)
    return res


def _aggregate(cfg, dataset, sigma, lam, m, runs, status):
    row = {"dataset": dataset, "method": cfg.method, "sigma": sigma, "lambda": lam, "m": m}
    if runs:
        col = lambda k: np.array([r[k] for r in runs], dtype=np.float64)  # noqa: E731
        row.update(
            m_eff_mean=float(col("m_eff").mean()),
            c_err_mean=float(col("c_err").mean()),
            c_err_std=float(col("c_err").std()),
            hinge_clip_mean=float(col("hinge_clip").mean()),
            t_train_mean=round(float(col("t_train").mean()), 3),
            t_train_std=round(float(col("t_train").std()), 3),
            t_pred_mean=round(float(col("t_pred").mean()), 3),
            t_pred_std=round(float(col("t_pred").std()), 3),
        )
    else:
        for k in RESULT_COLUMNS[5:-2]:
            row[k] = float("nan")
    row["runs"] = len(runs)
    row["status"] = status
    return row


def _run_cell(cfg, train, test, dataset, key, sigma, lam, m):
    runs, errors = [], []
    for seed in cfg.run_seeds:
        try:
            runs.append(run_single(cfg, train, test, sigma, lam, m, [int(seed), *key]))
        except Exception as exc:  # per-cell failures are recorded, not raised
            log.warning("cell sigma=%s lambda=%s m=%s seed=%s failed: %s", sigma, lam, m, seed, exc)
            errors.append(f"{type(exc).__name__}: {exc}")
    status = "ok" if not errors else "failed: " + "; ".join(sorted(set(errors)))
    return _aggregate(cfg, dataset, sigma, lam, m, runs, status)


def run_experiment(cfg, data=None):
    """Run every (sigma, lambda, m) cell for each repeat; one aggregated row per cell."""
    cfg.validate()
    train, test = data if data is not None else load_data(cfg)
    dataset = cfg.name
    cells = [
        ((i, j, k), sigma, lam, m)
        for i, sigma in enumerate(cfg.sigmas)
        for j, lam in enumerate(cfg.lambda_grid)
        for k, m in enumerate(cfg.m_grid)
    ]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_run_cell, cfg, train, test, dataset, *c) for c in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_cell(cfg, train, test, dataset, *c) for c in cells]
    return rows


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_results(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def write_summary(rows, path, extra=None):
    summary = {"cells": len(rows), "failed": sum(r["status"] != "ok" for r in rows), "rows": rows}
    if extra:
        summary.update(extra)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, default=float)


def sweep_heatmap(cfg, data=None):
    """Mean and std c-err grids, rows indexed by lambda and columns by m."""
    if len(cfg.lambda_grid) < 2 or len(cfg.m_grid) < 2:
        raise InvalidInputError("heatmap needs at least two lambda and two m values")
    if len(cfg.sigmas) != 1:
        raise InvalidInputError("heatmap uses a single sigma")
    rows = run_experiment(cfg, data=data)
    L, M = len(cfg.lambda_grid), len(cfg.m_grid)
    mean = np.full((L, M), np.nan)
    std = np.full((L, M), np.nan)
    for row in rows:
        i = cfg.lambda_grid.index(row["lambda"])
        j = cfg.m_grid.index(row["m"])
        mean[i, j] = row["c_err_mean"]
        std[i, j] = row["c_err_std"]
    return mean, std, rows


def write_grid(grid, lambdas, ms, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda\\m", *ms])
        for lam, vals in zip(lambdas, grid):
            w.writerow([repr(float(lam)), *[_fmt(float(v)) for v in vals]])
