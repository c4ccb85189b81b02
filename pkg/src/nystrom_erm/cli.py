"""Command line entry point: ``nystrom-erm {train,eval,sweep,heatmap,diagnose,synth}``."""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .data import load_libsvm, load_train_test, split, write_csv, write_libsvm
from .errors import InvalidInputError
from .experiment import (
    evaluate,
    fit_pipeline,
    load_config,
    run_experiment,
    select_landmarks,
    sweep_heatmap,
    write_grid,
    write_results,
    write_summary,
)
from .kernel import KernelSpec, gram
from .model_io import load_model, save_model
from .sampling import exact_leverage_scores
from .solver import LossSpec, classification_error, predict
from .synth import HARD_MARGIN_DEFAULT, SynthSpec, generate


def _binarize(s):
    return None if s is None else [float(v) for v in s.split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _add_data_args(p):
    p.add_argument("--train", required=True, help="LIBSVM training file")
    p.add_argument("--test", help="LIBSVM test file (otherwise a seeded split)")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--binarize", help="comma-separated raw labels mapped to +1")


def _add_model_args(p):
    p.add_argument("--kernel", choices=["gaussian", "linear"], default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--loss", choices=["hinge", "logistic"], default="hinge")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--sampling", choices=["uniform", "als"], default="als")
    p.add_argument("--alpha", type=float, help="ridge level for ALS (default: lambda)")
    p.add_argument("--pilot-size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--constrained-radius", type=float)
    p.add_argument("--clip", type=float, default=1.0, help="clip level M for prediction")


def _load_split(args):
    b = _binarize(args.binarize)
    if args.test:
        return load_train_test(args.train, args.test, binarize=b)
    return split(load_libsvm(args.train, binarize=b), args.test_fraction, args.split_seed)


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, default=float)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def cmd_train(args):
    train, test = _load_split(args)
    kernel = KernelSpec(args.kernel, args.sigma)
    loss = LossSpec(args.loss, args.clip)
    t0 = time.monotonic()
    model = fit_pipeline(
        train,
        kernel,
        loss,
        args.lam,
        args.m,
        method=args.sampling,
        alpha=args.alpha,
        pilot_size=args.pilot_size,
        epochs=args.epochs,
        seed=args.seed,
        radius=args.constrained_radius,
    )
    t_train = time.monotonic() - t0
    out = {
        "n_train": train.n,
        "m_eff": model.nmap.landmarks.m,
        "rank": model.nmap.rank,
        "objective": model.objective,
        "t_train": round(t_train, 3),
    }
    if test.n:
        out.update({k: (round(v, 3) if k == "t_pred" else v) for k, v in evaluate(model, test).items()})
    if args.model_out:
        save_model(model, args.model_out)
        out["model"] = str(args.model_out)
    _emit(out, args.json_out)
    return 0


def cmd_eval(args):
    model = load_model(args.model)
    dim = model.nmap.dim
    ds = load_libsvm(args.data, dim=None, binarize=_binarize(args.binarize))
    X = ds.features
    if dim is not None and X.shape[1] < dim:
        X = np.pad(X, ((0, 0), (0, dim - X.shape[1])))
    t0 = time.monotonic()
    scores = predict(model, X, clip=args.clip)
    t_pred = time.monotonic() - t0
    if args.scores_out:
        np.savetxt(args.scores_out, scores, fmt="%.17g")
    _emit({"n": ds.n, "c_err": classification_error(scores, ds.labels), "t_pred": round(t_pred, 3)}, args.json_out)
    return 0


def _apply_overrides(cfg, args):
    for key in ("epochs", "repeats", "workers"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    return cfg.validate()


def _out_dir(cfg):
    out = Path(cfg.output_dir or f"results/{cfg.name}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sweep(args):
    cfg = _apply_overrides(load_config(args.config), args)
    rows = run_experiment(cfg)
    out = _out_dir(cfg)
    write_results(rows, out / "results.csv")
    write_summary(rows, out / "summary.json", {"config": str(args.config)})
    for r in rows:
        print(
            f"{r['dataset']} {r['method']} sigma={r['sigma']} lambda={r['lambda']} m={r['m']}: "
            f"c-err {100 * r['c_err_mean']:.2f}% +- {100 * r['c_err_std']:.2f}% [{r['status']}]"
        )
    return int(any(r["status"] != "ok" for r in rows))


def cmd_heatmap(args):
    cfg = _apply_overrides(load_config(args.config), args)
    mean, std, rows = sweep_heatmap(cfg)
    out = _out_dir(cfg)
    write_grid(mean, cfg.lambda_grid, cfg.m_grid, out / "heatmap_mean.csv")
    write_grid(std, cfg.lambda_grid, cfg.m_grid, out / "heatmap_std.csv")
    write_results(rows, out / "results.csv")
    write_summary(rows, out / "summary.json", {"config": str(args.config)})
    print(f"wrote {out / 'heatmap_mean.csv'} and {out / 'heatmap_std.csv'}")
    return int(any(r["status"] != "ok" for r in rows))


def cmd_diagnose(args):
    ds = load_libsvm(args.data, binarize=_binarize(args.binarize))
    if args.max_points and ds.n > args.max_points:
        ds = ds.subset(np.random.default_rng(args.seed).permutation(ds.n)[: args.max_points])
    kernel = KernelSpec(args.kernel, args.sigma)
    alphas = _floats(args.alpha)
    lm = None
    if args.m:
        lm = select_landmarks(ds, kernel, args.m, args.sampling, args.seed, alphas[0], args.pilot_size)
    K = gram(kernel, ds.features)
    rows, report = diag.diagnose(ds, kernel, alphas, landmarks=lm, K=K)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    diag.write_diagnostics(rows, report, out / "diagnostics.csv", out / "diagnostics.json")
    if args.scores_out:
        exact_leverage_scores(K, alphas[0]).to_csv(args.scores_out)
    summary = {"n": ds.n, "spectrum": report.to_dict(), "rows": rows}
    if report.family != "none":
        summary["suggested_m"] = {
            regime: diag.suggest_subspace_size(ds.n, report, regime) for regime in ("basic", "fast")
        }
    _emit(summary)
    return 0


def cmd_synth(args):
    margin = args.margin
    if args.hard_margin and margin == 0.0:
        margin = HARD_MARGIN_DEFAULT
    spec = SynthSpec(
        n=args.n,
        d=args.d,
        decay=args.decay,
        p=args.p,
        beta=args.beta,
        target_norm=args.target_norm,
        noise=args.noise,
        margin=margin,
        seed=args.seed,
    )
    ds, w = generate(spec)
    write_libsvm(ds, args.out)
    if args.csv:
        write_csv(ds, args.csv)
    if args.target_out:
        np.savetxt(args.target_out, w, fmt="%.17g")
    print(f"wrote {ds.n} points (d={ds.d}) to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="nystrom-erm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one model and report test error")
    _add_data_args(p)
    _add_model_args(p)
    p.add_argument("--model-out", help="write the model (.npz or .json)")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a LIBSVM file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--binarize")
    p.add_argument("--clip", action="store_true", help="clip scores to [-M, M]")
    p.add_argument("--scores-out")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_eval)

    for name, func, help_ in (
        ("sweep", cmd_sweep, "grid over (sigma, lambda, m) from a config file"),
        ("heatmap", cmd_heatmap, "lambda x m c-err grids from a config file"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--epochs", type=int)
        p.add_argument("--repeats", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--output-dir")
        p.set_defaults(func=func)

    p = sub.add_parser("diagnose", help="effective dimensions, residual and decay fit")
    p.add_argument("--data", required=True)
    p.add_argument("--binarize")
    p.add_argument("--kernel", choices=["gaussian", "linear"], default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", default="1e-3", help="comma-separated alpha grid")
    p.add_argument("--m", type=int, help="also report the projection residual for m landmarks")
    p.add_argument("--sampling", choices=["uniform", "als"], default="als")
    p.add_argument("--pilot-size", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-points", type=int, default=4000, help="subsample before forming K")
    p.add_argument("--scores-out", help="CSV of exact leverage scores at the first alpha")
    p.add_argument("--out-dir", default="diagnostics")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("synth", help="generate a synthetic LIBSVM dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--decay", choices=["polynomial", "exponential"], default="polynomial")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--target-norm", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--hard-margin", action="store_true", help=f"reject |<w*,x>| < {HARD_MARGIN_DEFAULT}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.add_argument("--target-out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
