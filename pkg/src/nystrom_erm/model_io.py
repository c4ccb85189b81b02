"""Versioned model files: ``.npz`` (binary) or ``.json``.

Both hold the kernel spec, loss, lambda, clip level, weights and the Nystrom
map (landmark points + inverse-square-root factor), so a saved model predicts
without the training set.
"""

import io
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .kernel import KernelSpec
from .nystrom import map_from_arrays, map_to_arrays
from .solver import LossSpec, TrainedModel

FORMAT = "nystrom-erm-model"
VERSION = 1


def _meta(model):
    nmap = model.nmap
    lm = nmap.landmarks
    return {
        "format": FORMAT,
        "version": VERSION,
        "kernel": nmap.spec.to_dict(),
        "loss": {"family": model.loss.family, "clip": model.loss.clip},
        "lambda": model.lam,
        "radius": model.radius,
        "epochs": model.epochs,
        "objective": model.objective,
        "sampling": {"method": lm.method, "seed": lm.seed, "alpha": lm.alpha},
        "tol": nmap.tol,
    }


def save_model(model, path):
    if model.nmap is None:
        raise InvalidInputError("cannot save a model without its Nystrom map")
    path = Path(path)
    meta = _meta(model)
    arrays = map_to_arrays(model.nmap)
    arrays["weights"] = model.weights
    if path.suffix.lower() == ".json":
        meta["arrays"] = {k: np.asarray(v).tolist() for k, v in arrays.items()}
        path.write_text(json.dumps(meta))
    else:
        buf = io.BytesIO()
        np.savez(buf, meta=np.array(json.dumps(meta)), **arrays)
        path.write_bytes(buf.getvalue())


def load_model(path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        meta = json.loads(path.read_text())
        arrays = {k: np.asarray(v) for k, v in meta.pop("arrays").items()}
    else:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {k: z[k] for k in z.files if k != "meta"}
    if meta.get("format") != FORMAT:
        raise InvalidInputError(f"{path} is not a model file")
    if meta.get("version") != VERSION:
        raise InvalidInputError(f"unsupported model version {meta.get('version')}")
    spec = KernelSpec.from_dict(meta["kernel"])
    arrays["landmark_indices"] = arrays["landmark_indices"].astype(np.int64)
    arrays["landmark_points"] = arrays["landmark_points"].reshape(len(arrays["landmark_indices"]), -1)
    m = len(arrays["landmark_indices"])
    arrays["factor"] = arrays["factor"].reshape(-1, m)
    arrays["Km"] = arrays["Km"].reshape(m, m)
    arrays["eigvecs"] = arrays["eigvecs"].reshape(m, m)
    s = meta["sampling"]
    nmap = map_from_arrays(spec, arrays, s["method"], s.get("seed"), s.get("alpha"), meta["tol"])
    loss = LossSpec(meta["loss"]["family"], meta["loss"]["clip"])
    return TrainedModel(
        np.asarray(arrays["weights"], dtype=np.float64),
        meta["lambda"],
        loss,
        nmap,
        meta["epochs"],
        meta["objective"],
        meta["radius"],
    )
