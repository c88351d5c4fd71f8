"""Versioned JSON checkpoints for fitted classifiers."""
import json

import numpy as np

from ..exceptions import InvalidInputError
from ..labels import SLOTS, VOCABULARIES
from .crf import TABLES, TreeCrfWeights, constraint_masks
from .estimators import ESTIMATORS
from .networks import LstmModel, MlpModel

FORMAT_VERSION = 1


def _pack(arr):
    arr = np.asarray(arr)
    return {"shape": list(arr.shape), "dtype": str(arr.dtype), "data": arr.ravel().tolist()}


def _unpack(d):
    return np.asarray(d["data"], dtype=d.get("dtype", "float64")).reshape(d["shape"])


def checkpoint_dict(est):
    model = est._model_kind
    weights = {k: _pack(v) for k, v in est.net_.params.items()}
    weights.update({f"crf.{n}": _pack(getattr(est.crf_, n)) for n in TABLES})
    return {
        "format_version": FORMAT_VERSION,
        "kind": f"{model}-crf",
        "feature_kind": getattr(est, "feature_kind_", None),
        "n_features_in": int(est.n_features_in_),
        "hyperparameters": est.get_params(),
        "vocabularies": {s: list(VOCABULARIES[s]) for s in SLOTS},
        "weights": weights,
    }


def save_checkpoint(est, path):
    with open(path, "w") as f:
        json.dump(checkpoint_dict(est), f, sort_keys=True)


def from_checkpoint_dict(d):
    if d.get("format_version") != FORMAT_VERSION:
        raise InvalidInputError(f"unsupported checkpoint version {d.get('format_version')!r}")
    if d.get("vocabularies") != {s: list(VOCABULARIES[s]) for s in SLOTS}:
        raise InvalidInputError("checkpoint vocabularies do not match this build")
    model = d["kind"].split("-")[0]
    if model not in ESTIMATORS:
        raise InvalidInputError(f"unknown model kind {d['kind']!r}")
    est = ESTIMATORS[model](**d["hyperparameters"])
    weights = {k: _unpack(v) for k, v in d["weights"].items()}
    net_params = {k: v for k, v in weights.items() if not k.startswith("crf.")}
    n_in = int(d["n_features_in"])
    if model == "lstm":
        net = LstmModel(n_in, net_params["in.W"].shape[1], est.hidden, est.n_layers, net_params, est.keep_prob)
    else:
        sizes = (n_in,) + tuple(net_params[f"mlp{j}.W"].shape[1] for j in range(len(net_params) // 2))
        net = MlpModel(sizes, net_params, est.keep_prob)
    est.net_ = net.validate()
    masks = constraint_masks() if est.hard_constraints else {}
    est.crf_ = TreeCrfWeights(*(weights[f"crf.{n}"] for n in TABLES), masks=masks)
    est.n_features_in_ = n_in
    est.feature_kind_ = d.get("feature_kind")
    return est


def load_checkpoint(path):
    with open(path) as f:
        return from_checkpoint_dict(json.load(f))


__all__ = ["FORMAT_VERSION", "checkpoint_dict", "from_checkpoint_dict", "load_checkpoint", "save_checkpoint"]
