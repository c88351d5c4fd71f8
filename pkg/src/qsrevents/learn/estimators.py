"""scikit-learn style classifiers: neural emission scores decoded by the tree CRF."""
import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ..exceptions import InvalidInputError
from ..labels import SLOTS, LabelTuple, decode_labels, encode_labels, satisfies_constraints
from .crf import TABLES, TreeCrfWeights, constraint_masks, crf_decode, crf_loss_grad
from .networks import SEQ_LEN, LstmModel, MlpModel

GRID = {
    "n_layers": [1, 2],
    "hidden": [200, 400],
    "lr": [0.05, 0.1, 0.2, 0.5],
    "keep_prob": [0.5, 0.6, 0.8],
    "decay": [0.94, 0.95, 0.96],
}
DEFAULT_EPOCHS = {"lstm": 200, "mlp": 500}


@dataclass(frozen=True)
class Hyperparameters:
    n_layers: int = 1
    hidden: int = 200
    lr: float = 0.1
    keep_prob: float = 0.8
    decay: float = 0.95
    epochs: int = None
    batch_size: int = 16
    clip_norm: float = 5.0
    seed: int = 0

    def check_grid(self):
        for name, values in GRID.items():
            if getattr(self, name) not in values:
                raise InvalidInputError(f"{name}={getattr(self, name)} is outside the grid {values}")
        return self

    def estimator_params(self, model="lstm"):
        params = asdict(self)
        params["random_state"] = params.pop("seed")
        if params["epochs"] is None:
            params["epochs"] = DEFAULT_EPOCHS[model]
        return params


@dataclass
class TrainReport:
    loss: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)

    def append(self, loss, grad_norm):
        self.loss.append(float(loss))
        self.grad_norm.append(float(grad_norm))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "grad_norm"])
        for e, (l, g) in enumerate(zip(self.loss, self.grad_norm)):
            w.writerow([e, repr(l), repr(g)])
        return buf.getvalue()


def as_label_codes(y):
    """Label tuples, dicts or an (n, 5) integer array -> (n, 5) integer codes."""
    if isinstance(y, np.ndarray) and y.dtype.kind in "iu":
        codes = y.reshape(-1, len(SLOTS))
        decode_labels(codes)  # range check
        return codes.astype(np.int64)
    y = [LabelTuple.from_dict(v) if isinstance(v, dict) else v for v in y]
    return encode_labels(y)


class _CrfClassifier(BaseEstimator):
    _model_kind = None

    def _check_X(self, X, fitted=True):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != self._ndim:
            raise InvalidInputError(f"expected a {self._ndim}-D feature array, got shape {X.shape}")
        if X.shape[0] == 0:
            raise InvalidInputError("empty feature array")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("features must be finite")
        if fitted and X.shape[-1] != self.n_features_in_:
            raise InvalidInputError(f"expected {self.n_features_in_} features, got {X.shape[-1]}")
        return X

    def _masks(self):
        return constraint_masks() if self.hard_constraints else {}

    def _parameters(self):
        params = dict(self.net_.params)
        params.update({f"crf.{n}": getattr(self.crf_, n) for n in TABLES})
        return params

    def fit(self, X, y):
        X = self._check_X(X, fitted=False)
        codes = as_label_codes(y)
        if len(codes) != len(X):
            raise InvalidInputError("X and y have different lengths")
        if self.hard_constraints and not all(satisfies_constraints(t) for t in decode_labels(codes)):
            raise InvalidInputError("a gold tuple violates the hard constraints")
        self.n_features_in_ = X.shape[-1]
        dtype = np.dtype(self.dtype)
        init_ss, shuffle_ss, drop_ss = np.random.SeedSequence(self.random_state).spawn(3)
        init_rng = np.random.default_rng(init_ss)
        self.net_ = self._make_net(X.shape[-1], init_rng, dtype)
        self.crf_ = TreeCrfWeights.zeros(masks=self._masks())
        for name in TABLES:
            setattr(self.crf_, name, init_rng.uniform(-self.init_scale, self.init_scale,
                                                      size=getattr(self.crf_, name).shape))
        shuffle_rng = np.random.default_rng(shuffle_ss)
        drop_rng = np.random.default_rng(drop_ss)
        params = self._parameters()
        X = X.astype(dtype)
        self.report_ = TrainReport()
        n = len(X)
        for epoch in range(self.epochs):
            lr = self.lr * self.decay ** epoch
            order = shuffle_rng.permutation(n)
            total, norms = 0.0, []
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                scores, cache = self.net_.forward(X[idx], True, drop_rng)
                loss, dscores, dtables = crf_loss_grad(scores, self.crf_, codes[idx])
                grads = self.net_.backward(cache, dscores)
                for name, g in dtables.items():
                    mask = self.crf_.masks.get(name)
                    grads[f"crf.{name}"] = g if mask is None else np.where(mask, g, 0.0)
                norm = np.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
                scale = lr * min(1.0, self.clip_norm / norm) if norm > 0 else lr
                for key, g in grads.items():
                    params[key] -= (scale * g).astype(params[key].dtype, copy=False)
                total += loss * len(idx)
                norms.append(norm)
            self.report_.append(total / n, np.mean(norms))
        return self

    def decision_scores(self, X):
        X = self._check_X(X)
        scores, _ = self.net_.forward(X.astype(self.dtype))
        return [s.astype(np.float64) for s in scores]

    def predict_codes(self, X):
        codes, _ = crf_decode(self.decision_scores(X), self.crf_, constrained=self.hard_constraints)
        return codes

    def predict(self, X):
        return decode_labels(self.predict_codes(X))

    def score(self, X, y):
        """All-slot precision: the fraction of instances whose whole tuple is right."""
        return float(np.mean(np.all(self.predict_codes(X) == as_label_codes(y), axis=1)))


class LstmCrfClassifier(_CrfClassifier):
    """Five per-slot LSTM stacks over 20-frame sequences, decoded by the tree CRF."""

    _model_kind = "lstm"
    _ndim = 3

    def __init__(self, hidden=200, n_layers=1, input_size=None, lr=0.1, keep_prob=0.8, decay=0.95,
                 epochs=200, batch_size=16, clip_norm=5.0, init_scale=0.1, hard_constraints=False,
                 dtype="float64", random_state=0):
        self.hidden = hidden
        self.n_layers = n_layers
        self.input_size = input_size
        self.lr = lr
        self.keep_prob = keep_prob
        self.decay = decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.init_scale = init_scale
        self.hard_constraints = hard_constraints
        self.dtype = dtype
        self.random_state = random_state

    def _check_X(self, X, fitted=True):
        X = super()._check_X(X, fitted)
        if X.shape[1] != SEQ_LEN:
            raise InvalidInputError(f"expected {SEQ_LEN} frames per segment, got {X.shape[1]}")
        return X

    def _make_net(self, n_in, rng, dtype):
        return LstmModel.create(n_in, self.hidden, self.n_layers, self.input_size, self.keep_prob,
                                rng, self.init_scale, dtype=dtype)


class MlpCrfClassifier(_CrfClassifier):
    """ReLU network over event-level rows, decoded by the tree CRF."""

    _model_kind = "mlp"
    _ndim = 2

    def __init__(self, hidden=200, n_layers=1, lr=0.1, keep_prob=0.8, decay=0.95, epochs=500,
                 batch_size=16, clip_norm=5.0, init_scale=0.1, hard_constraints=False,
                 dtype="float64", random_state=0):
        self.hidden = hidden
        self.n_layers = n_layers
        self.lr = lr
        self.keep_prob = keep_prob
        self.decay = decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.init_scale = init_scale
        self.hard_constraints = hard_constraints
        self.dtype = dtype
        self.random_state = random_state

    def _make_net(self, n_in, rng, dtype):
        return MlpModel.create(n_in, self.hidden, self.n_layers, self.keep_prob, rng,
                               self.init_scale, dtype=dtype)


ESTIMATORS = {"lstm": LstmCrfClassifier, "mlp": MlpCrfClassifier}


def model_for_kind(kind):
    """Event-level feature kinds get the MLP, frame-level kinds the LSTM."""
    return "mlp" if "Event" in kind else "lstm"


def make_estimator(model, hp=None, **overrides):
    hp = hp or Hyperparameters()
    params = hp.estimator_params(model)
    params.update(overrides)
    return ESTIMATORS[model](**params)


def train(dataset, hp=None, model=None):
    """Fit a classifier on ``(FeatureMatrix, LabelTuple)`` pairs.

    Returns the fitted estimator and its :class:`TrainReport`.
    """
    if not dataset:
        raise InvalidInputError("empty dataset")
    kinds = {fm.kind for fm, _ in dataset}
    if len(kinds) != 1:
        raise InvalidInputError(f"mixed feature kinds: {sorted(kinds)}")
    kind = kinds.pop()
    model = model or model_for_kind(kind)
    values = [np.asarray(fm.values) for fm, _ in dataset]
    X = np.stack([v.reshape(-1) for v in values]) if model == "mlp" else np.stack(values)
    est = make_estimator(model, hp).fit(X, [label for _, label in dataset])
    est.feature_kind_ = kind
    return est, est.report_


__all__ = ["DEFAULT_EPOCHS", "ESTIMATORS", "GRID", "Hyperparameters", "LstmCrfClassifier",
           "MlpCrfClassifier", "TrainReport", "as_label_codes", "make_estimator", "model_for_kind",
           "train"]
