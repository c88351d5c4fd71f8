"""Metrics, session-level folds and grid-searched cross-validation."""
import csv
import io
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import ParameterGrid

from ..config import PipelineConfig
from ..exceptions import InvalidInputError
from ..labels import SLOTS
from ..pipeline import EVENT_KINDS, KINDS, event_features, extract, preprocess, qual_features
from .estimators import DEFAULT_EPOCHS, ESTIMATORS, as_label_codes, model_for_kind

XVAL_GRID = {"lr": [0.1, 0.5], "hidden": [200]}


def precision(pred, gold):
    """All-slot and per-slot precision of predicted label codes."""
    pred, gold = as_label_codes(pred), as_label_codes(gold)
    if len(gold) == 0:
        raise InvalidInputError("cannot evaluate on an empty dataset")
    if pred.shape != gold.shape:
        raise InvalidInputError("prediction and gold sizes differ")
    hit = pred == gold
    return {
        "all_slot_precision": float(np.mean(np.all(hit, axis=1))),
        "per_slot": {slot: float(v) for slot, v in zip(SLOTS, hit.mean(axis=0))},
        "n": int(len(gold)),
    }


def evaluate(model, X, y):
    return precision(model.predict_codes(X), y)


def session_folds(session_ids, n_folds=5, seed=0):
    """Partition unique session ids into ``n_folds`` groups differing in size by at most one."""
    ids = sorted(set(session_ids))
    if len(ids) < n_folds:
        raise InvalidInputError(f"need at least {n_folds} sessions for {n_folds}-fold splits, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    return [sorted(ids[i] for i in part) for part in np.array_split(order, n_folds)]


@dataclass
class Dataset:
    """Segment features of several kinds over a shared list of labelled segments."""

    session_ids: np.ndarray
    codes: np.ndarray
    features: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.codes)


def build_dataset(sessions, kinds=KINDS, config=None):
    """Preprocess sessions and extract every requested kind once."""
    config = config or PipelineConfig()
    unknown = [k for k in kinds if k not in KINDS]
    if unknown:
        raise InvalidInputError(f"unknown feature kinds {unknown}; valid kinds: {', '.join(KINDS)}")
    segments = [seg for s in sessions
                for seg in preprocess(s, config.rate_hz, config.segment_frames)]
    if not segments:
        raise InvalidInputError("no complete segments in the given sessions")
    features = {}
    frame_cache = {}
    for kind in kinds:
        rows = []
        for i, seg in enumerate(segments):
            if kind in EVENT_KINDS:
                dim = 3 if kind.startswith("3D") else 2
                key = (i, dim)
                if key not in frame_cache:
                    frame_cache[key] = qual_features(seg, dim, config)
                rows.append(event_features(frame_cache[key]).values)
            else:
                fm = extract(kind, seg, config)
                if kind.endswith("-Qual"):
                    frame_cache[(i, 3 if kind.startswith("3D") else 2)] = fm
                rows.append(fm.values)
        features[kind] = np.stack(rows)
    return Dataset(np.array([seg.session_id for seg in segments]),
                   as_label_codes([seg.label for seg in segments]), features)


def _fit_fold(kind, params, X_train, y_train, X_test, y_test):
    est = ESTIMATORS[model_for_kind(kind)](**params).fit(X_train, y_train)
    return precision(est.predict_codes(X_test), y_test)


@dataclass
class KindResult:
    kind: str
    model: str
    params: dict
    fold_precision: list
    per_slot: dict
    grid_means: list

    @property
    def mean(self):
        return float(np.mean(self.fold_precision))

    @property
    def sd(self):
        return float(np.std(self.fold_precision, ddof=1)) if len(self.fold_precision) > 1 else 0.0


@dataclass
class XvalReport:
    rows: list
    folds: list
    seed: int

    def row(self, kind):
        for r in self.rows:
            if r.kind == kind:
                return r
        raise KeyError(kind)

    def best(self):
        return max(self.rows, key=lambda r: r.mean)

    def precision_table(self):
        return {r.kind: (r.mean, r.sd) for r in self.rows}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "model", "mean_precision", "sd_precision", *[f"fold{i}" for i in range(len(self.folds))],
                    *SLOTS, "selected"])
        for r in self.rows:
            sel = ";".join(f"{k}={v}" for k, v in sorted(r.params.items()))
            w.writerow([r.kind, f"{r.model.upper()}-CRF", f"{r.mean:.6f}", f"{r.sd:.6f}",
                        *[f"{p:.6f}" for p in r.fold_precision], *[f"{r.per_slot[s]:.6f}" for s in SLOTS], sel])
        return buf.getvalue()

    def format_table(self):
        lines = [f"{'feature kind':<16} {'model':<9} {'precision':>16}"]
        for r in self.rows:
            lines.append(f"{r.kind:<16} {r.model.upper() + '-CRF':<9} {100 * r.mean:>7.1f}% ± {100 * r.sd:4.1f}")
        best = self.best()
        lines += ["", f"per-slot precision, {best.kind}"]
        lines += [f"  {slot:<12} {100 * best.per_slot[slot]:5.1f}%" for slot in SLOTS]
        lines.append(f"  {'all slots':<12} {100 * best.mean:5.1f}%")
        return "\n".join(lines)


def cross_validate(data, kinds=None, grid=None, seed=0, n_folds=5, n_jobs=1, epochs=None, **estimator_params):
    """Grid search with session-level k-fold cross-validation for each feature kind.

    For every grid point the mean all-slot precision over the held-out folds
    is computed; the grid point with the highest mean is reported.  Every
    training run gets its own seed derived from ``seed``, the kind, the grid
    index and the fold, so results do not depend on ``n_jobs``.
    """
    kinds = list(kinds or data.features)
    grid = XVAL_GRID if grid is None else grid
    epochs = {**DEFAULT_EPOCHS, **(epochs or {})}
    folds = session_folds(data.session_ids, n_folds, seed)
    points = list(ParameterGrid(grid))
    jobs, keys = [], []
    for kind in kinds:
        if kind not in data.features:
            raise InvalidInputError(f"dataset has no features of kind {kind!r}")
        model = model_for_kind(kind)
        X = data.features[kind]
        if model == "mlp":
            X = X.reshape(len(X), -1)
        for gi, point in enumerate(points):
            for fi, test_ids in enumerate(folds):
                test = np.isin(data.session_ids, test_ids)
                run_seed = int(np.random.SeedSequence([seed, KINDS.index(kind), gi, fi]).generate_state(1)[0])
                params = {**estimator_params, **point, "epochs": epochs[model], "random_state": run_seed}
                jobs.append(delayed(_fit_fold)(kind, params, X[~test], data.codes[~test], X[test], data.codes[test]))
                keys.append((kind, gi, fi))
    results = Parallel(n_jobs=n_jobs)(jobs)
    by_key = dict(zip(keys, results))
    rows = []
    for kind in kinds:
        means = [float(np.mean([by_key[(kind, gi, fi)]["all_slot_precision"] for fi in range(n_folds)]))
                 for gi in range(len(points))]
        gi = int(np.argmax(means))
        fold_res = [by_key[(kind, gi, fi)] for fi in range(n_folds)]
        per_slot = {s: float(np.mean([r["per_slot"][s] for r in fold_res])) for s in SLOTS}
        rows.append(KindResult(kind, model_for_kind(kind), dict(points[gi]),
                               [r["all_slot_precision"] for r in fold_res], per_slot, means))
    return XvalReport(rows, folds, seed)


__all__ = ["XVAL_GRID", "Dataset", "KindResult", "XvalReport", "build_dataset", "cross_validate",
           "evaluate", "precision", "session_folds"]
