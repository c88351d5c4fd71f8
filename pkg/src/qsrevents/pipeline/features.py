"""Seven per-segment feature representations built from factor models.

The event model is factorised into a rig model, one model per object, an
object-pair model and one rig-object model per object.  Each factor model
contributes quantitative difference vectors and qualitative relations
between designated point pairs.
"""
import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .. import calculi
from ..config import PipelineConfig
from ..exceptions import InvalidInputError
from ..geometry import TimedPoint, pca_fit
from .session import OBJECTS, RIG

FRAME_KINDS = ("3D-Raw", "3D-Quant", "2D-Quant", "3D-Qual", "2D-Qual")
EVENT_KINDS = ("3D-Event-Qual", "2D-Event-Qual")
KINDS = FRAME_KINDS + EVENT_KINDS


class FactorModel(NamedTuple):
    """One factor of the event model.

    ``points`` are the derived point names pooled for the PCA embedding,
    ``vectors`` are (from, to) pairs giving quantitative difference vectors
    and ``pairs`` are (reference set, target set) pairs fed to the calculi.
    """

    kind: str
    name: str
    points: tuple
    vectors: tuple
    pairs: tuple


def _markers(obj):
    return tuple(f"{obj}.c{i}" for i in range(4))


def factor_models(objects=OBJECTS):
    rig = ("R.sm", "R.hl", "R.hr")
    models = [FactorModel("rig", "R", rig,
                          (("R.sm", "R.hl"), ("R.sm", "R.hr"), ("R.hl", "R.hr")),
                          ((("R.sm",), ("R.hl",)), (("R.sm",), ("R.hr",)), (("R.hl",), ("R.hr",))))]
    for obj in objects:
        m = _markers(obj)
        models.append(FactorModel("object", obj, m, ((m[0], m[2]), (m[1], m[3])),
                                  (((m[0],), (m[2],)), ((m[1],), (m[3],)))))
    a, b = objects
    models.append(FactorModel("object-pair", a + b, _markers(a) + _markers(b),
                              ((f"{a}.ctr", f"{b}.ctr"),), ((_markers(a), _markers(b)),)))
    for obj in objects:
        m = _markers(obj)
        models.append(FactorModel("rig-object", "R" + obj, rig + m,
                                  tuple((p, f"{obj}.ctr") for p in rig),
                                  ((m, ("R.hl",)), (m, ("R.hr",)))))
    return tuple(models)


FACTOR_MODELS = factor_models()
FACTOR_NAMES = tuple(m.name for m in FACTOR_MODELS)


def _add_centroids(pts):
    for obj in OBJECTS:
        names = _markers(obj)
        if all(n in pts for n in names):
            pts[f"{obj}.ctr"] = np.mean([pts[n] for n in names], axis=0)
    return pts


def derived_points(segment):
    """Named trajectories (n_frames, 3) of the points the factor models use."""
    get = segment.point
    pts = {
        "R.sm": 0.5 * (get(f"{RIG}/shoulder_left") + get(f"{RIG}/shoulder_right")),
        "R.hl": get(f"{RIG}/hand_tip_left"),
        "R.hr": get(f"{RIG}/hand_tip_right"),
    }
    for obj in OBJECTS:
        for i in range(4):
            pts[f"{obj}.c{i}"] = get(f"{obj}/c{i}")
    return _add_centroids(pts)


def embed(model, pts):
    """Project a factor model's points onto a PCA plane fitted to all of them
    pooled over the segment's frames."""
    pca = pca_fit(np.concatenate([pts[name] for name in model.points]))
    return _add_centroids({name: pca.project(pts[name]) for name in model.points})


@dataclass(frozen=True)
class FeatureMatrix:
    kind: str
    values: np.ndarray
    legend: tuple  # (factor model, feature, symbol) per column

    @property
    def shape(self):
        return self.values.shape

    def header(self):
        return ["|".join(entry) for entry in self.legend]

    def onehot_groups(self):
        """Column indices of each one-hot block, keyed by (model, feature)."""
        if "Qual" not in self.kind:
            return {}
        groups = {}
        for j, (model, feature, _) in enumerate(self.legend):
            if feature.startswith("diff:") or "qtc3d-angle" in feature:
                continue
            groups.setdefault((model, feature), []).append(j)
        return groups

    def to_csv(self, comment=""):
        buf = io.StringIO()
        buf.write(f"# kind={self.kind}{'; ' + comment if comment else ''}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        for row in self.values:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def read_feature_csv(text):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# kind="):
        raise InvalidInputError("feature CSV must start with a '# kind=' comment line")
    kind = lines[0][len("# kind="):].split(";")[0].strip()
    rows = list(csv.reader(lines[1:]))
    legend = tuple(tuple(h.split("|", 2)) for h in rows[0])
    values = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    return FeatureMatrix(kind, values.reshape(-1, len(legend)), legend)


# ---------------------------------------------------------------------------
# quantitative


def raw_features(segment):
    n = len(segment.times)
    legend = tuple((pid.split("/")[0], "raw", f"{pid}.{axis}") for pid in segment.point_ids for axis in "xyz")
    return FeatureMatrix("3D-Raw", segment.positions.reshape(n, -1).copy(), legend)


def quant_features(segment, dim=3):
    pts3 = derived_points(segment)
    cols, legend = [], []
    for model in FACTOR_MODELS:
        pts = pts3 if dim == 3 else embed(model, pts3)
        for a, b in model.vectors:
            cols.append(pts[b] - pts[a])
            legend += [(model.name, f"vec[{a}>{b}]", axis) for axis in "xyz"[:dim]]
    return FeatureMatrix(f"{dim}D-Quant", np.concatenate(cols, axis=1), tuple(legend))


# ---------------------------------------------------------------------------
# qualitative


def _onehot(value, symbols):
    row = np.zeros(len(symbols))
    row[symbols.index(value)] = 1.0
    return row


def _pair_name(ref, tgt):
    def short(names):
        return names[0] if len(names) == 1 else names[0].split(".")[0]
    return f"{short(ref)}>{short(tgt)}"


def _block_legend(model, feature, symbols):
    return [(model, feature, s if isinstance(s, str) else "".join(s)) for s in symbols]


def _qual_pair(model, ref, tgt, pts, times, cfg, dim):
    """Per-frame one-hot relations between one (reference, target) pair.

    Motion relations use the previous frame (and the one before it for the
    3D trajectory frames); the first frame gets the zero-motion state.
    """
    ref_pts = np.stack([pts[r] for r in ref], axis=1)
    tgt_pts = np.stack([pts[t] for t in tgt], axis=1)
    k, l = ref_pts.mean(axis=1), tgt_pts.mean(axis=1)
    qtc, nb = cfg.qtc, cfg.max_bins
    bins = tuple(range(nb))
    frame_kw = dict(eps_speed=cfg.eps_speed, eps_curvature=cfg.eps_curvature)
    continuous = dim == 3 and cfg.qtc3d_angles == "continuous"
    rows = []
    for i in range(len(times)):
        if dim == 3:
            cd = calculi.cardir3d(ref_pts[i], tgt_pts[i])
        else:
            cd = calculi.cardir2d(k[i], l[i], cfg.eps_pos)
        angles = None
        if i == 0:
            mk = ml = "static"
            q = ("0",) * 4 if dim == 2 else ("0", "0", "deg", "deg", "deg")
        else:
            dt = times[i] - times[i - 1]
            mk = calculi.mos(k[i - 1], k[i], dt, cfg.v_min)
            ml = calculi.mos(l[i - 1], l[i], dt, cfg.v_min)
            if dim == 2:
                q = tuple(calculi.qtc_c(k[i - 1], k[i], l[i - 1], l[i], qtc, cfg.eps_pos))
            elif i == 1:
                q = calculi.qtc_radial(k[0], k[1], l[0], l[1], qtc, cfg.eps_pos) + ("deg",) * 3
            else:
                kh = [TimedPoint(times[j], k[j]) for j in (i - 2, i - 1, i)]
                lh = [TimedPoint(times[j], l[j]) for j in (i - 2, i - 1, i)]
                q = tuple(calculi.qtc_3d(kh, lh, qtc, cfg.eps_pos, **frame_kw))
                if continuous:
                    angles = calculi.qtc_3d_angles(kh, lh, **frame_kw)
        d = calculi.argd_bin(float(np.linalg.norm(l[i] - k[i])), cfg.bin_width, nb).index
        parts = [_onehot(cd, calculi.CARDIR_3D if dim == 3 else calculi.CARDIR_2D),
                 _onehot(mk, calculi.MOS), _onehot(ml, calculi.MOS), _onehot(d, bins)]
        parts += [_onehot(s, calculi.QTC_SIGNS) for s in q[:2 if dim == 3 else 4]]
        if dim == 3 and not continuous:
            parts += [_onehot(s, calculi.ANGLE_SIGNS) for s in q[2:]]
        elif continuous:
            parts.append(np.array([0.0, 0.0, 0.0, 1.0]) if angles is None else np.array([*angles, 0.0]))
        rows.append(np.concatenate(parts))

    name = _pair_name(ref, tgt)
    cardir = f"cardir{dim}d[{name}]"
    legend = (_block_legend(model, cardir, calculi.CARDIR_3D if dim == 3 else calculi.CARDIR_2D)
              + _block_legend(model, f"mos[{name}]#k", calculi.MOS)
              + _block_legend(model, f"mos[{name}]#l", calculi.MOS)
              + [(model, f"argd[{name}]", str(b)) for b in bins])
    qname = f"qtc3d[{name}]" if dim == 3 else f"qtcc[{name}]"
    for slot in ("A", "B") if dim == 3 else ("A", "B", "C", "D"):
        legend += _block_legend(model, f"{qname}#{slot}", calculi.QTC_SIGNS)
    if dim == 3 and not continuous:
        for slot in ("yaw", "pitch", "roll"):
            legend += _block_legend(model, f"{qname}#{slot}", calculi.ANGLE_SIGNS)
    elif continuous:
        legend += [(model, f"qtc3d-angle[{name}]", s) for s in ("yaw", "pitch", "roll", "deg")]
    return np.array(rows), legend


def qual_features(segment, dim=3, config=None):
    cfg = config or PipelineConfig()
    pts3 = derived_points(segment)
    blocks, legend = [], []
    for model in FACTOR_MODELS:
        pts = pts3 if dim == 3 else embed(model, pts3)
        for ref, tgt in model.pairs:
            values, names = _qual_pair(model.name, ref, tgt, pts, segment.times, cfg, dim)
            blocks.append(values)
            legend += names
    return FeatureMatrix(f"{dim}D-Qual", np.concatenate(blocks, axis=1), tuple(legend))


def event_features(frame_matrix):
    """Summarise a frame-level matrix as first row | last row | difference."""
    first, last = frame_matrix.values[0], frame_matrix.values[-1]
    values = np.concatenate([first, last, last - first])[None, :]
    legend = tuple((m, f"{tag}:{f}", s) for tag in ("first", "last", "diff") for m, f, s in frame_matrix.legend)
    kind = frame_matrix.kind.replace("-Qual", "-Event-Qual")
    return FeatureMatrix(kind, values, legend)


def extract(kind, segment, config=None):
    """Compute one of the seven feature kinds for a segment."""
    if kind not in KINDS:
        raise InvalidInputError(f"unknown feature kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    if kind == "3D-Raw":
        return raw_features(segment)
    dim = 3 if kind.startswith("3D") else 2
    if kind.endswith("-Quant"):
        return quant_features(segment, dim)
    frame = qual_features(segment, dim, config)
    return event_features(frame) if kind in EVENT_KINDS else frame


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Turn segments into a stacked feature array.

    Parameters
    ----------
    kind : str, default="2D-Qual"
        One of ``KINDS``.
    config : PipelineConfig or None
        Calculus thresholds; defaults are used when None.

    ``transform`` returns shape (n_segments, n_frames, n_features) for
    frame-level kinds and (n_segments, n_features) for event-level kinds.
    """

    def __init__(self, kind="2D-Qual", config=None):
        self.kind = kind
        self.config = config

    def fit(self, segments, y=None):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown feature kind {self.kind!r}; valid kinds: {', '.join(KINDS)}")
        segments = list(segments)
        if not segments:
            raise InvalidInputError("no segments to fit on")
        self.legend_ = extract(self.kind, segments[0], self.config).legend
        self.n_features_out_ = len(self.legend_)
        return self

    def transform(self, segments):
        check_is_fitted(self, "legend_")
        mats = [extract(self.kind, s, self.config) for s in segments]
        for m in mats:
            if m.legend != self.legend_:
                raise InvalidInputError("segment schema differs from the fitted schema")
        out = np.stack([m.values for m in mats])
        return out[:, 0, :] if self.kind in EVENT_KINDS else out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "legend_")
        return np.array(["|".join(e) for e in self.legend_], dtype=object)
