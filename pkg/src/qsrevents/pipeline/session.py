"""Sessions, segments and preprocessing (gap filling, resampling, slicing)."""
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..exceptions import BoundaryExtrapolationError, InvalidInputError
from ..labels import NULL_LABEL, LabelTuple

RIG = "performer"
RIG_JOINTS = ("shoulder_left", "shoulder_right", "hand_tip_left", "hand_tip_right")
OBJECTS = ("O1", "O2")
MARKERS = ("c0", "c1", "c2", "c3")
DEFAULT_SCHEMA = {RIG: RIG_JOINTS, "O1": MARKERS, "O2": MARKERS}


class Span(NamedTuple):
    start_t: float
    end_t: float
    label: LabelTuple


@dataclass(frozen=True)
class Session:
    """One recording: named 3D points sampled at increasing timestamps.

    ``positions`` has shape (n_frames, n_points, 3) with points ordered as
    :attr:`point_ids`; ``tracked`` flags each point in each frame.
    """

    id: str
    rate_hz: float
    entities: dict
    times: np.ndarray
    positions: np.ndarray
    tracked: np.ndarray
    spans: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n_points = sum(len(p) for p in self.entities.values())
        if self.positions.ndim != 3 or self.positions.shape[1:] != (n_points, 3):
            raise InvalidInputError(f"positions must have shape (n_frames, {n_points}, 3)")
        if len(self.times) != len(self.positions) or self.tracked.shape != self.positions.shape[:2]:
            raise InvalidInputError("times, positions and tracked disagree in length")
        if len(self.times) and (np.any(np.diff(self.times) <= 0) or self.times[0] < 0):
            raise InvalidInputError("timestamps must be non-negative and strictly increasing")

    @property
    def point_ids(self):
        return [f"{entity}/{point}" for entity, points in self.entities.items() for point in points]

    def index(self, point_id):
        return self.point_ids.index(point_id)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class Segment:
    session_id: str
    index: int
    entities: dict
    times: np.ndarray
    positions: np.ndarray
    label: LabelTuple = NULL_LABEL

    @property
    def point_ids(self):
        return [f"{entity}/{point}" for entity, points in self.entities.items() for point in points]

    def point(self, point_id):
        """Trajectory of one named point, shape (n_frames, 3)."""
        return self.positions[:, self.point_ids.index(point_id)]


def session_from_dict(d):
    entities = {e["name"]: tuple(e["points"]) for e in d["schema"]["entities"]}
    ids = [f"{name}/{p}" for name, points in entities.items() for p in points]
    frames = d["frames"]
    times = np.array([float(f["t"]) for f in frames])
    positions = np.empty((len(frames), len(ids), 3))
    tracked = np.ones((len(frames), len(ids)), dtype=bool)
    for i, frame in enumerate(frames):
        if set(frame["points"]) != set(ids):
            raise InvalidInputError(f"frame {i} does not name the schema's point set")
        positions[i] = [frame["points"][pid] for pid in ids]
        flags = frame.get("tracked", {})
        tracked[i] = [bool(flags.get(pid, True)) for pid in ids]
    spans = tuple(Span(float(s["start_t"]), float(s["end_t"]), LabelTuple.from_dict(s["label"]))
                  for s in d.get("spans", []))
    return Session(str(d["id"]), float(d["rate_hz"]), entities, times, positions, tracked, spans,
                   dict(d.get("meta", {})))


def session_to_dict(session):
    ids = session.point_ids
    frames = [{"t": float(t),
               "points": {pid: [float(v) for v in session.positions[i, j]] for j, pid in enumerate(ids)},
               "tracked": {pid: bool(session.tracked[i, j]) for j, pid in enumerate(ids)}}
              for i, t in enumerate(session.times)]
    out = {
        "id": session.id,
        "rate_hz": session.rate_hz,
        "schema": {"entities": [{"name": n, "points": list(p)} for n, p in session.entities.items()]},
        "frames": frames,
        "spans": [{"start_t": s.start_t, "end_t": s.end_t, "label": s.label.to_dict()} for s in session.spans],
    }
    if session.meta:
        out["meta"] = session.meta
    return out


def load_session(path):
    with open(path) as fh:
        return session_from_dict(json.load(fh))


def save_session(session, path):
    Path(path).write_text(json.dumps(session_to_dict(session), separators=(",", ":")))


def interpolate_gaps(session):
    """Fill untracked runs of each point by linear interpolation in time."""
    tracked = session.tracked
    if tracked.all():
        return session
    if not (tracked[0].all() and tracked[-1].all()):
        bad = [pid for pid, a, b in zip(session.point_ids, tracked[0], tracked[-1]) if not (a and b)]
        raise BoundaryExtrapolationError(f"untracked at sequence boundary: {bad}")
    positions = session.positions.copy()
    for j in range(positions.shape[1]):
        ok = tracked[:, j]
        if ok.all():
            continue
        for axis in range(3):
            positions[~ok, j, axis] = np.interp(session.times[~ok], session.times[ok], positions[ok, j, axis])
    return replace(session, positions=positions, tracked=np.ones_like(tracked))


def resample(session, rate=24.0):
    """Resample every point onto a uniform grid starting at the first timestamp."""
    if len(session) < 2:
        raise InvalidInputError("resampling needs at least two frames")
    t = session.times
    n = int(np.floor((t[-1] - t[0]) * rate + 1e-9)) + 1
    new_t = t[0] + np.arange(n) / rate
    new_t = np.minimum(new_t, t[-1])
    idx = np.clip(np.searchsorted(t, new_t, side="right") - 1, 0, len(t) - 2)
    w = (new_t - t[idx]) / (t[idx + 1] - t[idx])
    pos = (1.0 - w)[:, None, None] * session.positions[idx] + w[:, None, None] * session.positions[idx + 1]
    exact_lo, exact_hi = w == 0.0, w == 1.0
    pos[exact_lo] = session.positions[idx[exact_lo]]
    pos[exact_hi] = session.positions[idx[exact_hi] + 1]
    tracked = np.where(exact_lo[:, None], session.tracked[idx],
                       np.where(exact_hi[:, None], session.tracked[idx + 1],
                                session.tracked[idx] & session.tracked[idx + 1]))
    return replace(session, rate_hz=float(rate), times=new_t, positions=pos, tracked=tracked)


def label_at(spans, t):
    for span in spans:
        if span.start_t <= t < span.end_t:
            return span.label
    if spans and t == spans[-1].end_t:
        return spans[-1].label
    return NULL_LABEL


def slice_segments(session, spans=None, frames=20):
    """Cut consecutive non-overlapping windows; a window takes the label of
    the span containing its midpoint time."""
    spans = session.spans if spans is None else tuple(spans)
    out = []
    for k in range(len(session) // frames):
        sl = slice(k * frames, (k + 1) * frames)
        times = session.times[sl]
        mid = 0.5 * (times[0] + times[-1])
        out.append(Segment(session.id, k, session.entities, times, session.positions[sl], label_at(spans, mid)))
    return out


def preprocess(session, rate=24.0, frames=20):
    """interpolate_gaps -> resample -> slice."""
    return slice_segments(resample(interpolate_gaps(session), rate), frames=frames)
