"""Synthetic block-world sessions with ground-truth event labels.

A performer rig (two shoulders, two hand tips) interacts with a cube (O1)
and a cylinder (O2), each carrying a square marker with four corner points.
Every session is a reach phase followed by a motion phase in which one
object (the mover) travels relative to the other (the landmark).  The
preposition fixes the mover-landmark distance profile; the verb fixes how
the rig takes part.  Positions are evaluated analytically at the native
frame rate and then corrupted with Gaussian jitter and tracking dropout.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidInputError
from .labels import NULL_LABEL, LabelTuple, satisfies_constraints
from .pipeline.session import MARKERS, RIG, RIG_JOINTS, Session, Span

SIM_VERBS = ("push", "pull", "slide", "roll")
SIM_PREPOSITIONS = ("toward", "away_from", "past", "none")
OBJECT_KINDS = {"O1": "cube", "O2": "cylinder"}

HALF_SIZE = 0.05  # cube half-edge and cylinder radius, metres
MARKER_RADIUS = 0.035  # centre-to-corner distance of the square marker
MARKER_TILT = np.deg2rad(20.0)
CONTACT_DISTANCE = 0.05
HAND_OFFSET = (0.045, 0.015)  # along motion, across motion
RIG_STANDOFF = 0.4
SHOULDER_HEIGHT = 0.45
SHOULDER_HALF_WIDTH = 0.18
SEGMENT_SECONDS = 20 / 24


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one synthetic session.

    ``actor`` defaults to True for push/pull (the performer moves the
    object) and False for slide/roll (the object moves on its own, the rig
    idles elsewhere); with ``actor=True`` a slide or roll starts with a
    shove from the performer.  ``mover`` defaults to the object kind the
    verb requires, or is drawn from the seed for push/pull.
    """

    verb: str
    preposition: str = "toward"
    actor: bool = None
    mover: str = None
    objects: dict = field(default_factory=lambda: dict(OBJECT_KINDS))
    duration: float = 3 * SEGMENT_SECONDS
    reach_time: float = SEGMENT_SECONDS
    speed: float = 0.3
    rate_hz: float = 24.0
    noise: float = 0.005
    dropout: float = 0.05
    seed: int = 0

    def resolved(self):
        """Validate and fill in the defaulted fields."""
        if self.verb not in SIM_VERBS:
            raise InvalidInputError(f"unknown verb {self.verb!r}")
        if self.preposition not in SIM_PREPOSITIONS:
            raise InvalidInputError(f"unknown preposition {self.preposition!r}")
        if not 0 <= self.dropout < 0.5 or self.noise < 0:
            raise InvalidInputError("need noise >= 0 and 0 <= dropout < 0.5")
        if self.duration - self.reach_time < 2 / self.rate_hz or self.reach_time <= 0:
            raise InvalidInputError("motion phase too short")
        by_kind = {kind: name for name, kind in self.objects.items()}
        mover = self.mover
        if self.verb == "slide":
            mover = mover or by_kind.get("cube")
            if mover is None or self.objects.get(mover) != "cube":
                raise InvalidInputError("only a cube can slide")
        elif self.verb == "roll":
            mover = mover or by_kind.get("cylinder")
            if mover is None or self.objects.get(mover) != "cylinder":
                raise InvalidInputError("only a cylinder can roll")
        elif mover is None:
            mover = sorted(self.objects)[np.random.default_rng(self.seed).integers(len(self.objects))]
        if mover not in self.objects:
            raise InvalidInputError(f"unknown mover {mover!r}")
        actor = self.actor
        if actor is None:
            actor = self.verb in ("push", "pull")
        if self.verb in ("push", "pull") and not actor:
            raise InvalidInputError("push and pull need the performer")
        return ScenarioSpec(self.verb, self.preposition, bool(actor), mover, dict(self.objects),
                            self.duration, self.reach_time, self.speed, self.rate_hz, self.noise,
                            self.dropout, self.seed)

    def label(self):
        spec = self.resolved()
        landmark = next(o for o in spec.objects if o != spec.mover)
        prep = "None" if spec.preposition == "none" else spec.preposition
        loc = "None" if spec.preposition == "none" else landmark
        if spec.verb in ("push", "pull"):
            return LabelTuple("performer", spec.verb, spec.mover, prep, loc)
        return LabelTuple(spec.mover, spec.verb, "None", prep, loc)


@dataclass(frozen=True)
class SyntheticSession:
    session: Session
    spec: ScenarioSpec
    clean: Session  # before noise and dropout

    @property
    def spans(self):
        return self.session.spans


def _unit(v):
    return v / np.linalg.norm(v)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _marker_corners(face_center, u, w, angle):
    """Square marker corners in the plane spanned by u and w, rotated by angle."""
    gammas = angle + MARKER_TILT + np.pi / 4 + np.arange(4) * np.pi / 2
    return face_center + MARKER_RADIUS * (np.cos(gammas)[:, None] * u + np.sin(gammas)[:, None] * w)


class _Scene:
    """Analytic trajectories for one resolved spec."""

    def __init__(self, spec):
        self.spec = spec
        rng = np.random.default_rng(spec.seed)
        psi = rng.uniform(0, 2 * np.pi)
        self.d = np.array([np.cos(psi), np.sin(psi), 0.0])
        self.n = np.array([-np.sin(psi), np.cos(psi), 0.0])
        self.mover = spec.mover
        self.landmark = next(o for o in spec.objects if o != spec.mover)
        self.motion_time = spec.duration - spec.reach_time
        travel = spec.speed * self.motion_time
        z = np.array([0.0, 0.0, HALF_SIZE])
        landmark = np.r_[rng.uniform(-0.3, 0.3, size=2), 0.0] + z
        if spec.preposition == "toward":
            end = landmark - self.d * rng.uniform(0.15, 0.25)
            start = end - self.d * travel
        elif spec.preposition == "away_from":
            start = landmark + self.d * rng.uniform(0.15, 0.25)
            end = start + self.d * travel
        elif spec.preposition == "past":
            offset = rng.uniform(0.12, 0.2) * rng.choice([-1.0, 1.0])
            before = travel * rng.uniform(0.35, 0.65)
            start = landmark - self.d * before + self.n * offset
            end = start + self.d * travel
        else:
            start = landmark + self.n * rng.uniform(0.35, 0.5) * rng.choice([-1.0, 1.0])
            end = start + self.d * travel
        self.start, self.end, self.landmark_pos = start, end, landmark
        self.travel = travel
        self.yaw = {o: rng.uniform(0, 2 * np.pi) for o in spec.objects}
        # Performer faces the motion for push, against it for pull.
        self.facing = -self.d if spec.verb == "pull" else self.d
        if spec.actor:
            self.rig_home = (start - self.facing * RIG_STANDOFF if spec.verb != "pull"
                             else start + self.d * RIG_STANDOFF)
        else:
            away = _unit(np.r_[rng.normal(size=2), 0.0])
            self.rig_home = landmark + away * 0.8
            self.facing = -away
        self.rig_home = np.r_[self.rig_home[:2], SHOULDER_HEIGHT]

    def mover_offset(self, t):
        """Distance travelled by the mover at time t."""
        tau = np.clip(t - self.spec.reach_time, 0.0, self.motion_time)
        return self.spec.speed * tau

    def centroid(self, obj, t):
        if obj == self.mover:
            return self.start + self.d * self.mover_offset(t)
        return self.landmark_pos

    def markers(self, obj, t):
        c = self.centroid(obj, t)
        ez = np.array([0.0, 0.0, 1.0])
        if self.spec.objects[obj] == "cylinder":
            if obj == self.mover:
                axis, roll_dir = self.n, self.d
                angle = -self.mover_offset(t) / HALF_SIZE
            else:
                yaw = self.yaw[obj]
                axis = np.array([np.cos(yaw), np.sin(yaw), 0.0])
                roll_dir = np.cross(axis, ez)
                angle = 0.0
            return _marker_corners(c + HALF_SIZE * axis, roll_dir, ez, angle)
        yaw = self.yaw[obj]
        normal = np.array([np.cos(yaw), np.sin(yaw), 0.0])
        return _marker_corners(c + HALF_SIZE * normal, np.cross(ez, normal), ez, 0.0)

    def _contact(self, t, left):
        c = self.centroid(self.mover, t)
        along, across = HAND_OFFSET
        side = np.cross(np.array([0.0, 0.0, 1.0]), self.facing)  # performer's left
        base = c - self.facing * along if self.spec.verb != "pull" else c + self.d * along
        return base + side * (across if left else -across)

    def rig(self, t):
        spec = self.spec
        side = np.cross(np.array([0.0, 0.0, 1.0]), self.facing)
        if spec.actor and spec.verb in ("push", "pull"):
            sm = self.rig_home + self.d * self.mover_offset(t)
        else:
            sm = self.rig_home
        rest = {left: sm + self.facing * 0.1 + side * (0.2 if left else -0.2) + np.array([0, 0, -0.35])
                for left in (True, False)}
        hands = {}
        for left in (True, False):
            if not spec.actor:
                hands[left] = rest[left]
                continue
            if t <= spec.reach_time:
                w = _smoothstep(t / spec.reach_time)
                hands[left] = (1 - w) * rest[left] + w * self._contact(0.0, left)
            elif spec.verb in ("push", "pull"):
                hands[left] = self._contact(t, left)
            else:
                # shove, then withdraw over the first half of the motion
                w = _smoothstep((t - spec.reach_time) / (0.5 * self.motion_time))
                hands[left] = (1 - w) * self._contact(spec.reach_time, left) + w * rest[left]
        return {
            "shoulder_left": sm + side * SHOULDER_HALF_WIDTH,
            "shoulder_right": sm - side * SHOULDER_HALF_WIDTH,
            "hand_tip_left": hands[True],
            "hand_tip_right": hands[False],
        }

    def frame(self, t):
        rig = self.rig(t)
        pts = [rig[j] for j in RIG_JOINTS]
        for obj in sorted(self.spec.objects):
            pts.extend(self.markers(obj, t))
        return np.array(pts)


def corrupt(session, noise, dropout, seed):
    """Gaussian jitter on every coordinate plus random tracking loss.

    Points are never dropped in the first or last frame.
    """
    if noise < 0 or not 0 <= dropout < 0.5:
        raise InvalidInputError("need noise >= 0 and 0 <= dropout < 0.5")
    if noise == 0 and dropout == 0:
        return session
    rng = np.random.default_rng(seed)
    positions = session.positions + rng.normal(0.0, noise, size=session.positions.shape) if noise > 0 \
        else session.positions.copy()
    lost = rng.random(session.tracked.shape) < dropout
    lost[0] = lost[-1] = False
    tracked = session.tracked & ~lost
    return Session(session.id, session.rate_hz, session.entities, session.times, positions, tracked,
                   session.spans, dict(session.meta))


def generate(spec, session_id="synthetic"):
    """Render a scenario into a labelled session at its native frame rate."""
    spec = spec.resolved()
    scene = _Scene(spec)
    n = int(np.ceil(spec.duration * spec.rate_hz - 1e-9)) + 1
    times = np.arange(n) / spec.rate_hz
    positions = np.array([scene.frame(t) for t in times])
    entities = {RIG: RIG_JOINTS, **{o: MARKERS for o in sorted(spec.objects)}}
    label = spec.label()
    if not satisfies_constraints(label):
        raise InvalidInputError(f"scenario produces an inconsistent label {label}")
    spans = (Span(0.0, spec.reach_time, NULL_LABEL), Span(spec.reach_time, float(times[-1]), label))
    meta = {"verb": spec.verb, "preposition": spec.preposition, "actor": spec.actor,
            "mover": spec.mover, "seed": spec.seed, "native_rate_hz": spec.rate_hz}
    clean = Session(session_id, spec.rate_hz, entities, times, positions,
                    np.ones(positions.shape[:2], dtype=bool), spans, meta)
    noisy = corrupt(clean, spec.noise, spec.dropout, spec.seed + 1)
    return SyntheticSession(noisy, spec, clean)


def scenario_mix(n_sessions, mix="uniform"):
    """(verb, preposition) per session, cycling verbs fastest."""
    if mix == "uniform":
        return [(SIM_VERBS[i % 4], SIM_PREPOSITIONS[(i // 4) % 4]) for i in range(n_sessions)]
    combos = list(mix)
    if not combos:
        raise InvalidInputError("empty scenario mix")
    return [tuple(combos[i % len(combos)]) for i in range(n_sessions)]


def make_corpus(n_sessions=30, mix="uniform", seed=0, noise=0.005, dropout=0.05, rates=(15.0, 24.0, 30.0)):
    """Balanced, deterministic corpus of synthetic sessions."""
    if n_sessions < 5:
        raise InvalidInputError("a corpus needs at least 5 sessions")
    children = np.random.SeedSequence(seed).spawn(n_sessions)
    corpus = []
    for i, ((verb, prep), child) in enumerate(zip(scenario_mix(n_sessions, mix), children)):
        rng = np.random.default_rng(child)
        session_seed = int(rng.integers(2**31))
        actor = None if verb in ("push", "pull") else bool(rng.integers(2))
        spec = ScenarioSpec(verb, prep, actor=actor, rate_hz=float(rng.choice(rates)), noise=noise,
                            dropout=dropout, seed=session_seed)
        corpus.append(generate(spec, session_id=f"s{i:03d}"))
    return corpus
