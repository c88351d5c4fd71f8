"""Qualitative spatial relations between points and point sets.

Every relation is computed for one frame (or one pair of consecutive
frames for the motion relations) and returned as a small symbol.  Symbol
inventories are exposed as tuples so feature extraction can one-hot encode
them in a fixed order.

Conventions: +x is East, +y is North, +z is Above.  QTC radial slots are
``-`` when approaching and ``+`` when receding; lateral slots are ``-`` for
motion to the left of the directed line k->l and ``+`` to the right.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidInputError
from .geometry import EulerAngles, as_point, decompose_ypr, fs_frame, mbhr, rotation_between

CARDIR_2D = ("E", "NE", "N", "NW", "W", "SW", "S", "SE", "EQ")
NS = ("N", "-", "S")
EW = ("E", "-", "W")
AB = ("A", "-", "B")
CARDIR_3D = tuple((ns, ew, ab) for ns in NS for ew in EW for ab in AB)
MOS = ("moving", "static")
QTC_SIGNS = ("-", "0", "+")
ANGLE_SIGNS = ("-", "0", "+", "deg")

EPS_POS = 1e-9


@dataclass(frozen=True)
class QtcParams:
    theta: float = 0.05
    beta: float = np.pi / 36

    def __post_init__(self):
        if not self.theta >= 0:
            raise InvalidInputError("theta must be non-negative")
        if not 0 < self.beta < np.pi / 4:
            raise InvalidInputError("beta must lie in (0, pi/4)")


class DistanceBin(NamedTuple):
    index: int
    width: float


class QtcC(NamedTuple):
    a: str
    b: str
    c: str
    d: str


class Qtc3D(NamedTuple):
    a: str
    b: str
    yaw: str
    pitch: str
    roll: str


def cardir2d(ref, target, eps_pos=EPS_POS) -> str:
    """Compass sector of ``target`` as seen from ``ref``.

    Sectors are 45 degree arcs centred on the eight bearings, each closed
    on its counterclockwise edge.
    """
    ref, target = as_point(ref, 2), as_point(target, 2)
    delta = target - ref
    if np.hypot(*delta) < eps_pos:
        return "EQ"
    phi = np.arctan2(delta[1], delta[0])
    sector = int(np.ceil((phi - np.pi / 8) / (np.pi / 4))) % 8
    return CARDIR_2D[sector]


def _axis_label(value, lo, hi, labels):
    if value > hi:
        return labels[0]
    if value < lo:
        return labels[2]
    return labels[1]


def cardir3d(ref_points, target_points):
    """27-voxel direction of the target centroid around the reference MBHR."""
    ref = np.asarray(ref_points, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(target_points, dtype=np.float64).reshape(-1, 3)
    if len(ref) == 0 or len(tgt) == 0:
        raise InvalidInputError("cardir3d needs non-empty point sets")
    box = mbhr(ref)
    c = tgt.mean(axis=0)
    return (_axis_label(c[1], box.lo[1], box.hi[1], NS),
            _axis_label(c[0], box.lo[0], box.hi[0], EW),
            _axis_label(c[2], box.lo[2], box.hi[2], AB))


def mos(prev, curr, dt, v_min=0.01) -> str:
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    speed = np.linalg.norm(np.asarray(curr, dtype=float) - np.asarray(prev, dtype=float)) / dt
    return "moving" if speed > v_min else "static"


def argd_bin(d, w=0.05, b_max=40) -> DistanceBin:
    if d < 0:
        raise InvalidInputError("distance must be non-negative")
    if not w > 0 or b_max < 1:
        raise InvalidInputError("bin width must be positive and b_max >= 1")
    return DistanceBin(min(int(np.floor(d / w)), int(b_max) - 1), float(w))


def _sign(x):
    return "-" if x < 0 else "+"


def _radial_slot(disp, toward, threshold, beta):
    # toward: unit vector from the moving point to the other point.
    norm = np.linalg.norm(disp)
    if norm <= threshold or norm == 0.0:
        return "0"
    cos_a = np.clip(np.dot(disp, toward) / norm, -1.0, 1.0)
    if abs(np.arccos(cos_a) - np.pi / 2) < beta:
        return "0"
    return "-" if cos_a > 0 else "+"


def _lateral_slot(disp, line, threshold, beta):
    # line: unit vector of the directed reference line k->l (2D).
    norm = np.hypot(*disp)
    if norm <= threshold or norm == 0.0:
        return "0"
    along = disp @ line
    left = line[0] * disp[1] - line[1] * disp[0]
    alpha = abs(np.arctan2(left, along))
    if alpha < beta or np.pi - alpha < beta:
        return "0"
    return "-" if left > 0 else "+"


def qtc_radial(k_prev, k_curr, l_prev, l_curr, params=QtcParams(), eps_pos=EPS_POS):
    """Radial QTC slots (A, B) in any dimension, reference line from the
    previous positions."""
    k0, k1, l0, l1 = (np.asarray(p, dtype=np.float64) for p in (k_prev, k_curr, l_prev, l_curr))
    kl = l0 - k0
    dist = np.linalg.norm(kl)
    if dist <= eps_pos:
        raise InvalidInputError("reference positions coincide")
    u = kl / dist
    threshold = params.theta * dist
    return (_radial_slot(k1 - k0, u, threshold, params.beta),
            _radial_slot(l1 - l0, -u, threshold, params.beta))


def qtc_c(k_prev, k_curr, l_prev, l_curr, params=QtcParams(), eps_pos=EPS_POS) -> QtcC:
    """QTC double-cross state of two points between consecutive frames.

    The reference line is built from the previous positions.  A point's
    motion is significant only when its displacement exceeds
    ``theta * |kl|``; angle deadzones of width ``beta`` zero the lateral
    slots near alignment and the radial slots near perpendicular motion.
    """
    k0, k1, l0, l1 = (as_point(p, 2) for p in (k_prev, k_curr, l_prev, l_curr))
    a, b = qtc_radial(k0, k1, l0, l1, params, eps_pos)
    kl = l0 - k0
    dist = np.hypot(*kl)
    u = kl / dist
    threshold = params.theta * dist
    return QtcC(a, b,
                _lateral_slot(k1 - k0, u, threshold, params.beta),
                _lateral_slot(l1 - l0, u, threshold, params.beta))


def angle_sign(angle, beta) -> str:
    if abs(angle) < beta:
        return "0"
    return _sign(angle)


def qtc_3d_angles(k_hist, l_hist, **frame_kw):
    """Yaw/pitch/roll between the two points' FS frames, or None if degenerate."""
    fk, fl = fs_frame(k_hist, **frame_kw), fs_frame(l_hist, **frame_kw)
    if fk.degenerate or fl.degenerate:
        return None
    return decompose_ypr(rotation_between(fk, fl))


def qtc_3d(k_hist, l_hist, params=QtcParams(), eps_pos=EPS_POS, **frame_kw) -> Qtc3D:
    """Five-slot 3D trajectory relation.

    Radial slots follow :func:`qtc_c` in 3D; the remaining three slots are
    the signs of the yaw, pitch and roll that rotate k's Frenet-Serret frame
    onto l's, or ``deg`` when either frame is degenerate.
    """
    if len(k_hist) != 3 or len(l_hist) != 3:
        raise InvalidInputError("qtc_3d needs three timed samples per point")
    k0, k1 = as_point(k_hist[1][1]), as_point(k_hist[2][1])
    l0, l1 = as_point(l_hist[1][1]), as_point(l_hist[2][1])
    if np.linalg.norm(l1 - k1) <= eps_pos:
        raise InvalidInputError("current positions coincide")
    a, b = qtc_radial(k0, k1, l0, l1, params, eps_pos)
    angles = qtc_3d_angles(k_hist, l_hist, **frame_kw)
    if angles is None:
        return Qtc3D(a, b, "deg", "deg", "deg")
    return Qtc3D(a, b, *(angle_sign(x, params.beta) for x in angles))


__all__ = [
    "AB", "ANGLE_SIGNS", "CARDIR_2D", "CARDIR_3D", "DistanceBin", "EW", "EulerAngles", "MOS", "NS",
    "QTC_SIGNS", "Qtc3D", "QtcC", "QtcParams", "angle_sign", "argd_bin", "cardir2d", "cardir3d",
    "mos", "qtc_3d", "qtc_3d_angles", "qtc_c", "qtc_radial",
]
