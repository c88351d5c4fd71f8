"""Vector geometry on discrete 3D samples.

Derivatives of sampled trajectories, Frenet-Serret frames, rotation
decomposition, bounding boxes and a two-component PCA used to embed
factor-model point clouds in a plane.
"""
import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DegenerateFrameError, InvalidInputError

EPS_SPEED = 1e-4  # m/s
EPS_CURVATURE = 1e-4  # 1/m
GIMBAL_TOL = 1e-9
RANK_TOL = 1e-12


class TimedPoint(NamedTuple):
    t: float
    p: np.ndarray


class EulerAngles(NamedTuple):
    yaw: float
    pitch: float
    roll: float


class Mbhr(NamedTuple):
    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def corners(self):
        """All 8 corners of the box, shape (8, 3)."""
        bounds = np.stack([self.lo, self.hi])
        return np.array([bounds[idx, [0, 1, 2]] for idx in itertools.product((0, 1), repeat=3)])


@dataclass(frozen=True)
class FsFrame:
    tangent: np.ndarray
    normal: np.ndarray
    binormal: np.ndarray
    degenerate: bool = False

    def matrix(self):
        """Axes stacked as columns: [tangent normal binormal]."""
        return np.column_stack([self.tangent, self.normal, self.binormal])


_PLACEHOLDER = FsFrame(np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]),
                       np.array([0.0, 0.0, 1.0]), degenerate=True)


def as_point(p, dim=3):
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (dim,) or not np.all(np.isfinite(p)):
        raise InvalidInputError(f"expected a finite {dim}-vector, got {p!r}")
    return p


def _unpack(samples):
    if len(samples) != 3:
        raise InvalidInputError("exactly three timed samples are required")
    t = np.array([float(s[0]) for s in samples])
    p = np.array([as_point(s[1]) for s in samples])
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise InvalidInputError("timestamps must be finite and non-negative")
    if not (t[0] < t[1] < t[2]):
        raise InvalidInputError(f"timestamps must be strictly increasing, got {t}")
    return t, p


def _derivatives(t, p):
    # Derivatives at t[2] of the interpolating quadratic (backward stencil).
    t0, t1, t2 = t
    v = (p[0] * (t2 - t1) / ((t0 - t1) * (t0 - t2))
         + p[1] * (t2 - t0) / ((t1 - t0) * (t1 - t2))
         + p[2] * (2 * t2 - t0 - t1) / ((t2 - t0) * (t2 - t1)))
    a = 2.0 * (p[0] / ((t0 - t1) * (t0 - t2))
               + p[1] / ((t1 - t0) * (t1 - t2))
               + p[2] / ((t2 - t0) * (t2 - t1)))
    return v, a


def velocity(samples: Sequence[TimedPoint]) -> np.ndarray:
    """Velocity at the latest of three samples.

    Uses the second-order backward difference (derivative of the quadratic
    through the three samples), which is exact for linear and quadratic motion.
    """
    t, p = _unpack(samples)
    return _derivatives(t, p)[0]


def acceleration(samples: Sequence[TimedPoint]) -> np.ndarray:
    t, p = _unpack(samples)
    return _derivatives(t, p)[1]


def fs_frame(samples: Sequence[TimedPoint], eps_speed=EPS_SPEED, eps_curvature=EPS_CURVATURE) -> FsFrame:
    """Frenet-Serret frame at the latest of three samples.

    Returns a frame flagged ``degenerate`` (with coordinate axes as
    placeholders) when the speed or the curvature is below threshold.
    """
    t, p = _unpack(samples)
    v, a = _derivatives(t, p)
    speed = np.linalg.norm(v)
    if speed < eps_speed:
        return _PLACEHOLDER
    cross = np.cross(v, a)
    cross_norm = np.linalg.norm(cross)
    if cross_norm / speed ** 3 < eps_curvature:
        return _PLACEHOLDER
    tangent = v / speed
    binormal = cross / cross_norm
    normal = np.cross(binormal, tangent)
    normal /= np.linalg.norm(normal)
    return FsFrame(tangent, normal, binormal, degenerate=False)


def rotation_between(f1: FsFrame, f2: FsFrame) -> np.ndarray:
    """Rotation R with R @ axis1 = axis2 for each frame axis."""
    if f1.degenerate or f2.degenerate:
        raise DegenerateFrameError("cannot relate a degenerate Frenet-Serret frame")
    return f2.matrix() @ f1.matrix().T


def _wrap(angle):
    # Map into (-pi, pi].
    return np.pi if angle <= -np.pi else float(angle)


def rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def compose_ypr(yaw, pitch, roll) -> np.ndarray:
    """Z-Y-X intrinsic rotation Rz(yaw) Ry(pitch) Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def decompose_ypr(r) -> EulerAngles:
    """Z-Y-X intrinsic Tait-Bryan angles of a proper rotation.

    At gimbal lock (|pitch| = pi/2) roll is fixed to 0 and the remaining
    rotation about the vertical is reported as yaw.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise InvalidInputError("rotation must be 3x3")
    sp = -r[2, 0]
    if abs(abs(sp) - 1.0) <= GIMBAL_TOL:
        pitch = np.copysign(np.pi / 2, sp)
        yaw = np.arctan2(-r[0, 1], r[1, 1])
        roll = 0.0
    else:
        pitch = np.arctan2(sp, np.hypot(r[0, 0], r[1, 0]))
        yaw = np.arctan2(r[1, 0], r[0, 0])
        roll = np.arctan2(r[2, 1], r[2, 2])
    return EulerAngles(_wrap(yaw), float(pitch), _wrap(roll))


def mbhr(points) -> Mbhr:
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise InvalidInputError("cannot bound an empty point set")
    pts = pts.reshape(-1, pts.shape[-1])
    return Mbhr(pts.min(axis=0), pts.max(axis=0))


def _sign_fix(v):
    # Largest-magnitude component positive (first index wins ties).
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def _orthogonal_unit(u):
    axis = np.zeros(3)
    axis[np.argmin(np.abs(u))] = 1.0
    w = np.cross(u, axis)
    return w / np.linalg.norm(w)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray  # (2, 3), rows are principal directions
    explained_variance: np.ndarray  # (2,) absolute variances
    explained_variance_ratio: np.ndarray  # (2,) fractions of total variance

    def project(self, points):
        pts = np.asarray(points, dtype=np.float64)
        return (pts - self.mean) @ self.basis.T


def pca_fit(points) -> PcaModel:
    """Two leading principal directions of a 3D point cloud."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 2:
        raise InvalidInputError("PCA needs at least two points")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals[::-1], 0.0, None)
    evecs = evecs[:, ::-1]
    total = evals.sum()
    if total <= 0.0 or np.all(np.ptp(pts, axis=0) == 0.0):
        raise InvalidInputError("all points are identical")
    first = _sign_fix(evecs[:, 0])
    if evals[1] <= RANK_TOL * evals[0]:
        second = _sign_fix(_orthogonal_unit(first))
    else:
        second = _sign_fix(evecs[:, 1])
    return PcaModel(mean=mean, basis=np.vstack([first, second]),
                    explained_variance=evals[:2].copy(),
                    explained_variance_ratio=evals[:2] / total)


def pca_project(model: PcaModel, p) -> np.ndarray:
    return model.project(p)


class PlanarPCA(TransformerMixin, BaseEstimator):
    """Project 3D points onto their two leading principal directions.

    Parameters
    ----------
    None.

    Attributes
    ----------
    model_ : PcaModel
        Fitted mean, basis and explained variance.
    components_ : ndarray of shape (2, 3)
    explained_variance_ratio_ : ndarray of shape (2,)
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise InvalidInputError("PlanarPCA expects 3 columns")
        self.model_ = pca_fit(X)
        self.components_ = self.model_.basis
        self.mean_ = self.model_.mean
        self.explained_variance_ratio_ = self.model_.explained_variance_ratio
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self.model_.project(X)

    def inverse_transform(self, Z):
        check_is_fitted(self, "model_")
        Z = check_array(Z, dtype=np.float64)
        return Z @ self.components_ + self.mean_
