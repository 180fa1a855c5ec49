"""Homogeneous transforms and the Khalil-Kleinfinger frame convention.

A frame row is applied as RotX(alpha) . TransX(d) . RotZ(theta) . TransZ(r),
with theta = theta_offset + q for actuated rows.
"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.linalg import polar

logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KKRow:
    """One row of the Khalil-Kleinfinger geometric table (SI units)"""
    alpha: float
    d: float
    theta_offset: float
    r: float
    joint_index: Optional[int] = None

    def __post_init__(self) -> None:
        values = (self.alpha, self.d, self.theta_offset, self.r)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"KK row has non-finite entries: {values}")
        if self.joint_index is not None and not 1 <= self.joint_index <= 6:
            raise ValueError(f"joint_index must be in 1..6, got {self.joint_index}")

    @property
    def actuated(self) -> bool:
        return self.joint_index is not None


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def orthonormality_error(rotation: np.ndarray) -> float:
    return float(np.max(np.abs(rotation.T @ rotation - np.eye(3))))


def orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition)"""
    unitary, _ = polar(rotation)
    if np.linalg.det(unitary) < 0:
        unitary = -unitary
    return unitary


@dataclass(frozen=True)
class Transform:
    """Rigid transform: p_parent = rotation @ p_child + translation"""
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        rotation = np.array(self.rotation, dtype=float).reshape(3, 3)
        translation = np.array(self.translation, dtype=float).reshape(3)
        if orthonormality_error(rotation) > ORTHONORMAL_TOLERANCE:
            logger.debug("re-orthonormalizing rotation (error %.3e)", orthonormality_error(rotation))
            rotation = orthonormalize(rotation)
        rotation.flags.writeable = False
        translation.flags.writeable = False
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> 'Transform':
        return cls()

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> 'Transform':
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[:3, :3], matrix[:3, 3])

    @classmethod
    def from_pose2d(cls, x: float, y: float, yaw: float, z: float = 0.0) -> 'Transform':
        return cls(rot_z(yaw), np.array([x, y, z]))

    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def __matmul__(self, other: 'Transform') -> 'Transform':
        return Transform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> 'Transform':
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def yaw(self) -> float:
        return float(np.arctan2(self.rotation[1, 0], self.rotation[0, 0]))

    def is_orthonormal(self, tol: float = 1e-12) -> bool:
        return (
            orthonormality_error(self.rotation) <= tol
            and abs(np.linalg.det(self.rotation) - 1.0) <= tol
        )


def kk_transform(row: KKRow, q: float = 0.0) -> Transform:
    """Transform from frame j-1 to frame j for joint value q"""
    theta = row.theta_offset + (q if row.actuated else 0.0)
    rx = rot_x(row.alpha)
    rotation = rx @ rot_z(theta)
    translation = rx @ np.array([row.d, 0.0, row.r])
    return Transform(rotation, translation)


def kk_inverse_transform(row: KKRow, q: float = 0.0) -> Transform:
    """Inverse of kk_transform: TransZ(-r) . RotZ(-theta) . TransX(-d) . RotX(-alpha)"""
    theta = row.theta_offset + (q if row.actuated else 0.0)
    rotation = rot_z(-theta) @ rot_x(-row.alpha)
    translation = rot_z(-theta) @ np.array([-row.d, 0.0, 0.0]) + np.array([0.0, 0.0, -row.r])
    return Transform(rotation, translation)


def compose(transforms: Iterable[Transform]) -> Transform:
    result = Transform.identity()
    for transform in transforms:
        result = result @ transform
    return result


def kk_transform_batch(row: KKRow, q: np.ndarray) -> np.ndarray:
    """Stack of 4x4 transforms for an array of joint values (shape (n, 4, 4))"""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    theta = row.theta_offset + (q if row.actuated else np.zeros_like(q))
    c, s = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    out = np.zeros((q.shape[0], 4, 4))
    out[:, 0, 0] = c
    out[:, 0, 1] = -s
    out[:, 1, 0] = ca * s
    out[:, 1, 1] = ca * c
    out[:, 1, 2] = -sa
    out[:, 2, 0] = sa * s
    out[:, 2, 1] = sa * c
    out[:, 2, 2] = ca
    out[:, 0, 3] = row.d
    out[:, 1, 3] = -sa * row.r
    out[:, 2, 3] = ca * row.r
    out[:, 3, 3] = 1.0
    return out
