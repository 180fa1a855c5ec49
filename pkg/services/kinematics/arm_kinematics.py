"""Forward, differential and inverse kinematics of the 6-DOF painting arm.

All poses are expressed in the arm base frame 0 (z up, on the floor under the
waist axis). The chain is read from ``params.geometry.kk_table``.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from services.params.params_schema import RobotParams
from .exceptions import NoConvergence
from .transforms import Transform, kk_transform, kk_transform_batch

logger = logging.getLogger(__name__)

DLS_DAMPING = 1e-3
IK_MAX_ITERATIONS = 200
IK_TOLERANCE = 1e-8
IK_MAX_STEP = 0.5
NULL_SPACE_SETTLE = 1e-6

# Deterministic restart offsets for position IK (rad, added to the seed)
_RESEED_OFFSETS = (
    np.zeros(6),
    np.array([0.0, 0.3, -0.3, 0.0, 0.3, 0.0]),
    np.array([0.0, -0.3, 0.3, 0.0, -0.3, 0.0]),
    np.array([0.2, 0.5, -0.8, 0.4, 0.6, 0.0]),
    np.array([-0.2, -0.5, 0.8, -0.4, -0.6, 0.0]),
)


def arm_frames(q_a: Sequence[float], params: RobotParams) -> List[Transform]:
    """Cumulative transforms 0->1, 0->2, ..., 0->6, 0->tip"""
    q_a = np.asarray(q_a, dtype=float)
    frames = []
    current = Transform.identity()
    for row in params.geometry.kk_table:
        q = q_a[row.joint_index - 1] if row.actuated else 0.0
        current = current @ kk_transform(row, q)
        frames.append(current)
    return frames


def arm_fk(q_a: Sequence[float], params: RobotParams) -> Transform:
    """Pose of the spray-nozzle tip in the arm base frame"""
    return arm_frames(q_a, params)[-1]


def arm_fk_matrix(q_a: Sequence[float], params: RobotParams) -> np.ndarray:
    """One-shot 4x4 chain product, without intermediate re-orthonormalization"""
    q_a = np.asarray(q_a, dtype=float)
    result = np.eye(4)
    for row in params.geometry.kk_table:
        q = q_a[row.joint_index - 1] if row.actuated else 0.0
        result = result @ kk_transform(row, q).matrix()
    return result


def arm_tip_positions(q_batch: np.ndarray, params: RobotParams) -> np.ndarray:
    """Tip positions for a batch of configurations, shape (n, 6) -> (n, 3)"""
    q_batch = np.atleast_2d(np.asarray(q_batch, dtype=float))
    n = q_batch.shape[0]
    result = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
    for row in params.geometry.kk_table:
        values = q_batch[:, row.joint_index - 1] if row.actuated else np.zeros(n)
        result = result @ kk_transform_batch(row, values)
    return result[:, :3, 3]


def arm_jacobian(q_a: Sequence[float], params: RobotParams) -> np.ndarray:
    """Geometric Jacobian [v; w] of the tip in frame 0 (6 x 6)"""
    frames = arm_frames(q_a, params)
    tip = frames[-1].translation
    jacobian = np.zeros((6, 6))
    for row, frame in zip(params.geometry.kk_table, frames):
        if not row.actuated:
            continue
        axis = frame.rotation[:, 2]
        column = row.joint_index - 1
        jacobian[:3, column] = np.cross(axis, tip - frame.translation)
        jacobian[3:, column] = axis
    return jacobian


def link_jacobians(q_a: Sequence[float], params: RobotParams) -> List[Tuple[np.ndarray, np.ndarray, Transform]]:
    """Per-link (J_v at the C.G., J_w, frame) used by the Lagrangian model"""
    frames = arm_frames(q_a, params)
    actuated = [(row, frame) for row, frame in zip(params.geometry.kk_table, frames) if row.actuated]
    result = []
    for i, (link, (_, frame_i)) in enumerate(zip(params.arm_links, actuated)):
        cg_world = frame_i.apply(link.cg)
        jv = np.zeros((3, 6))
        jw = np.zeros((3, 6))
        for j, (_, frame_j) in enumerate(actuated[: i + 1]):
            axis = frame_j.rotation[:, 2]
            jv[:, j] = np.cross(axis, cg_world - frame_j.translation)
            jw[:, j] = axis
        result.append((jv, jw, frame_i))
    return result


def pose_error(target: Transform, current: Transform) -> np.ndarray:
    """[position error; rotation-vector error] of target relative to current"""
    position = target.translation - current.translation
    rotation = Rotation.from_matrix(target.rotation @ current.rotation.T).as_rotvec()
    return np.concatenate([position, rotation])


def _dls_step(jacobian: np.ndarray, error: np.ndarray, damping: float) -> np.ndarray:
    rows = jacobian.shape[0]
    gram = jacobian @ jacobian.T + damping ** 2 * np.eye(rows)
    return jacobian.T @ np.linalg.solve(gram, error)


def _clamp(step: np.ndarray, limit: float = IK_MAX_STEP) -> np.ndarray:
    largest = np.max(np.abs(step))
    return step * (limit / largest) if largest > limit else step


def arm_ik(
    target: Transform,
    seed: Sequence[float],
    params: RobotParams,
    damping: float = DLS_DAMPING,
    max_iterations: int = IK_MAX_ITERATIONS,
    tol: float = IK_TOLERANCE,
) -> np.ndarray:
    """Full-pose damped-least-squares IK from seed"""
    q = np.array(seed, dtype=float)
    residual = np.inf
    for iteration in range(max_iterations):
        error = pose_error(target, arm_fk(q, params))
        residual = float(max(np.linalg.norm(error[:3]), np.linalg.norm(error[3:])))
        if residual < tol:
            logger.debug("arm_ik converged in %d iterations", iteration)
            return q
        q = q + _clamp(_dls_step(arm_jacobian(q, params), error, damping))
    raise NoConvergence(max_iterations, residual)


def _task_priority_solve(
    target_position: np.ndarray,
    target_rotation: Optional[np.ndarray],
    seed: np.ndarray,
    params: RobotParams,
    damping: float,
    max_iterations: int,
    tol: float,
) -> Tuple[np.ndarray, float]:
    q = seed.copy()
    residual = np.inf
    for _ in range(max_iterations):
        current = arm_fk(q, params)
        error_p = target_position - current.translation
        residual = float(np.linalg.norm(error_p))
        jacobian = arm_jacobian(q, params)
        jp, jo = jacobian[:3], jacobian[3:]
        step = _dls_step(jp, error_p, damping)
        if target_rotation is not None:
            error_o = Rotation.from_matrix(target_rotation @ current.rotation.T).as_rotvec()
            projector = np.eye(6) - np.linalg.pinv(jp) @ jp
            step = step + projector @ _dls_step(jo @ projector, error_o - jo @ step, damping * 10)
        if residual < tol and target_rotation is None:
            break
        if residual < tol and np.linalg.norm(step) < NULL_SPACE_SETTLE:
            break
        q = q + _clamp(step)
    residual = float(np.linalg.norm(target_position - arm_fk(q, params).translation))
    return q, residual


def arm_ik_position(
    target_position: Sequence[float],
    seed: Sequence[float],
    params: RobotParams,
    target_rotation: Optional[np.ndarray] = None,
    damping: float = DLS_DAMPING,
    max_iterations: int = IK_MAX_ITERATIONS,
    tol: float = IK_TOLERANCE,
) -> np.ndarray:
    """Tip position solved exactly; orientation, when given, tracked in the null space"""
    target_position = np.asarray(target_position, dtype=float)
    seed = np.asarray(seed, dtype=float)
    best_residual = np.inf
    for attempt, offset in enumerate(_RESEED_OFFSETS):
        q, residual = _task_priority_solve(
            target_position, target_rotation, seed + offset, params, damping, max_iterations, tol
        )
        if residual < tol:
            if attempt:
                logger.warning("arm_ik_position needed restart %d for target %s", attempt, target_position.round(3))
            return q
        best_residual = min(best_residual, residual)
    raise NoConvergence(max_iterations * len(_RESEED_OFFSETS), best_residual)


def planar_reach(q_a: Sequence[float], params: RobotParams) -> float:
    """Distance from the shoulder axis to the wrist centre in the elbow plane"""
    frames = arm_frames(q_a, params)
    shoulder, wrist = frames[1], frames[3]
    axis = shoulder.rotation[:, 2]
    offset = wrist.translation - shoulder.translation
    return float(np.linalg.norm(offset - np.dot(offset, axis) * axis))


def max_tip_height(
    params: RobotParams,
    rng: np.random.Generator,
    n_samples: int = 1_000_000,
    batch_size: int = 100_000,
    refine: bool = True,
) -> Tuple[float, np.ndarray]:
    """Random configuration sweep of tip height, optionally polished by local optimization"""
    best_height, best_q = -np.inf, np.zeros(6)
    remaining = n_samples
    while remaining > 0:
        count = min(batch_size, remaining)
        q_batch = rng.uniform(-np.pi, np.pi, size=(count, 6))
        heights = arm_tip_positions(q_batch, params)[:, 2]
        index = int(np.argmax(heights))
        if heights[index] > best_height:
            best_height, best_q = float(heights[index]), q_batch[index].copy()
        remaining -= count
    logger.info("Reach sweep over %d samples: max tip height %.4f m", n_samples, best_height)
    if refine:
        result = minimize(
            lambda q: -arm_tip_positions(q[None, :], params)[0, 2], best_q, method="BFGS"
        )
        if -result.fun > best_height:
            best_height, best_q = float(-result.fun), result.x
            logger.info("Refined max tip height %.4f m", best_height)
    return best_height, best_q
