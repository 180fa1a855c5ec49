from .exceptions import CastorSingularity, KinematicsError, NoConvergence
from .transforms import KKRow, Transform, compose, kk_inverse_transform, kk_transform
from .arm_kinematics import (
    arm_fk,
    arm_fk_matrix,
    arm_frames,
    arm_ik,
    arm_ik_position,
    arm_jacobian,
    arm_tip_positions,
    max_tip_height,
    planar_reach,
)
from .base_kinematics import (
    base_constraint_matrix,
    base_mobility_matrix,
    base_mobility_matrix_rate,
    constraint_residual,
    lift_velocity,
    wheel_rates,
)
