from .exceptions import DynamicsError, RankDeficient, SingularInertia
from .christoffel import christoffel_coriolis, christoffel_symbols, mass_matrix_rate
from .newton_euler import arm_inverse_dynamics_newton_euler
from .arm_dynamics import (
    FrictionCoefficients,
    actuator_torque,
    arm_coriolis,
    arm_energy,
    arm_forward_dynamics,
    arm_gravity,
    arm_inverse_dynamics_lagrange,
    arm_kinetic_energy,
    arm_lumped_body,
    arm_mass_matrix,
    arm_potential_energy,
    friction_torque,
)
from .base_dynamics import (
    BaseDynamics,
    BaseDynamicsModel,
    base_kinetic_energy,
    base_mass_matrix,
    recover_lagrange_multipliers,
    reduce_base_dynamics,
)
from .external_forces import SprayDisturbance, spray_external_torque
