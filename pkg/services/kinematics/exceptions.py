from services.errors import RoboPainterError


class KinematicsError(RoboPainterError):
    """Base class for kinematic failures"""


class NoConvergence(KinematicsError):
    """Inverse kinematics did not reach the target"""

    def __init__(self, iterations: int, residual: float) -> None:
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"IK did not converge after {iterations} iterations (residual {residual:.3e})")


class CastorSingularity(KinematicsError):
    """Castor geometry has a vanishing denominator (zero trail)"""
