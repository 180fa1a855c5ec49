from services.errors import RoboPainterError


class DynamicsError(RoboPainterError):
    """Base class for dynamic model failures"""


class SingularInertia(DynamicsError):
    """Inertia matrix too ill-conditioned to invert"""

    def __init__(self, condition: float) -> None:
        self.condition = condition
        super().__init__(f"inertia matrix is singular (condition number {condition:.3e})")


class RankDeficient(DynamicsError):
    """Constraint matrix lost row rank"""

    def __init__(self, rank: int, rows: int) -> None:
        self.rank = rank
        self.rows = rows
        super().__init__(f"constraint matrix rank {rank} < {rows} rows")
