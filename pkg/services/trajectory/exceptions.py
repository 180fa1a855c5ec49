from services.errors import RoboPainterError


class TrajectoryError(RoboPainterError):
    """Base class for planning failures"""


class NonpositiveDuration(TrajectoryError):
    def __init__(self, duration: float) -> None:
        self.duration = duration
        super().__init__(f"segment duration must be positive, got {duration}")


class WallTooNarrow(TrajectoryError):
    def __init__(self, width: float, minimum: float) -> None:
        self.width = width
        super().__init__(f"wall width {width:.3f} m is below one strip ({minimum} m)")


class WallTooTall(TrajectoryError):
    def __init__(self, height: float, maximum: float) -> None:
        self.height = height
        super().__init__(f"wall height {height:.3f} m exceeds the {maximum} m paint reach")


class StripOutOfLateralRange(TrajectoryError):
    def __init__(self, offset: float, limit: float) -> None:
        self.offset = offset
        super().__init__(f"strip lateral offset {offset:+.3f} m exceeds +/-{limit} m")
