from services.errors import RoboPainterError


class MissionError(RoboPainterError):
    """Base class for mission-level failures"""


class InvalidReading(MissionError):
    def __init__(self, sensor: str, status: str) -> None:
        self.sensor = sensor
        self.status = status
        super().__init__(f"sonar {sensor} has no usable reading ({status})")


class WindowNotFull(MissionError):
    def __init__(self, have: int, need: int) -> None:
        self.have = have
        self.need = need
        super().__init__(f"IMU window holds {have} of {need} samples")


class RoomError(MissionError):
    """Room description is inconsistent or unreadable"""
