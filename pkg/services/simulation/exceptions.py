from typing import Optional

from services.errors import RoboPainterError


class SimulationError(RoboPainterError):
    """Base class for simulation failures"""


class MissionFailed(SimulationError):
    """Mission did not terminate normally; the partial report is attached"""

    def __init__(self, reason: str, report: Optional[object] = None, result: Optional[object] = None) -> None:
        self.reason = reason
        self.report = report
        self.result = result
        super().__init__(f"mission failed: {reason}")
