from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from services.mission.mission_schema import PauseEvent, RoomDocument

REPORT_SCHEMA_VERSION = 1


class IntegratorKind(str, Enum):
    RK4 = "RK4"
    SEMI_IMPLICIT_EULER = "semi-implicit-Euler"


class DynamicsMode(str, Enum):
    FULL = "full"
    SAMPLED = "sampled"
    KINEMATIC = "kinematic"


class UserEvent(BaseModel):
    """Push-button event injected at simulation time t"""
    t: float = Field(ge=0.0)
    action: Literal["pause", "resume", "stop"]


class SimConfig(BaseModel):
    """Simulation tunables; every field has a working default"""
    dt: float = Field(default=1e-3, gt=0.0)
    base_dt: float = Field(default=0.01, gt=0.0)
    executive_dt: float = Field(default=0.05, gt=0.0)
    duration_cap: float = Field(default=3600.0, gt=0.0)
    integrator: IntegratorKind = IntegratorKind.RK4
    kp: List[float] = Field(default_factory=lambda: [400.0] * 6)
    kd: List[float] = Field(default_factory=lambda: [40.0] * 6)
    base_velocity_gain: float = Field(default=20.0, ge=0.0)
    base_speed_cap: float = Field(default=0.5, gt=0.0)
    base_accel: float = Field(default=1.0, gt=0.0)
    seed: Optional[int] = None
    dynamics_mode: DynamicsMode = DynamicsMode.SAMPLED
    sample_walls: List[int] = Field(default_factory=lambda: [0])
    sonar_noise: float = Field(default=0.005, ge=0.0)
    odometry_radius_errors: Tuple[float, float] = (0.003, -0.002)
    odometry_rate_noise: float = Field(default=0.01, ge=0.0)
    corrections: bool = True
    disturbances: bool = True
    cup_capacity: float = Field(default=600.0, gt=0.0)
    refill_delay: float = Field(default=30.0, ge=0.0)
    max_pause: float = Field(default=600.0, gt=0.0)
    user_events: List[UserEvent] = Field(default_factory=list)
    output_dir: Optional[str] = None
    write_trace: bool = True
    write_joint_log: bool = True
    write_svg: bool = True
    trace_every: int = Field(default=1, ge=1)
    joint_log_every: int = Field(default=10, ge=1)

    @field_validator("kp", "kd")
    @classmethod
    def _gains(cls, value: List[float]) -> List[float]:
        if len(value) == 1:
            value = value * 6
        if len(value) != 6:
            raise ValueError("gains need one value or one per joint")
        if any(g < 0.0 for g in value):
            raise ValueError("gains must be non-negative")
        return value

    @field_validator("sample_walls")
    @classmethod
    def _walls(cls, value: List[int]) -> List[int]:
        if any(k not in range(4) for k in value):
            raise ValueError("sample_walls entries must be wall ids 0..3")
        return value


class PaintingRates(BaseModel):
    """m^2/h; core covers strip painting plus post hops, overall runs from the first strip to the end"""
    painting: float
    core: float
    overall: float
    spray: float


class LocalizationStats(BaseModel):
    mean_error: float
    rms_error: float
    max_error: float
    final_error: float
    max_heading_error: float


class PowerReport(BaseModel):
    """Integrated |torque . rate| over the stretches simulated with dynamics"""
    arm_energy: float
    wheel_energy: float
    arm_time: float
    base_time: float


class WallCoverage(BaseModel):
    wall_id: int
    covered_fraction: float
    overlap_fraction: float
    paintable_area: float
    covered_area: float
    overspray_area: float
    max_passes: int


class MissionReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    room: str
    seed: int
    dynamics_mode: DynamicsMode
    success: bool
    stop_reason: Optional[str] = None
    painted_area: float
    paintable_area: float
    wall_area: float
    opening_area: float
    covered_fraction: float = Field(ge=0.0, le=1.0)
    spray_time: float
    total_time: float
    painting_time: float
    core_time: float
    rates: PaintingRates
    max_tracking_error: float
    max_constraint_residual: Optional[float] = None
    ik_failures: int = 0
    localization: LocalizationStats
    pause_events: List[PauseEvent] = Field(default_factory=list)
    phase_entries: Dict[str, int] = Field(default_factory=dict)
    phase_time: Dict[str, float] = Field(default_factory=dict)
    walls: List[WallCoverage] = Field(default_factory=list)
    power: PowerReport
    outputs: Dict[str, str] = Field(default_factory=dict)


class SimulationRequest(BaseModel):
    """HTTP body of a simulate call"""
    room: RoomDocument
    config: SimConfig = Field(default_factory=SimConfig)


class VerifyCase(BaseModel):
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""
    seconds: float = 0.0


class VerifyReport(BaseModel):
    passed: bool
    cases: List[VerifyCase]
