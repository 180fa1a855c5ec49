from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from services.kinematics.transforms import KKRow


# ---------------------------------------------------------------------------
# Parameter file document (what is on disk)
# ---------------------------------------------------------------------------

class UnitsHeader(BaseModel):
    """Declared units of the parameter file sections"""
    geometry: str = "mm"
    cg: str = "mm"
    mass: str = "kg"
    inertia: str = "kg.m2"
    reflected_inertia: str = "kg.m2"
    torque_constant: str = "N.m/A"
    spray_length: str = "mm"
    angle: str = "rad"


class KKRowDocument(BaseModel):
    """One kk_table row; lengths may reference a geometry symbol by name"""
    joint: Optional[int] = None
    alpha: float
    d: Union[float, str]
    theta_offset: float = 0.0
    r: Union[float, str]


class SprayDocument(BaseModel):
    pattern_width: float
    pattern_height: float
    vibration_band: List[float] = Field(min_length=2, max_length=2)
    reaction_force: float = 1.0
    gun_mass: Optional[float] = None


class DynamicsDocument(BaseModel):
    gravity: float = 9.81
    viscous_friction: float = 0.1
    coulomb_friction: float = 0.05
    friction_epsilon: float = 1e-3


class ParamsDocument(BaseModel):
    """Top-level structure of robopainter.params.json"""
    schema_version: int = 1
    units: UnitsHeader
    geometry: Dict[str, Any]
    links: Dict[str, Dict[str, float]]
    motors: Dict[str, float]
    spray: SprayDocument
    dynamics: DynamicsDocument = Field(default_factory=DynamicsDocument)


class ParamsValidationReport(BaseModel):
    """Outcome of validate_params as served over HTTP and the CLI"""
    valid: bool
    violations: List[str]
    warnings: List[str]
    total_mass: float
    symbol_count: int


# ---------------------------------------------------------------------------
# Runtime records (SI units, immutable)
# ---------------------------------------------------------------------------

def _frozen_array(values: Any, shape: Tuple[int, ...]) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(shape)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class GeometricParams:
    RL1: float
    D1: float
    RL2: float
    D3: float
    RL4: float
    D4: float
    RL5: float
    RL7: float
    a: float
    b: float
    r_c: float
    r_f: float
    p: float
    d: float
    kk_table: Tuple[KKRow, ...]
    arm_mount: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "arm_mount", _frozen_array(self.arm_mount, (3,)))

    @property
    def planar_reach(self) -> float:
        return self.D3 + self.D4


@dataclass(frozen=True)
class LinkInertial:
    """Mass, C.G. (link frame) and inertia tensor about the C.G."""
    name: str
    mass: float
    cg: np.ndarray
    inertia: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "cg", _frozen_array(self.cg, (3,)))
        object.__setattr__(self, "inertia", _frozen_array(self.inertia, (3, 3)))


@dataclass(frozen=True)
class MotorParams:
    name: str
    reflected_inertia: float
    torque_constant: float


@dataclass(frozen=True)
class SprayParams:
    pattern_width: float
    pattern_height: float
    vibration_band: Tuple[float, float]
    reaction_force: float
    gun_mass: float


@dataclass(frozen=True)
class DynamicsDefaults:
    gravity: float = 9.81
    viscous_friction: float = 0.1
    coulomb_friction: float = 0.05
    friction_epsilon: float = 1e-3


@dataclass(frozen=True)
class RobotParams:
    """Every model parameter in SI units, plus the document it came from"""
    geometry: GeometricParams
    arm_links: Tuple[LinkInertial, ...]
    base_link: LinkInertial
    orientable_hub: LinkInertial
    castor_wheel: LinkInertial
    fixed_wheel: LinkInertial
    arm_motors: Tuple[MotorParams, ...]
    wheel_motors: Tuple[MotorParams, ...]
    spray: SprayParams
    dynamics: DynamicsDefaults
    symbols: Dict[str, float] = field(compare=False, repr=False)
    document: Dict[str, Any] = field(compare=False, repr=False)

    def si_value(self, name: str) -> float:
        """Value of a table symbol (e.g. "M6", "Kt2", "RL7") in SI units"""
        from .exceptions import MissingKey

        if name not in self.symbols:
            raise MissingKey(name)
        return self.symbols[name]

    @property
    def arm_rotor_inertia(self) -> np.ndarray:
        return np.array([m.reflected_inertia for m in self.arm_motors])

    @property
    def wheel_rotor_inertia(self) -> np.ndarray:
        return np.array([m.reflected_inertia for m in self.wheel_motors])
