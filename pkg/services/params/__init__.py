from .exceptions import InvariantViolation, MissingKey, ParamsError, UnitViolation
from .loader import (
    SYMBOL_NAMES,
    arm_mass,
    build_robot_params,
    inertia_warnings,
    load_params_file,
    load_robot_params,
    params_report,
    read_params_document,
    replace_symbol,
    serialize_params,
    total_mass,
    validate_params,
)
from .params_schema import (
    DynamicsDefaults,
    GeometricParams,
    LinkInertial,
    MotorParams,
    ParamsValidationReport,
    RobotParams,
    SprayParams,
)
