import copy
import json
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from services.kinematics.transforms import KKRow
from .exceptions import InvariantViolation, MissingKey, ParamsError, UnitViolation
from .params_schema import (
    DynamicsDefaults,
    GeometricParams,
    KKRowDocument,
    LinkInertial,
    MotorParams,
    ParamsDocument,
    ParamsValidationReport,
    RobotParams,
    SprayParams,
)

logger = logging.getLogger(__name__)

REACH_D3_D4 = 1.290
REACH_TOLERANCE = 1e-6
FIXED_WHEEL_RADIUS = 0.254
MAX_TOTAL_MASS = 21.5
PRODUCT_ZERO_TOLERANCE = 1e-12
TRIANGLE_SLACK = 0.05

_LENGTH_DIVISORS = {"mm": 1000.0, "m": 1.0}
_EXPECTED_UNITS = {
    "mass": ("kg",),
    "inertia": ("kg.m2",),
    "reflected_inertia": ("kg.m2",),
    "torque_constant": ("N.m/A",),
    "angle": ("rad", "deg"),
}

GEOMETRY_SYMBOLS = ("RL1", "D1", "RL2", "D3", "RL4", "D4", "RL5", "RL7",
                    "a", "b", "r_c", "r_f", "p", "d")
ARM_LINK_SUFFIXES = ("1", "2", "3", "4", "5", "6")
BASE_LINK_SUFFIXES = {"base_link": "b", "orientable_hub": "o", "castor_wheel": "c", "fixed_wheel": "f"}
WHEEL_MOTOR_SUFFIXES = ("1f", "2f")


def _symbol_layout() -> List[Tuple[str, str, str]]:
    """(section path, symbol, unit key) for every table symbol"""
    layout = [("geometry", name, "geometry") for name in GEOMETRY_SYMBOLS]
    suffixes = list(ARM_LINK_SUFFIXES) + list(BASE_LINK_SUFFIXES.values())
    for s in suffixes:
        layout.append(("links.mass", f"M{s}", "mass"))
    for s in suffixes:
        layout.extend(("links.cg", f"{axis}{s}", "cg") for axis in "XYZ")
    for s in suffixes:
        layout.extend(("links.inertia", f"{axis}{s}", "inertia") for axis in ("XX", "YY", "ZZ"))
    for s in suffixes:
        layout.extend(("links.products", f"{axis}{s}", "inertia") for axis in ("XY", "XZ", "YZ"))
    for s in ARM_LINK_SUFFIXES + WHEEL_MOTOR_SUFFIXES:
        layout.append(("motors", f"Ia{s}", "reflected_inertia"))
        layout.append(("motors", f"Kt{s}", "torque_constant"))
    return layout


SYMBOL_LAYOUT = _symbol_layout()
SYMBOL_NAMES = tuple(symbol for _, symbol, _ in SYMBOL_LAYOUT)


def _section(document: Dict[str, Any], path: str) -> Dict[str, Any]:
    node: Any = document
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise MissingKey(path)
        node = node[part]
    return node


def _divisor(units: Dict[str, str], key: str) -> float:
    unit = units.get(key)
    if key in ("geometry", "cg", "spray_length"):
        if unit not in _LENGTH_DIVISORS:
            raise UnitViolation(key, f"expected one of {sorted(_LENGTH_DIVISORS)}, got {unit!r}")
        return _LENGTH_DIVISORS[unit]
    if unit not in _EXPECTED_UNITS[key]:
        raise UnitViolation(key, f"expected {_EXPECTED_UNITS[key][0]!r}, got {unit!r}")
    return 1.0


def _parse_document(document: Dict[str, Any]) -> ParamsDocument:
    try:
        return ParamsDocument.model_validate(document)
    except ValidationError as exc:
        for error in exc.errors():
            if error.get("type") == "missing":
                raise MissingKey(".".join(str(part) for part in error["loc"])) from exc
        raise ParamsError(f"malformed parameter document: {exc}") from exc


def _read_symbols(document: Dict[str, Any], units: Dict[str, str]) -> Dict[str, float]:
    symbols = {}
    for path, symbol, unit_key in SYMBOL_LAYOUT:
        section = _section(document, path)
        if symbol not in section:
            raise MissingKey(symbol)
        value = section[symbol]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamsError(f"parameter {symbol} must be a number, got {value!r}")
        symbols[symbol] = float(value) / _divisor(units, unit_key)
    return symbols


def _kk_rows(doc: ParamsDocument, symbols: Dict[str, float], units: Dict[str, str]) -> Tuple[KKRow, ...]:
    if "kk_table" not in doc.geometry:
        raise MissingKey("geometry.kk_table")
    divisor = _divisor(units, "geometry")
    to_rad = math.radians if units.get("angle") == "deg" else float

    def length(value: Any) -> float:
        if isinstance(value, str):
            if value not in symbols:
                raise MissingKey(value)
            return symbols[value]
        return float(value) / divisor

    rows = []
    for raw in doc.geometry["kk_table"]:
        try:
            row_doc = KKRowDocument.model_validate(raw)
        except ValidationError as exc:
            raise ParamsError(f"malformed kk_table row {raw!r}: {exc}") from exc
        rows.append(KKRow(
            alpha=to_rad(row_doc.alpha),
            d=length(row_doc.d),
            theta_offset=to_rad(row_doc.theta_offset),
            r=length(row_doc.r),
            joint_index=row_doc.joint,
        ))
    return tuple(rows)


def _tensor(symbols: Dict[str, float], s: str) -> np.ndarray:
    def product(name: str) -> float:
        value = symbols[name]
        return 0.0 if abs(value) < PRODUCT_ZERO_TOLERANCE else value

    xy, xz, yz = product(f"XY{s}"), product(f"XZ{s}"), product(f"YZ{s}")
    return np.array([
        [symbols[f"XX{s}"], xy, xz],
        [xy, symbols[f"YY{s}"], yz],
        [xz, yz, symbols[f"ZZ{s}"]],
    ])


def _link(symbols: Dict[str, float], name: str, s: str) -> LinkInertial:
    return LinkInertial(
        name=name,
        mass=symbols[f"M{s}"],
        cg=[symbols[f"X{s}"], symbols[f"Y{s}"], symbols[f"Z{s}"]],
        inertia=_tensor(symbols, s),
    )


def build_robot_params(document: Dict[str, Any]) -> RobotParams:
    """Convert a parameter document to SI records without checking invariants"""
    doc = _parse_document(document)
    units = doc.units.model_dump()
    symbols = _read_symbols(document, units)

    mount = doc.geometry.get("arm_mount", [0.0, 0.0, 0.0])
    geometry = GeometricParams(
        **{name: symbols[name] for name in GEOMETRY_SYMBOLS},
        kk_table=_kk_rows(doc, symbols, units),
        arm_mount=np.array(mount, dtype=float) / _divisor(units, "geometry"),
    )

    spray_divisor = _divisor(units, "spray_length")
    gun_mass = doc.spray.gun_mass if doc.spray.gun_mass is not None else symbols["M6"]
    spray = SprayParams(
        pattern_width=doc.spray.pattern_width / spray_divisor,
        pattern_height=doc.spray.pattern_height / spray_divisor,
        vibration_band=(float(doc.spray.vibration_band[0]), float(doc.spray.vibration_band[1])),
        reaction_force=doc.spray.reaction_force,
        gun_mass=gun_mass,
    )

    return RobotParams(
        geometry=geometry,
        arm_links=tuple(_link(symbols, f"link{s}", s) for s in ARM_LINK_SUFFIXES),
        **{field_name: _link(symbols, field_name, s) for field_name, s in BASE_LINK_SUFFIXES.items()},
        arm_motors=tuple(
            MotorParams(f"motor{s}", symbols[f"Ia{s}"], symbols[f"Kt{s}"]) for s in ARM_LINK_SUFFIXES
        ),
        wheel_motors=tuple(
            MotorParams(f"motor{s}", symbols[f"Ia{s}"], symbols[f"Kt{s}"]) for s in WHEEL_MOTOR_SUFFIXES
        ),
        spray=spray,
        dynamics=DynamicsDefaults(**doc.dynamics.model_dump()),
        symbols=symbols,
        document=copy.deepcopy(document),
    )


def total_mass(params: RobotParams) -> float:
    """Arm links + base link + 2 x (hub + castor) + 2 x fixed wheel"""
    masses = [link.mass for link in params.arm_links]
    masses.append(params.base_link.mass)
    masses.extend([params.orientable_hub.mass, params.castor_wheel.mass] * 2)
    masses.extend([params.fixed_wheel.mass] * 2)
    return math.fsum(masses)


def arm_mass(params: RobotParams) -> float:
    return math.fsum(link.mass for link in params.arm_links)


def _all_links(params: RobotParams) -> List[LinkInertial]:
    return list(params.arm_links) + [
        params.base_link, params.orientable_hub, params.castor_wheel, params.fixed_wheel
    ]


def validate_params(params: RobotParams) -> List[InvariantViolation]:
    """Report every violated invariant; an empty list means the record is usable"""
    violations: List[InvariantViolation] = []
    geometry = params.geometry

    for name in GEOMETRY_SYMBOLS:
        if not getattr(geometry, name) > 0:
            violations.append(InvariantViolation(f"geometry > 0: {name} = {getattr(geometry, name)}"))
    if abs(geometry.D3 + geometry.D4 - REACH_D3_D4) > REACH_TOLERANCE:
        violations.append(InvariantViolation(
            f"D3+D4 reach: {geometry.D3 + geometry.D4:.6f} m != {REACH_D3_D4} m"
        ))
    if abs(geometry.r_f - FIXED_WHEEL_RADIUS) > 1e-9:
        violations.append(InvariantViolation(f"r_f = {FIXED_WHEEL_RADIUS} m: got {geometry.r_f}"))

    actuated = [row for row in geometry.kk_table if row.actuated]
    if len(actuated) != 6 or len(geometry.kk_table) != 7:
        violations.append(InvariantViolation(
            f"kk_table needs 6 actuated rows + 1 tool row, got {len(actuated)} + {len(geometry.kk_table) - len(actuated)}"
        ))
    elif [row.joint_index for row in actuated] != [1, 2, 3, 4, 5, 6]:
        violations.append(InvariantViolation("kk_table joints must be ordered 1..6"))

    if len(params.arm_links) != 6 or len(params.arm_motors) != 6:
        violations.append(InvariantViolation("exactly 6 arm links and motors"))

    for link in _all_links(params):
        if not link.mass > 0:
            violations.append(InvariantViolation(f"mass > 0: {link.name} = {link.mass}"))
        tensor = link.inertia
        if not np.allclose(tensor, tensor.T, atol=PRODUCT_ZERO_TOLERANCE):
            violations.append(InvariantViolation(f"inertia symmetric: {link.name}"))
        elif np.linalg.eigvalsh(tensor).min() < -PRODUCT_ZERO_TOLERANCE:
            violations.append(InvariantViolation(f"inertia PSD: {link.name}"))

    for motor in list(params.arm_motors) + list(params.wheel_motors):
        if not motor.reflected_inertia > 0:
            violations.append(InvariantViolation(f"motor Ia > 0: {motor.name}"))
        if not motor.torque_constant > 0:
            violations.append(InvariantViolation(f"motor Kt > 0: {motor.name}"))

    low, high = params.spray.vibration_band
    if not 0 <= low < high:
        violations.append(InvariantViolation(f"spray vibration band ordered: [{low}, {high}]"))

    mass = total_mass(params)
    if mass > MAX_TOTAL_MASS:
        violations.append(InvariantViolation(f"total mass <= {MAX_TOTAL_MASS} kg: {mass:.3f} kg"))
    return violations


def inertia_warnings(params: RobotParams, slack: float = TRIANGLE_SLACK) -> List[str]:
    """Triangle-inequality checks on principal moments, with relative slack"""
    warnings = []
    for link in _all_links(params):
        moments = np.linalg.eigvalsh(link.inertia)
        for i in range(3):
            others = moments[(i + 1) % 3] + moments[(i + 2) % 3]
            if others < (1.0 - slack) * moments[i]:
                warnings.append(
                    f"{link.name}: principal moments {moments.round(6).tolist()} break the triangle inequality"
                )
                break
    return warnings


def load_robot_params(document: Dict[str, Any]) -> RobotParams:
    """Build and validate; raise the first violated invariant"""
    params = build_robot_params(document)
    violations = validate_params(params)
    if violations:
        raise violations[0]
    for message in inertia_warnings(params):
        logger.warning(message)
    if params.document.get("spray", {}).get("reaction_force") is None:
        logger.warning("spray reaction force not set; using %.2f N", params.spray.reaction_force)
    logger.info("Loaded robot parameters: %d symbols, total mass %.3f kg", len(params.symbols), total_mass(params))
    return params


def read_params_document(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise ParamsError(f"parameter file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParamsError(f"parameter file is not valid JSON: {path}: {exc}") from exc


def load_params_file(path: Optional[str] = None) -> RobotParams:
    """Load the parameter file (defaults to the configured path)"""
    if path is None:
        from config.config import Config
        path = Config.get_instance().PARAMS_PATH
    logger.debug("Reading parameter file %s", path)
    return load_robot_params(read_params_document(path))


def params_report(path: Optional[str] = None) -> ParamsValidationReport:
    """Validate a parameter file without raising on invariant violations"""
    if path is None:
        from config.config import Config
        path = Config.get_instance().PARAMS_PATH
    params = build_robot_params(read_params_document(path))
    violations = [v.description for v in validate_params(params)]
    return ParamsValidationReport(
        valid=not violations,
        violations=violations,
        warnings=inertia_warnings(params),
        total_mass=total_mass(params),
        symbol_count=len(params.symbols),
    )


def serialize_params(params: RobotParams) -> Dict[str, Any]:
    """Document form of the record, in the units it was loaded with"""
    return copy.deepcopy(params.document)


def replace_symbol(params: RobotParams, name: str, value: float) -> RobotParams:
    """Copy of params with one table symbol set to an SI value (not validated)"""
    for path, symbol, unit_key in SYMBOL_LAYOUT:
        if symbol == name:
            break
    else:
        raise MissingKey(name)
    document = copy.deepcopy(params.document)
    units = document.get("units", {})
    _section(document, path)[name] = value * _divisor(units, unit_key)
    return build_robot_params(document)
