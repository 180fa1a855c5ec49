"""Run outputs: mission report, JSON-lines trace, joint log, plan and coverage views."""
import logging
import os
from typing import Dict, Iterable, Optional

import numpy as np

from services.mission.mission_schema import TraceRecord
from services.mission.room import RoomModel
from services.params.params_schema import RobotParams
from services.trajectory.plan_export import write_coverage_svg, write_plan_json, write_plan_svg
from .exceptions import MissionFailed
from .mission_runner import JOINT_LOG_COLUMNS, MissionResult, run_mission
from .sim_schema import MissionReport, SimConfig

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TRACE_FILE = "trace.jsonl"
JOINT_LOG_FILE = "joint_log.csv"
PLAN_JSON_FILE = "plan.json"
PLAN_SVG_FILE = "plan.svg"


def write_trace(records: Iterable[TraceRecord], path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(record.model_dump_json())
            f.write("\n")
    return path


def write_joint_log(rows: np.ndarray, path: str) -> str:
    np.savetxt(path, rows, delimiter=",", header=",".join(JOINT_LOG_COLUMNS), comments="", fmt="%.6g")
    return path


def write_report(report: MissionReport, path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(report.model_dump_json(indent=2))
    return path


def write_outputs(result: MissionResult, out_dir: str, config: Optional[SimConfig] = None) -> Dict[str, str]:
    """Write every enabled artifact into out_dir; the report lists them and is written last"""
    config = config or SimConfig()
    os.makedirs(out_dir, exist_ok=True)
    outputs: Dict[str, str] = {}
    paint = result.plan.paint
    outputs["plan_json"] = write_plan_json(paint, os.path.join(out_dir, PLAN_JSON_FILE))
    if config.write_trace:
        outputs["trace"] = write_trace(result.trace, os.path.join(out_dir, TRACE_FILE))
    if config.write_joint_log and len(result.joint_log):
        outputs["joint_log"] = write_joint_log(result.joint_log, os.path.join(out_dir, JOINT_LOG_FILE))
    if config.write_svg:
        outputs["plan_svg"] = write_plan_svg(paint, os.path.join(out_dir, PLAN_SVG_FILE), result.coverages)
        for coverage, wall_plan in zip(result.coverages, paint.walls):
            name = f"coverage_wall{coverage.wall_id}"
            outputs[name] = write_coverage_svg(coverage, wall_plan, os.path.join(out_dir, f"{name}.svg"))
    outputs["report"] = os.path.join(out_dir, REPORT_FILE)
    result.report.outputs = dict(outputs)
    write_report(result.report, outputs["report"])
    logger.info("Wrote %d output files to %s", len(outputs), out_dir)
    return outputs


def simulate(params: RobotParams, room: RoomModel, config: Optional[SimConfig] = None) -> MissionResult:
    """run_mission plus output files when config.output_dir is set, also for a failed mission"""
    config = config or SimConfig()
    try:
        result = run_mission(params, room, config)
    except MissionFailed as exc:
        if config.output_dir and exc.result is not None:
            write_outputs(exc.result, config.output_dir, config)
        raise
    if config.output_dir:
        write_outputs(result, config.output_dir, config)
    return result
