"""Command line entry points: simulate, plan, verify, params.

Exit codes: 0 success, 1 invalid arguments, 2 configuration errors,
3 mission failure.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from config.config import Config, setup_logging
from services.mission import RoomError, load_room
from services.params import ParamsError, load_params_file, params_report, read_params_document
from services.simulation import DynamicsMode, MissionFailed, SimConfig, run_verification, simulate
from services.trajectory import plan_paint, plan_to_json, write_plan_json, write_plan_svg

logger = logging.getLogger("robopainter.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_MISSION = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _room_path(name: str) -> str:
    """Accept a path or the file name of a room shipped in ROOMS_DIR"""
    if os.path.exists(name):
        return name
    bundled = os.path.join(Config.get_instance().ROOMS_DIR, name)
    if os.path.exists(bundled):
        return bundled
    if os.path.exists(bundled + ".json"):
        return bundled + ".json"
    return name


def _sim_config(args: argparse.Namespace) -> SimConfig:
    document = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            document = json.load(f)
    config = SimConfig.model_validate(document)
    update = {}
    if args.seed is not None:
        update["seed"] = args.seed
    if args.out:
        update["output_dir"] = args.out
    if args.mode:
        update["dynamics_mode"] = DynamicsMode(args.mode)
    return config.model_copy(update=update)


def cmd_simulate(args: argparse.Namespace) -> int:
    params = load_params_file(args.robot)
    room = load_room(_room_path(args.room))
    config = _sim_config(args)
    if config.output_dir is None:
        config = config.model_copy(update={"output_dir": Config.get_instance().ensure_output_dir()})
    try:
        result = simulate(params, room, config)
    except MissionFailed as exc:
        logger.error("Mission failed: %s", exc.reason)
        return EXIT_MISSION
    report = result.report
    print(f"room {report.room}: covered {report.covered_fraction:.4f}, "
          f"core rate {report.rates.core:.1f} m^2/h, overall rate {report.rates.overall:.1f} m^2/h, "
          f"total time {report.total_time:.1f} s")
    print(f"report: {report.outputs.get('report')}")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    room = load_room(_room_path(args.room))
    plan = plan_paint(room.walls())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_plan_json(plan, os.path.join(args.out, "plan.json"))
        write_plan_svg(plan, os.path.join(args.out, "plan.svg"))
        print(f"{plan.strip_count} strips, {len(plan.posts)} posts written to {args.out}")
    else:
        print(plan_to_json(plan))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    params = load_params_file(args.robot)
    room = load_room(_room_path(args.room))
    report = run_verification(params, room, quick=args.quick, seed=args.seed)
    for case in report.cases:
        status = "PASS" if case.passed else "FAIL"
        print(f"{status} {case.name}: {case.value:.6g} (limit {case.limit:.6g}) {case.detail} [{case.seconds:.1f} s]")
    print("all checks passed" if report.passed else "verification FAILED")
    return EXIT_OK if report.passed else EXIT_MISSION


def cmd_params(args: argparse.Namespace) -> int:
    path = args.validate or args.robot or Config.get_instance().PARAMS_PATH
    if args.validate:
        report = params_report(path)
        print(report.model_dump_json(indent=2))
        return EXIT_OK if report.valid else EXIT_CONFIG
    print(json.dumps(read_params_document(path), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="robopainter", description="RoboPainter wall-painting robot simulator")
    parser.add_argument("--log-level", default=None, help="overrides ROBOPAINTER_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    sim = subparsers.add_parser("simulate", help="run a full painting mission")
    sim.add_argument("--robot", default=None, help="parameter file (default: configured path)")
    sim.add_argument("--room", default="empty4x4.json", help="room file or bundled room name")
    sim.add_argument("--config", default=None, help="SimConfig JSON file")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--mode", choices=[m.value for m in DynamicsMode], default=None)
    sim.set_defaults(handler=cmd_simulate)

    plan = subparsers.add_parser("plan", help="plan strips and base posts only")
    plan.add_argument("--room", required=True)
    plan.add_argument("--out", default=None, help="write plan.json and plan.svg here instead of stdout")
    plan.set_defaults(handler=cmd_plan)

    verify = subparsers.add_parser("verify", help="run the property suite")
    verify.add_argument("--robot", default=None)
    verify.add_argument("--room", default="empty4x4.json")
    verify.add_argument("--quick", action="store_true", help="reduced sample counts, no full mission")
    verify.add_argument("--seed", type=int, default=2024)
    verify.set_defaults(handler=cmd_verify)

    params = subparsers.add_parser("params", help="validate or print the parameter file")
    params.add_argument("--validate", default=None, metavar="PATH")
    params.add_argument("--robot", default=None)
    params.set_defaults(handler=cmd_params)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except (ParamsError, RoomError, ValidationError, json.JSONDecodeError, FileNotFoundError) as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
