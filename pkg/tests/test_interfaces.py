import io
import json
import math
import os

import pytest
from fastapi import HTTPException
from fastapi.testclient import TestClient

import cli
from main import app
from services.simulation import run_verification
from services.simulation.simulation_router import _run_dir_path

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PARAMS_PATH = os.path.join(ROOT, "config", "robopainter.params.json")
ROOMS_DIR = os.path.join(ROOT, "config", "rooms")

SMALL_ROOM = {
    "name": "small",
    "footprint": {"Lx": 4.0, "Ly": 4.0},
    "height": 2.7,
    "start_pose": [2.0, 2.0, -math.pi / 2],
}

STOPPED_RUN = {
    "room": SMALL_ROOM,
    "config": {
        "seed": 3,
        "dynamics_mode": "kinematic",
        "user_events": [{"t": 1.0, "action": "stop"}],
    },
}


def _core_strips(plan):
    return [len([s for s in wall["strips"] if s["section"] == "core"]) for wall in plan["walls"]]


@pytest.fixture
def client(isolated_config):
    return TestClient(app)


# -- HTTP -------------------------------------------------------------------------------

def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_status_reports_bundled_rooms(client):
    body = client.get("/api/robopainter/status").json()
    assert body["status"] == "ready"
    assert "empty4x4.json" in body["rooms"]


def test_params_report(client):
    body = client.get("/api/robopainter/params").json()
    assert body["valid"] is True
    assert body["violations"] == []
    assert body["total_mass"] == pytest.approx(20.668)


def test_plan_from_body(client):
    response = client.post("/api/robopainter/plan", json=SMALL_ROOM)
    assert response.status_code == 200
    assert _core_strips(response.json()) == [17, 17, 17, 17]


def test_plan_rejects_start_outside_room(client):
    room = dict(SMALL_ROOM, start_pose=[5.0, 2.0, 0.0])
    assert client.post("/api/robopainter/plan", json=room).status_code == 422


def test_plan_from_upload(client):
    with open(os.path.join(ROOMS_DIR, "empty4x4.json"), "rb") as f:
        content = f.read()
    response = client.post("/api/robopainter/plan/upload",
                           files={"file": ("empty4x4.json", io.BytesIO(content), "application/json")})
    assert response.status_code == 200
    assert _core_strips(response.json()) == [17, 17, 17, 17]


@pytest.mark.parametrize("content", [b"{not json", json.dumps(dict(SMALL_ROOM, start_pose=[5.0, 2.0, 0.0])).encode()])
def test_rejected_upload_is_not_kept(client, isolated_config, content):
    response = client.post("/api/robopainter/plan/upload",
                           files={"file": ("bad.json", io.BytesIO(content), "application/json")})
    assert response.status_code == 422
    assert os.listdir(os.path.join(isolated_config.OUTPUT_DIR, "uploads")) == []


def test_plan_bundled_room(client):
    assert client.get("/api/robopainter/rooms/empty4x4/plan").status_code == 200
    assert client.get("/api/robopainter/rooms/missing/plan").status_code == 404


def test_simulate_list_download_cleanup(client, isolated_config):
    response = client.post("/api/robopainter/simulate", json=STOPPED_RUN)
    assert response.status_code == 200
    report = response.json()
    assert report["stop_reason"] == "stopped by user"
    assert report["success"] is False
    assert os.path.isfile(report["outputs"]["report"])

    runs = client.get("/api/robopainter/outputs").json()["runs"]
    assert len(runs) == 1
    assert runs[0]["summary"]["seed"] == 3
    names = [f["filename"] for f in runs[0]["files"]]
    assert f"{runs[0]['run']}/report.json" in names

    download = client.get(f"/api/robopainter/download/{runs[0]['run']}/report.json")
    assert download.status_code == 200
    assert download.json()["room"] == "small"
    assert client.get("/api/robopainter/download/run_none/report.json").status_code == 404

    cleanup = client.delete("/api/robopainter/cleanup").json()
    assert cleanup["runs_deleted"] == 1
    assert client.get("/api/robopainter/outputs").json()["total_runs"] == 0


def test_simulate_failure_returns_partial_report(client):
    request = {"room": SMALL_ROOM, "config": {"seed": 3, "dynamics_mode": "kinematic", "duration_cap": 2.0}}
    response = client.post("/api/robopainter/simulate", json=request)
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert "duration cap" in detail["reason"]
    assert detail["report"]["success"] is False


def test_simulate_rejects_invalid_config(client):
    request = {"room": SMALL_ROOM, "config": {"dt": -1.0}}
    assert client.post("/api/robopainter/simulate", json=request).status_code == 422


def test_download_cannot_leave_output_dir(isolated_config):
    with pytest.raises(HTTPException) as info:
        _run_dir_path(isolated_config, "../secret.txt")
    assert info.value.status_code == 400


# -- command line -----------------------------------------------------------------------

def test_cli_plan_prints_seventeen_strips_per_wall(isolated_config, capsys):
    assert cli.main(["plan", "--room", "empty4x4.json"]) == cli.EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert _core_strips(plan) == [17, 17, 17, 17]


def test_cli_plan_writes_files(isolated_config, tmp_path):
    assert cli.main(["plan", "--room", "empty4x4.json", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert (tmp_path / "plan.json").is_file()
    assert (tmp_path / "plan.svg").is_file()


def test_cli_params_validate(isolated_config):
    assert cli.main(["params", "--validate", PARAMS_PATH]) == cli.EXIT_OK


def test_cli_params_missing_file_is_a_config_error(isolated_config, tmp_path):
    assert cli.main(["params", "--validate", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_cli_bad_arguments(isolated_config):
    assert cli.main(["simulate", "--bogus"]) == cli.EXIT_USAGE
    assert cli.main([]) == cli.EXIT_USAGE


def test_cli_unknown_room_is_a_config_error(isolated_config, tmp_path):
    assert cli.main(["simulate", "--room", str(tmp_path / "nowhere.json")]) == cli.EXIT_CONFIG


def _write_room_and_config(tmp_path, **config):
    room_path = tmp_path / "small.json"
    room_path.write_text(json.dumps(SMALL_ROOM))
    config_path = tmp_path / "sim.json"
    config_path.write_text(json.dumps(config))
    return str(room_path), str(config_path)


def test_cli_mission_failure_exit_code(isolated_config, tmp_path):
    room, config = _write_room_and_config(tmp_path, duration_cap=2.0)
    argv = ["simulate", "--room", room, "--config", config, "--mode", "kinematic", "--out", str(tmp_path / "run")]
    assert cli.main(argv) == cli.EXIT_MISSION
    assert (tmp_path / "run" / "report.json").is_file()


def test_cli_same_seed_gives_identical_traces(isolated_config, tmp_path):
    room, config = _write_room_and_config(tmp_path, user_events=[{"t": 10.0, "action": "stop"}])
    traces = []
    for name in ("a", "b"):
        out = tmp_path / name
        argv = ["simulate", "--room", room, "--config", config, "--seed", "7", "--mode", "kinematic", "--out", str(out)]
        assert cli.main(argv) == cli.EXIT_OK
        traces.append((out / "trace.jsonl").read_bytes())
    assert traces[0] == traces[1]
    assert traces[0]


# -- verification suite -----------------------------------------------------------------

@pytest.mark.slow
def test_quick_verification(params, empty_room):
    report = run_verification(params, empty_room, quick=True)
    cases = {case.name: case for case in report.cases}
    for name in ("link_mass_sum", "planar_reach", "strip_spray_time", "pure_paint_rate",
                 "core_strip_count", "base_post_count", "energy_drift", "lagrange_vs_newton_euler"):
        assert cases[name].passed, cases[name]
    assert report.passed == all(case.passed for case in report.cases)
