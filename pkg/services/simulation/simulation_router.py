import json
import logging
import os
import shutil
import uuid
from datetime import datetime
from typing import Optional

import aiofiles
from fastapi import APIRouter, File, HTTPException, UploadFile
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import FileResponse

from config.config import Config
from services.errors import RoboPainterError
from services.mission import RoomDocument, load_room, room_from_document
from services.params import ParamsValidationReport, load_params_file, params_report
from services.trajectory import PaintPlan, plan_paint
from .exceptions import MissionFailed
from .reports import simulate
from .sim_schema import MissionReport, SimulationRequest

logger = logging.getLogger(__name__)

# Initialize router
router = APIRouter(prefix="/api/robopainter", tags=["RoboPainter Simulation"])

_MEDIA_TYPES = {
    ".json": "application/json",
    ".jsonl": "application/x-ndjson",
    ".csv": "text/csv",
    ".svg": "image/svg+xml",
}


def _run_dir_path(config: Config, name: str) -> str:
    """Resolve a path under OUTPUT_DIR, refusing anything that escapes it"""
    root = os.path.realpath(config.OUTPUT_DIR)
    path = os.path.realpath(os.path.join(root, name))
    if os.path.commonpath([root, path]) != root:
        raise HTTPException(status_code=400, detail="Path escapes the output directory")
    return path


@router.get("/status", summary="Get simulator status")
async def get_status():
    """Configured model files and the output directory"""
    try:
        config = Config.get_instance()
        rooms = []
        if os.path.isdir(config.ROOMS_DIR):
            rooms = sorted(f for f in os.listdir(config.ROOMS_DIR) if f.endswith(".json"))
        return {
            "status": "ready" if not config.validate() else "misconfigured",
            "timestamp": datetime.now().isoformat(),
            "problems": config.validate(),
            "params_path": config.PARAMS_PATH,
            "rooms": rooms,
            "output_directory": config.OUTPUT_DIR,
        }
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error getting status: {str(e)}")


@router.get("/params", response_model=ParamsValidationReport, summary="Validate the robot parameter file")
async def get_params_report():
    try:
        return params_report(Config.get_instance().PARAMS_PATH)
    except RoboPainterError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error validating parameters: {str(e)}")


@router.get("/rooms/{name}/plan", response_model=PaintPlan, summary="Plan a bundled room")
async def plan_bundled_room(name: str):
    """Strip and base-post plan of a room file shipped in ROOMS_DIR"""
    try:
        config = Config.get_instance()
        path = os.path.join(config.ROOMS_DIR, os.path.basename(name))
        if not path.endswith(".json"):
            path += ".json"
        if not os.path.isfile(path):
            raise HTTPException(status_code=404, detail="Room not found")
        return plan_paint(load_room(path).walls())
    except HTTPException:
        raise
    except RoboPainterError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error planning room: {str(e)}")


@router.post("/plan", response_model=PaintPlan, summary="Plan strips and base posts for a room")
async def plan_room(room: RoomDocument):
    try:
        model = room_from_document(room.model_dump())
        return plan_paint(model.walls())
    except RoboPainterError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error planning room: {str(e)}")


def _discard_upload(file_path: Optional[str]) -> None:
    if file_path and os.path.exists(file_path):
        os.remove(file_path)
        logger.info("Removed rejected upload %s", file_path)


@router.post("/plan/upload", response_model=PaintPlan, summary="Upload a room file and plan it")
async def upload_and_plan_room(file: UploadFile = File(...)):
    """
    Upload a room description (JSON) and return its paint plan.
    The uploaded file is kept under OUTPUT_DIR/uploads.
    """
    file_path = None
    try:
        config = Config.get_instance()
        upload_dir = os.path.join(config.ensure_output_dir(), "uploads")
        os.makedirs(upload_dir, exist_ok=True)
        file_path = os.path.join(upload_dir, f"{uuid.uuid4()}_{os.path.basename(file.filename or 'room.json')}")

        async with aiofiles.open(file_path, "wb") as f:
            content = await file.read()
            await f.write(content)
        logger.info("Uploaded room file %s (%d bytes)", file.filename, len(content))

        return plan_paint(load_room(file_path).walls())

    except RoboPainterError as e:
        _discard_upload(file_path)
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        _discard_upload(file_path)
        raise HTTPException(status_code=500, detail=f"Error planning uploaded room: {str(e)}")


@router.post("/simulate", response_model=MissionReport, summary="Run a full painting mission")
async def simulate_mission(request: SimulationRequest):
    """
    Simulate a mission in the posted room and write its outputs into a fresh
    run directory under OUTPUT_DIR. A failed mission answers 422 with the
    stop reason and the partial report.
    """
    try:
        config = Config.get_instance()
        run_id = f"run_{uuid.uuid4().hex[:12]}"
        sim_config = request.config.model_copy(
            update={"output_dir": os.path.join(config.ensure_output_dir(), run_id)}
        )
        room = room_from_document(request.room.model_dump())
        params = load_params_file(config.PARAMS_PATH)
        result = await run_in_threadpool(simulate, params, room, sim_config)
        return result.report

    except MissionFailed as e:
        report = e.report.model_dump(mode="json") if isinstance(e.report, MissionReport) else None
        raise HTTPException(status_code=422, detail={"reason": e.reason, "report": report})
    except RoboPainterError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error running simulation: {str(e)}")


@router.get("/outputs", summary="List simulation runs and their files")
async def list_outputs():
    try:
        config = Config.get_instance()
        runs = []
        if os.path.exists(config.OUTPUT_DIR):
            for run_name in sorted(os.listdir(config.OUTPUT_DIR)):
                run_dir = os.path.join(config.OUTPUT_DIR, run_name)
                if not run_name.startswith("run_") or not os.path.isdir(run_dir):
                    continue
                files = []
                for filename in sorted(os.listdir(run_dir)):
                    file_stat = os.stat(os.path.join(run_dir, filename))
                    files.append({
                        "filename": f"{run_name}/{filename}",
                        "size": file_stat.st_size,
                        "modified": datetime.fromtimestamp(file_stat.st_mtime).isoformat(),
                    })
                summary = None
                report_path = os.path.join(run_dir, "report.json")
                if os.path.exists(report_path):
                    async with aiofiles.open(report_path, "r", encoding="utf-8") as f:
                        report = json.loads(await f.read())
                    summary = {k: report.get(k) for k in ("room", "seed", "success", "covered_fraction")}
                runs.append({"run": run_name, "files": files, "summary": summary})

        return {
            "success": True,
            "output_directory": config.OUTPUT_DIR,
            "runs": runs,
            "total_runs": len(runs),
        }
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error listing outputs: {str(e)}")


@router.get("/download/{name:path}", summary="Download a simulation output file")
async def download_output_file(name: str):
    try:
        config = Config.get_instance()
        file_path = _run_dir_path(config, name)
        if not os.path.isfile(file_path):
            raise HTTPException(status_code=404, detail="Output file not found")
        media_type = _MEDIA_TYPES.get(os.path.splitext(file_path)[1], "application/octet-stream")
        return FileResponse(path=file_path, filename=os.path.basename(file_path), media_type=media_type)

    except HTTPException:
        raise
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error downloading file: {str(e)}")


@router.delete("/cleanup", summary="Delete all simulation runs and uploads")
async def cleanup_outputs():
    try:
        config = Config.get_instance()
        run_count = 0
        upload_count = 0
        if os.path.exists(config.OUTPUT_DIR):
            for entry in os.listdir(config.OUTPUT_DIR):
                path = os.path.join(config.OUTPUT_DIR, entry)
                if entry.startswith("run_") and os.path.isdir(path):
                    shutil.rmtree(path, ignore_errors=True)
                    run_count += 1
                elif entry == "uploads" and os.path.isdir(path):
                    upload_count += len(os.listdir(path))
                    shutil.rmtree(path, ignore_errors=True)

        logger.info("Cleanup removed %d runs and %d uploads", run_count, upload_count)
        return {
            "success": True,
            "message": f"Cleaned up {run_count} runs and {upload_count} uploads",
            "runs_deleted": run_count,
            "uploads_deleted": upload_count,
        }
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Error cleaning up outputs: {str(e)}")
