from fastapi import APIRouter, UploadFile, File, HTTPException, BackgroundTasks
from fastapi.responses import FileResponse
from pydantic import ValidationError
import shutil
import os
import uuid
from datetime import datetime
import logging

from marginalflow.config import settings
from marginalflow.core.constraints import load_constraint_file
from marginalflow.core.experiment_runner import ExperimentRunner, resolve_constraint
from marginalflow.errors import ContractError, InputError, ConstraintFileError
from marginalflow.models.experiments import BDConfig, ExperimentKind, SampleConfig, VariationalConfig
from marginalflow.models.flow import FlowParams
from marginalflow.models.jobs import JobKind, JobRequest, JobResponse, JobStatus, UploadResponse
from marginalflow.utils.validators import parse_setting

router = APIRouter()
logger = logging.getLogger(__name__)

# Jobs live in memory for the lifetime of the process
experiment_tasks = {}

OUTPUT_EXTENSIONS = {JobKind.SAMPLE: ".csv", JobKind.BD: ".json", JobKind.VARIATIONAL: ".json"}
MEDIA_TYPES = {
    ".csv": "text/csv",
    ".json": "application/json",
    ".xlsx": "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
}
FLOW_OPTIONS = {"t_max", "stop_D", "gap_tol", "dt_initial", "dt_min", "dt_max", "snapshot_stride"}


def _uploaded_constraint_path(file_id: str) -> str:
    for ext in settings.allowed_extensions:
        potential_path = os.path.join(settings.upload_dir, f"{os.path.basename(file_id)}{ext}")
        if os.path.exists(potential_path):
            return potential_path
    raise HTTPException(status_code=404, detail="Constraint file not found")


def build_job_config(kind: JobKind, request: JobRequest, output_path: str):
    """Request -> run configuration; raises InputError or ValidationError on bad input"""
    options = dict(request.options)
    constraint = request.constraint
    if request.constraint_file_id:
        path = _uploaded_constraint_path(request.constraint_file_id)
        member = f"#{constraint}" if constraint else ""
        constraint = f"{path}{member}"
    common = {
        "setting": parse_setting(request.setting) if request.setting else None,
        "qubits": request.qubits,
        "constraint": constraint,
        "seed": request.seed,
        "jobs": 1,
        "out": output_path,
        "output_format": OUTPUT_EXTENSIONS[kind][1:],
    }
    if kind == JobKind.SAMPLE:
        flow = {k: options.pop(k) for k in list(options) if k in FLOW_OPTIONS}
        return SampleConfig(**common, samples=request.samples, flow=FlowParams(**flow), **options)
    if kind == JobKind.BD:
        return BDConfig(**common, samples=request.samples, **options)
    return VariationalConfig(**common, instances=request.samples, **options)


@router.post("/constraints/upload", response_model=UploadResponse)
async def upload_constraints(file: UploadFile = File(...)):
    """Upload a constraint file; it is validated before being kept"""

    file_ext = os.path.splitext(file.filename)[1].lower()
    if file_ext not in settings.allowed_extensions:
        raise HTTPException(
            status_code=400,
            detail=f"File type {file_ext} not allowed. Allowed types: {settings.allowed_extensions}"
        )

    file.file.seek(0, 2)
    file_size = file.file.tell()
    file.file.seek(0)

    if file_size > settings.max_upload_size:
        raise HTTPException(
            status_code=400,
            detail=f"File too large. Max size: {settings.max_upload_size} bytes"
        )

    file_id = str(uuid.uuid4())
    file_path = os.path.join(settings.upload_dir, f"{file_id}{file_ext}")

    try:
        os.makedirs(settings.upload_dir, exist_ok=True)
        with open(file_path, "wb") as buffer:
            shutil.copyfileobj(file.file, buffer)
    except Exception as e:
        logger.error(f"Failed to save file: {str(e)}")
        raise HTTPException(status_code=500, detail="Failed to save file")

    try:
        constraints = load_constraint_file(file_path)
    except ConstraintFileError as e:
        os.remove(file_path)
        raise HTTPException(status_code=400, detail=str(e))

    return UploadResponse(
        filename=file.filename,
        file_id=file_id,
        constraint_set=constraints.name,
        constraints=len(constraints.constraints),
        size=file_size,
        upload_time=datetime.now()
    )


@router.post("/experiments/{kind}", response_model=JobResponse)
async def start_experiment(kind: JobKind, request: JobRequest, background_tasks: BackgroundTasks):
    """Validate the request and run the campaign in the background"""

    task_id = str(uuid.uuid4())
    output_file = f"{task_id}_{kind.value}{OUTPUT_EXTENSIONS[kind]}"
    output_path = os.path.join(settings.output_dir, output_file)

    try:
        config = build_job_config(kind, request, output_path)
        resolve_constraint(config)
    except (InputError, ValidationError, TypeError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except ContractError as e:
        raise HTTPException(status_code=422, detail=str(e))

    experiment_tasks[task_id] = {
        "status": JobStatus.PENDING,
        "kind": kind,
        "output_file": None,
    }

    background_tasks.add_task(run_experiment_task, task_id, kind, config, output_file)

    return JobResponse(
        task_id=task_id,
        kind=kind,
        status=JobStatus.PENDING,
        message="Experiment started"
    )


@router.get("/status/{task_id}", response_model=JobResponse)
async def get_experiment_status(task_id: str):

    if task_id not in experiment_tasks:
        raise HTTPException(status_code=404, detail="Task not found")

    task = experiment_tasks[task_id]

    return JobResponse(
        task_id=task_id,
        kind=task["kind"],
        status=task["status"],
        message=task.get("message"),
        output_file=task.get("output_file"),
        exit_code=task.get("exit_code")
    )


@router.get("/download/{filename}")
async def download_file(filename: str):

    if os.path.basename(filename) != filename:
        raise HTTPException(status_code=404, detail="File not found")
    file_path = os.path.join(settings.output_dir, filename)

    if not os.path.exists(file_path):
        raise HTTPException(status_code=404, detail="File not found")

    return FileResponse(
        file_path,
        media_type=MEDIA_TYPES.get(os.path.splitext(filename)[1], "application/octet-stream"),
        filename=filename
    )


def run_experiment_task(task_id: str, kind: JobKind, config, output_file: str):
    """Background task; runs in the threadpool since the work is synchronous"""

    try:
        experiment_tasks[task_id]["status"] = JobStatus.PROCESSING
        logger.info(f"Starting {kind.value} experiment {task_id}")

        outcome = ExperimentRunner().run(ExperimentKind(kind.value), config)

        message = "All checked bounds hold" if outcome.exit_code == 0 else "Bound violated"
        experiment_tasks[task_id].update({
            "status": JobStatus.COMPLETED,
            "output_file": output_file,
            "exit_code": outcome.exit_code,
            "message": message
        })
        logger.info(f"Task {task_id} completed with exit code {outcome.exit_code}, output: {output_file}")

    except ContractError as e:
        logger.warning(f"Task {task_id} stopped: {str(e)}")
        experiment_tasks[task_id].update({
            "status": JobStatus.FAILED,
            "exit_code": 2,
            "message": f"{type(e).__name__}: {str(e)}"
        })
    except Exception as e:
        logger.error(f"Experiment failed for task {task_id}: {str(e)}", exc_info=True)
        experiment_tasks[task_id].update({
            "status": JobStatus.FAILED,
            "exit_code": 3 if isinstance(e, InputError) else None,
            "message": f"Processing error: {str(e)}"
        })
