from pydantic import BaseModel, Field
from typing import Any, Dict, Optional
from datetime import datetime
from enum import Enum


class JobKind(str, Enum):
    SAMPLE = "sample"
    BD = "bd"
    VARIATIONAL = "variational"


class UploadResponse(BaseModel):
    filename: str
    file_id: str
    constraint_set: str
    constraints: int
    size: int
    upload_time: datetime
    message: str = "Constraint file uploaded successfully"


class JobRequest(BaseModel):
    """Body of POST /experiments/{kind}; keys follow the CLI flags"""
    setting: Optional[str] = None
    qubits: Optional[int] = None
    constraint: Optional[str] = None
    constraint_file_id: Optional[str] = None
    seed: int = 0
    samples: int = 20
    options: Dict[str, Any] = Field(default_factory=dict)


class JobStatus(str, Enum):
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


class JobResponse(BaseModel):
    task_id: str
    kind: JobKind
    status: JobStatus
    message: Optional[str] = None
    output_file: Optional[str] = None
    exit_code: Optional[int] = None
