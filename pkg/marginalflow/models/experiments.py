"""Run configurations shared by the CLI and the HTTP job service"""
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from marginalflow.config import settings
from marginalflow.models.flow import FlowParams


class ExperimentKind(str, Enum):
    SAMPLE = "sample"
    FLOW = "flow"
    BD = "bd"
    VARIATIONAL = "variational"
    CONSTRAINTS = "constraints"


class BDMode(str, Enum):
    HAAR = "haar"
    QUASIPINNED = "quasipinned"
    PINNED = "pinned"


class HamiltonianModel(str, Enum):
    RANDOM = "random"
    HUBBARD = "hubbard"


class RunConfig(BaseModel):
    """Fields every subcommand shares; exactly one of setting or qubits for state-based runs"""
    setting: Optional[Tuple[int, int]] = None
    qubits: Optional[int] = None
    constraint: Optional[str] = None
    seed: int = 0
    jobs: int = Field(default_factory=lambda: settings.jobs)
    tol: float = Field(default_factory=lambda: settings.tol)
    out: Optional[str] = None
    output_format: str = "csv"

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_common(self):
        if self.setting is not None and self.qubits is not None:
            raise ValueError("give either a fermionic setting or a qubit count, not both")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        return self

    @property
    def N(self) -> Optional[int]:
        return self.setting[0] if self.setting else None

    @property
    def d(self) -> Optional[int]:
        return self.setting[1] if self.setting else None


class SampleConfig(RunConfig):
    samples: int = 100
    max_d: float = 0.5
    flow: FlowParams = Field(default_factory=FlowParams)

    @model_validator(mode="after")
    def _check_samples(self):
        if self.samples < 0:
            raise ValueError(f"samples must be >= 0, got {self.samples}")
        if self.setting is None and self.qubits is None:
            raise ValueError("sampling needs --setting N,d or --qubits n")
        return self


class FlowConfig(RunConfig):
    amplitudes: Optional[List[List[float]]] = None
    pinned: Optional[Tuple[float, float, float]] = None
    derivative_step: float = 1e-4
    flow: FlowParams = Field(default_factory=FlowParams)

    @model_validator(mode="after")
    def _check_start(self):
        if self.setting is None and self.qubits is None:
            raise ValueError("a flow run needs --setting N,d or --qubits n")
        if self.amplitudes is not None and self.pinned is not None:
            raise ValueError("give either an amplitude file or pinned weights, not both")
        return self


class BDConfig(RunConfig):
    output_format: str = "json"
    samples: int = 100
    mode: BDMode = BDMode.HAAR
    max_d: float = 0.1
    unstable_gap: float = 0.05
    gap_tol: float = Field(default_factory=lambda: settings.gap_tol)


class VariationalConfig(RunConfig):
    output_format: str = "json"
    instances: int = 20
    coupling: float = 0.1
    model: HamiltonianModel = HamiltonianModel.RANDOM
    sites: int = 3
    hopping: float = 1.0
    restarts: int = Field(default_factory=lambda: settings.variational_restarts)
    max_iter: int = Field(default_factory=lambda: settings.variational_max_iter)


class ConstraintsConfig(RunConfig):
    output_format: str = "text"
    lambdas: List[float]


class ExperimentOutcome(BaseModel):
    """What a run produced; exit_code follows the 0/1/2/3 contract"""
    kind: ExperimentKind
    exit_code: int
    summary: Dict[str, Any] = Field(default_factory=dict)
    output_files: List[str] = Field(default_factory=list)
    first_violation: Optional[Dict[str, Any]] = None
