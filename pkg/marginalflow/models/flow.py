from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from marginalflow.config import settings
from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array
from marginalflow.models.constraints import LinearConstraint
from marginalflow.models.reports import BoundCheck


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    DEGENERATE = "degenerate"
    T_MAX = "t_max"


class SystemKind(str, Enum):
    FERMION = "fermion"
    QUBIT = "qubit"


class FlowParams(BaseModel):
    dt_initial: float = Field(default_factory=lambda: settings.dt_initial)
    dt_min: float = Field(default_factory=lambda: settings.dt_min)
    dt_max: float = Field(default_factory=lambda: settings.dt_max)
    t_max: float = Field(default_factory=lambda: settings.t_max)
    stop_D: float = Field(default_factory=lambda: settings.stop_d)
    gap_tol: float = Field(default_factory=lambda: settings.gap_tol)
    snapshot_stride: int = Field(default_factory=lambda: settings.snapshot_stride)
    # orbital-overlap ordering check kicks in below this eigenvalue gap
    crossing_window: float = 1e-2

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_steps(self):
        if not 0 < self.dt_min <= self.dt_initial <= self.dt_max:
            raise ValueError(
                f"need 0 < dt_min <= dt_initial <= dt_max, got {self.dt_min}, {self.dt_initial}, {self.dt_max}"
            )
        if self.stop_D < 0:
            raise ValueError(f"stop_D must be >= 0, got {self.stop_D}")
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        return self


class FlowTrace(BaseModel):
    """Recorded trajectory of one flow run"""
    kind: SystemKind
    constraint: LinearConstraint
    times: np.ndarray
    D_values: np.ndarray
    variances: np.ndarray
    distances: np.ndarray
    min_gaps: np.ndarray
    snapshot_times: np.ndarray
    snapshot_D: np.ndarray
    snapshots: np.ndarray
    terminal_state: np.ndarray
    termination_reason: TerminationReason
    rejected_steps: int = 0
    message: Optional[str] = None

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("times", "D_values", "variances", "distances", "min_gaps",
                     "snapshot_times", "snapshot_D", mode="before")
    @classmethod
    def _as_real(cls, value):
        return frozen_array(value, float)

    @field_validator("snapshots", "terminal_state", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_times(self):
        if len(self.times) == 0:
            raise ValueError("a trace records at least the initial time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")
        return self

    @property
    def D0(self) -> float:
        return float(self.D_values[0])

    @property
    def converged(self) -> bool:
        return self.termination_reason == TerminationReason.CONVERGED

    @property
    def initial_state(self) -> np.ndarray:
        return self.snapshots[0]

    def __len__(self) -> int:
        return len(self.times)


class DerivativeReport(BaseModel):
    finite_difference: float
    minus_two_variance: float
    variance: float
    step: float
    relative_error: float
    absolute_error: float
    tolerance: float
    holds: bool


class PathBoundReport(BaseModel):
    pairs_checked: int
    worst: Optional[BoundCheck] = None
    worst_pair: Optional[tuple] = None
    holds: bool


class DecayReport(BaseModel):
    """D(t) <= D(0) exp(-t); only asserted when D(0) <= 1/2"""
    applicable: bool
    worst: BoundCheck
    monotone: BoundCheck

    @property
    def holds(self) -> bool:
        return self.monotone.holds and (self.worst.holds or not self.applicable)
