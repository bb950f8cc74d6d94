from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array
from marginalflow.models.fock import FockSetting, StateVector
from marginalflow.models.reports import BoundCheck

COEFFICIENT_TOL = 1e-10


class Hamiltonian(BaseModel):
    """sum_ij h_ij a†_i a_j + sum_ijkl V_ijkl a†_i a†_j a_l a_k"""
    setting: FockSetting
    one_body: np.ndarray
    two_body: np.ndarray
    label: str = ""

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("one_body", "two_body", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_coefficients(self):
        d = self.setting.d
        h, V = self.one_body, self.two_body
        if h.shape != (d, d):
            raise ValueError(f"one-body part must be {d}x{d}, got {h.shape}")
        if V.shape != (d, d, d, d):
            raise ValueError(f"two-body part must have shape {(d,) * 4}, got {V.shape}")
        if np.abs(h - h.conj().T).max() > COEFFICIENT_TOL:
            raise ValueError("one-body part is not Hermitian")
        if np.abs(V + V.transpose(1, 0, 2, 3)).max() > COEFFICIENT_TOL:
            raise ValueError("two-body part is not antisymmetric in its creation indices")
        if np.abs(V + V.transpose(0, 1, 3, 2)).max() > COEFFICIENT_TOL:
            raise ValueError("two-body part is not antisymmetric in its annihilation indices")
        if np.abs(V - V.transpose(2, 3, 0, 1).conj()).max() > COEFFICIENT_TOL:
            raise ValueError("two-body part is not Hermitian")
        return self


class SpectralData(BaseModel):
    E0: float
    E_ex_minus: float
    E_ex_plus: float
    ground_state: StateVector
    gap_to_second: float
    degenerate: bool
    energies: np.ndarray
    ground_space: np.ndarray

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("energies", mode="before")
    @classmethod
    def _as_real(cls, value):
        return frozen_array(value, float)

    @field_validator("ground_space", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)


class HartreeFockResult(BaseModel):
    energy: float
    orbitals: np.ndarray
    state: StateVector
    restarts_used: int

    model_config = ARRAY_MODEL_CONFIG


class VariationalResult(BaseModel):
    """Best state found on the zero eigenspace of D-hat over reference bases"""
    energy: float
    reference_basis: np.ndarray
    state: StateVector
    constraint_name: str
    zero_space_dimension: int
    restarts_used: int
    D_lambda0: Optional[float] = None

    model_config = ARRAY_MODEL_CONFIG


class SandwichReport(BaseModel):
    energy: float
    weight_outside_ground_space: float
    lower: BoundCheck
    upper: BoundCheck

    @property
    def holds(self) -> bool:
        return self.lower.holds and self.upper.holds


class HFLemmaReport(BaseModel):
    S_lambda: float
    S_reference: float
    overlap: float
    distance: BoundCheck
    majorization: BoundCheck

    @property
    def holds(self) -> bool:
        return self.distance.holds and self.majorization.holds


class EnergyEstimateReport(BaseModel):
    """Exported with the field names listed in the aliases"""
    E0: float
    E_hf: float
    E_D: float
    D_lambda0: float
    S_lambda0: float
    C: float
    K: float
    slack_energy: float = Field(serialization_alias="slack_eq15")
    slack_ratio: Optional[float] = Field(default=None, serialization_alias="slack_eq16")
    restarts_used: int
    constraint: str = Field(exclude=True)
    ratio_defined: bool = Field(exclude=True)
    checks: List[BoundCheck] = Field(default_factory=list, exclude=True)

    model_config = ConfigDict(populate_by_name=True)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    def export(self) -> dict:
        return self.model_dump(by_alias=True)
