from math import comb
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array

MAX_ORBITALS = 62


class FockSetting(BaseModel):
    """N fermions in d orbitals"""
    N: int
    d: int

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_range(self):
        if self.N < 1 or self.N > self.d:
            raise ValueError(f"need 1 <= N <= d, got N={self.N}, d={self.d}")
        if self.d > MAX_ORBITALS:
            raise ValueError(f"at most {MAX_ORBITALS} orbitals are supported, got d={self.d}")
        return self

    @property
    def dimension(self) -> int:
        return comb(self.d, self.N)


class OccupationConfig(BaseModel):
    """Slater determinant as a bitmask; bit i set means orbital i is occupied"""
    bits: int

    model_config = ConfigDict(frozen=True)

    @property
    def orbitals(self) -> List[int]:
        return [i for i in range(self.bits.bit_length()) if (self.bits >> i) & 1]

    def label(self) -> str:
        """1-based orbital list as written in the literature, e.g. '1,2,3'"""
        return ",".join(str(i + 1) for i in self.orbitals)


class StateVector(BaseModel):
    setting: FockSetting
    amplitudes: np.ndarray

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_length(self):
        if self.amplitudes.shape != (self.setting.dimension,):
            raise ValueError(
                f"expected {self.setting.dimension} amplitudes for {self.setting}, "
                f"got shape {self.amplitudes.shape}"
            )
        return self

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        return StateVector(setting=self.setting, amplitudes=self.amplitudes / self.norm)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class OrbitalRotation(BaseModel):
    """d x d unitary; column k holds the new orbital k in the old orbital basis"""
    matrix: np.ndarray

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_square(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"orbital rotation must be square, got shape {self.matrix.shape}")
        return self

    @property
    def d(self) -> int:
        return self.matrix.shape[0]
