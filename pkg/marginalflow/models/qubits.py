import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array

MAX_QUBITS = 14


class QubitState(BaseModel):
    """n-qubit pure state; amplitude index is big-endian in the site order"""
    n: int
    amplitudes: np.ndarray

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_shape(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"need 1 <= n <= {MAX_QUBITS} qubits, got {self.n}")
        if self.amplitudes.shape != (2 ** self.n,):
            raise ValueError(f"expected {2 ** self.n} amplitudes for {self.n} qubits, got {self.amplitudes.shape}")
        return self

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "QubitState":
        return QubitState(n=self.n, amplitudes=self.amplitudes / self.norm)


class LocalSpectra(BaseModel):
    """Per-site eigenvalues (major >= minor) and 2x2 eigenbases with columns [major, minor]"""
    major: np.ndarray
    minor: np.ndarray
    bases: np.ndarray

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("major", "minor", mode="before")
    @classmethod
    def _as_real(cls, value):
        return frozen_array(value, float)

    @field_validator("bases", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_normalized(self):
        if np.abs(self.major + self.minor - 1.0).max() > 1e-10:
            raise ValueError("local eigenvalues must sum to 1 per site")
        return self

    @property
    def gaps(self) -> np.ndarray:
        return self.major - self.minor

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())
