import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
EIGENVALUE_TOL = 1e-9


class OneRDM(BaseModel):
    """One-particle reduced density matrix rho_ij = <a†_j a_i>"""
    matrix: np.ndarray
    N: int

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @model_validator(mode="after")
    def _check_physical(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"1-RDM must be square, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("1-RDM is not Hermitian")
        trace = np.trace(m).real
        if abs(trace - self.N) > TRACE_TOL:
            raise ValueError(f"1-RDM trace {trace:.12f} differs from N={self.N}")
        eigenvalues = np.linalg.eigvalsh(m)
        if eigenvalues.min() < -EIGENVALUE_TOL or eigenvalues.max() > 1 + EIGENVALUE_TOL:
            raise ValueError(
                f"1-RDM eigenvalues outside [0, 1]: min={eigenvalues.min():.3e}, max={eigenvalues.max():.12f}"
            )
        return self

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


class NaturalSpectrum(BaseModel):
    """Decreasing occupation numbers with natural orbitals as matching columns"""
    lambdas: np.ndarray
    orbitals: np.ndarray
    gap: float
    degenerate: bool

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("lambdas", mode="before")
    @classmethod
    def _as_real(cls, value):
        return frozen_array(value, float)

    @field_validator("orbitals", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @property
    def d(self) -> int:
        return len(self.lambdas)
