from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from marginalflow.models.arrays import ARRAY_MODEL_CONFIG, frozen_array
from marginalflow.models.reports import BoundCheck

# Configuration of each coefficient, 0-based natural-orbital indices
CONFIGS: Dict[str, tuple] = {
    "alpha": (0, 1, 2),
    "beta": (0, 1, 3),
    "gamma": (0, 2, 4),
    "delta": (1, 2, 5),
    "nu": (0, 3, 4),
    "mu": (1, 3, 5),
    "xi": (2, 4, 5),
    "zeta": (3, 4, 5),
}
NAMES: List[str] = list(CONFIGS)

EXPANSION_TOL = 1e-8


class BDCoefficients(BaseModel):
    """Amplitudes of the eight determinants allowed in the (3, 6) setting"""
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    nu: complex
    mu: complex
    xi: complex
    zeta: complex

    model_config = ConfigDict(frozen=True)

    def weights(self) -> Dict[str, float]:
        return {name: abs(getattr(self, name)) ** 2 for name in NAMES}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in NAMES], dtype=complex)

    @property
    def norm2(self) -> float:
        return float(sum(self.weights().values()))

    def off_diagonal(self) -> Dict[str, complex]:
        """<1|rho|6>, -<2|rho|5>, <3|rho|4> in terms of the coefficients"""
        a, b, g, d, n, m, x, z = self.as_array()
        c = np.conj
        return {
            "off16": complex(a * c(d) + b * c(m) + n * c(z) + g * c(x)),
            "off25": complex(a * c(g) + b * c(n) + d * c(x) + m * c(z)),
            "off34": complex(a * c(b) + g * c(n) + d * c(m) + x * c(z)),
        }


class BDExpansion(BDCoefficients):
    """Self-consistent expansion of a (3, 6) state in its natural orbitals"""
    natural_orbitals: np.ndarray
    lambdas: np.ndarray
    residual_weight: float = 0.0

    model_config = ARRAY_MODEL_CONFIG

    @field_validator("natural_orbitals", mode="before")
    @classmethod
    def _as_complex(cls, value):
        return frozen_array(value, complex)

    @field_validator("lambdas", mode="before")
    @classmethod
    def _as_real(cls, value):
        return frozen_array(value, float)

    @model_validator(mode="after")
    def _check_consistency(self):
        w = self.weights()
        if abs(self.norm2 - 1.0) > EXPANSION_TOL:
            raise ValueError(f"eight weights sum to {self.norm2:.12f}, not 1")
        expected = {
            3: w["beta"] + w["mu"] + w["nu"] + w["zeta"],
            4: w["gamma"] + w["nu"] + w["xi"] + w["zeta"],
            5: w["delta"] + w["mu"] + w["xi"] + w["zeta"],
        }
        for j, value in expected.items():
            if abs(self.lambdas[j] - value) > EXPANSION_TOL:
                raise ValueError(f"lambda_{j + 1}={self.lambdas[j]:.12f} disagrees with coefficient weights {value:.12f}")
        worst = max(abs(v) for v in self.off_diagonal().values())
        if worst > EXPANSION_TOL:
            raise ValueError(f"off-diagonal identities violated by {worst:.3e}")
        return self

    @property
    def D(self) -> float:
        """2 - (lambda_1 + lambda_2 + lambda_4)"""
        return float(2.0 - self.lambdas[0] - self.lambdas[1] - self.lambdas[3])

    @property
    def Q(self) -> float:
        """D with lambda_3 and lambda_4 swapped"""
        return float(2.0 - self.lambdas[0] - self.lambdas[1] - self.lambdas[2])


class UnstableBoundReport(BaseModel):
    gap34: float
    check: BoundCheck


class OffDiagonalReport(BaseModel):
    values: Dict[str, float]
    check: BoundCheck


class RelaxationReport(BaseModel):
    """D + Q written two ways, Q <= D, and the resulting lower bound on |alpha|^2 + |beta|^2"""
    D: float
    Q: float
    identity_error: float
    checks: List[BoundCheck]

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


class RotationReport(BaseModel):
    rotated: BDCoefficients
    rotation: np.ndarray
    beta_tilde: float
    closed_form_error: float
    residual_weight: float
    checks: List[BoundCheck]

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


class BDSampleRecord(BaseModel):
    """One row of a Borland-Dennis verification sweep"""
    seed_index: int
    D: Optional[float] = None
    xi_zeta: Optional[float] = None
    unstable_lhs: Optional[float] = None
    unstable_bound: Optional[float] = None
    residual_weight: Optional[float] = None
    residual_bound: Optional[float] = None
    status: str
    detail: Optional[str] = None
