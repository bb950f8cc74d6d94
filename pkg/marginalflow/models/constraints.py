from enum import Enum
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, StrictBool, StrictFloat, StrictInt, model_validator


class SpectrumDomain(str, Enum):
    """What the lambda vector of a constraint is made of"""
    ORDERED = "ordered"            # decreasing natural occupation numbers
    LOCAL_MINOR = "local_minor"    # smaller eigenvalue of each qubit marginal


class LinearConstraint(BaseModel):
    """D(lambda) = kappa0 + sum_j kappa_j lambda_j, >= 0 or == 0 when equality is set"""
    name: str
    kappa0: int
    kappa: Tuple[int, ...]
    equality: bool = False
    domain: SpectrumDomain = SpectrumDomain.ORDERED

    model_config = ConfigDict(frozen=True)

    @property
    def d(self) -> int:
        return len(self.kappa)

    @property
    def is_ordering(self) -> bool:
        """lambda_j - lambda_{j+1} >= 0 or lambda_d >= 0"""
        if self.equality or self.kappa0 != 0 or self.domain != SpectrumDomain.ORDERED:
            return False
        nonzero = [(j, k) for j, k in enumerate(self.kappa) if k != 0]
        if len(nonzero) == 1:
            return nonzero[0] == (self.d - 1, 1)
        if len(nonzero) == 2:
            (j, a), (l, b) = nonzero
            return l == j + 1 and a == 1 and b == -1
        return False

    @property
    def is_trivial(self) -> bool:
        return self.kappa0 == 0 and not any(self.kappa)


class ConstraintSet(BaseModel):
    """Constraints of one setting: fermions (N, d) or d qubits"""
    name: str
    N: Optional[int] = None
    d: int
    qubits: bool = False
    constraints: List[LinearConstraint]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_lengths(self):
        for c in self.constraints:
            if c.d != self.d:
                raise ValueError(f"constraint {c.name!r} has {c.d} coefficients, setting has d={self.d}")
        return self

    @property
    def equalities(self) -> List[LinearConstraint]:
        return [c for c in self.constraints if c.equality]

    @property
    def inequalities(self) -> List[LinearConstraint]:
        return [c for c in self.constraints if not c.equality]

    @property
    def nontrivial(self) -> List[LinearConstraint]:
        """Inequalities that are neither ordering conditions nor trivially zero"""
        return [c for c in self.inequalities if not c.is_ordering and not c.is_trivial]

    def get(self, name: str) -> LinearConstraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(f"no constraint named {name!r} in set {self.name!r}")


# CONSTRAINT FILE SCHEMA

Number = Union[StrictInt, StrictFloat]


class ConstraintFileEntry(BaseModel):
    kappa0: Number
    kappa: List[Number]
    equality: StrictBool = False
    name: Optional[str] = None

    model_config = ConfigDict(extra="forbid")


class ConstraintFile(BaseModel):
    """On-disk JSON layout; either N and d, or qubits"""
    name: str
    N: Optional[StrictInt] = None
    d: Optional[StrictInt] = None
    qubits: Optional[StrictInt] = None
    constraints: List[ConstraintFileEntry] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def _check_setting(self):
        if self.qubits is None and (self.N is None or self.d is None):
            raise ValueError("constraint file needs N and d, or qubits")
        if self.qubits is not None and (self.N is not None or self.d is not None):
            raise ValueError("constraint file cannot mix qubits with N and d")
        return self
