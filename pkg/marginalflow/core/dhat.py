"""D-hat operators: kappa0 + sum_j kappa_j n_j, diagonal in a reference product basis.

Works over any space exposing the product-basis contract used here (FockBasis for fermions,
QubitRegister for qubits): dim, occupations, to_reference, from_reference,
apply_occupation_operator, lift_matrix, config and config_label.
"""
import logging
from typing import Protocol

import numpy as np

from marginalflow.core.fock import check_unitary, fock_basis
from marginalflow.core.marginal import require_normalized
from marginalflow.errors import InvalidSettingError, LengthMismatchError
from marginalflow.models.constraints import LinearConstraint, SpectrumDomain
from marginalflow.models.dhat import SelectionRule, VarianceReport
from marginalflow.models.fock import FockSetting, OccupationConfig
from marginalflow.models.reports import BoundCheck

logger = logging.getLogger(__name__)

VARIANCE_TOL = 1e-9


class ProductBasisSpace(Protocol):
    dim: int
    occupations: np.ndarray

    def to_reference(self, psi: np.ndarray, basis: np.ndarray) -> np.ndarray: ...

    def from_reference(self, coefficients: np.ndarray, basis: np.ndarray) -> np.ndarray: ...

    def apply_occupation_operator(self, psi: np.ndarray, basis: np.ndarray,
                                  kappa0: float, kappa: np.ndarray) -> np.ndarray: ...

    def lift_matrix(self, basis: np.ndarray) -> np.ndarray: ...

    def config(self, k: int) -> OccupationConfig: ...

    def config_label(self, k: int) -> str: ...


class DhatOperator:
    """Integer diagonal over the configurations built from reference_basis"""

    def __init__(self, space: ProductBasisSpace, constraint: LinearConstraint, reference_basis: np.ndarray):
        if constraint.d != space.occupations.shape[1]:
            raise LengthMismatchError(
                f"constraint {constraint.name!r} has {constraint.d} coefficients, "
                f"space has {space.occupations.shape[1]} modes"
            )
        self.space = space
        self.constraint = constraint
        self.reference_basis = np.asarray(reference_basis, dtype=complex)
        self.kappa = np.asarray(constraint.kappa, dtype=np.int64)
        self.diagonal = constraint.kappa0 + space.occupations @ self.kappa
        self.diagonal.setflags(write=False)

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        return self.space.to_reference(psi, self.reference_basis)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """D-hat psi without leaving the original basis"""
        return self.space.apply_occupation_operator(
            psi, self.reference_basis, self.constraint.kappa0, self.kappa
        )

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.vdot(psi, self.apply(psi)).real)

    def distribution(self, psi: np.ndarray) -> np.ndarray:
        return np.abs(self.coefficients(psi)) ** 2

    def variance(self, psi: np.ndarray) -> float:
        p = self.distribution(psi)
        mean = p @ self.diagonal
        return float(max(0.0, p @ self.diagonal.astype(float) ** 2 - mean ** 2))

    def matrix(self) -> np.ndarray:
        """Dense D-hat; tests only"""
        lift = self.space.lift_matrix(self.reference_basis)
        return (lift * self.diagonal[None, :]) @ lift.conj().T


class ZeroProjector:
    """Projector onto span of the configurations with D-hat eigenvalue 0"""

    def __init__(self, op: DhatOperator):
        self.op = op
        self.mask = op.diagonal == 0
        self.rank = int(self.mask.sum())

    def apply(self, psi: np.ndarray) -> np.ndarray:
        c = self.op.coefficients(psi)
        return self.op.space.from_reference(np.where(self.mask, c, 0.0), self.op.reference_basis)

    def weight(self, psi: np.ndarray) -> float:
        """||P psi||^2"""
        return float(np.sum(self.op.distribution(psi)[self.mask]))

    def matrix(self) -> np.ndarray:
        lift = self.op.space.lift_matrix(self.op.reference_basis)[:, self.mask]
        return lift @ lift.conj().T


def build_dhat(constraint: LinearConstraint, reference_basis: np.ndarray, setting: FockSetting) -> DhatOperator:
    if constraint.domain != SpectrumDomain.ORDERED:
        raise InvalidSettingError(f"constraint {constraint.name!r} is not a fermionic occupation constraint")
    if constraint.d != setting.d:
        raise LengthMismatchError(f"constraint {constraint.name!r} has {constraint.d} coefficients, d={setting.d}")
    basis = check_unitary(reference_basis)
    if basis.shape != (setting.d, setting.d):
        raise LengthMismatchError(f"reference basis must be {setting.d}x{setting.d}, got {basis.shape}")
    return DhatOperator(fock_basis(setting), constraint, basis)


def zero_projector(op: DhatOperator) -> ZeroProjector:
    return ZeroProjector(op)


def selection_rule(op: DhatOperator) -> SelectionRule:
    indices = np.flatnonzero(op.diagonal == 0)
    return SelectionRule(
        zero_configs=[op.space.config(int(k)) for k in indices],
        labels=[op.space.config_label(int(k)) for k in indices],
    )


def variance(state, op: DhatOperator) -> float:
    """Var of D-hat in a normalized StateVector or QubitState"""
    require_normalized(state.amplitudes)
    return op.variance(state.amplitudes)


def variance_lower_bound(mu: float, a: float = 0.0, b: float = 1.0) -> float:
    """(mu - a)(b - mu): least variance of a variable with mean mu and no weight inside (a, b)"""
    return (mu - a) * (b - mu)


def check_variance_bound(state, op: DhatOperator, tol: float = VARIANCE_TOL) -> VarianceReport:
    require_normalized(state.amplitudes)
    mean = op.expectation(state.amplitudes)
    var = op.variance(state.amplitudes)
    check = BoundCheck(name="variance_lower_bound", lhs=variance_lower_bound(mean), rhs=var, tol=tol)
    return VarianceReport(mean=mean, variance=var, lower_bound=check)
