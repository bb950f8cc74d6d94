"""Exact diagonalization, Hartree-Fock and facet-restricted variational ground states.

The facet ansatz minimizes <Phi|H|Phi> over states Phi in the zero eigenspace of D-hat built
from a reference basis B. Hartree-Fock is the facet whose zero eigenspace is the single
determinant |1,...,N>. The outer search descends on the unitary group, B <- B expm(tX), with
X anti-Hermitian and an Armijo backtracking line search.
"""
import logging
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from marginalflow.config import settings
from marginalflow.core.constraints import collective_pauli, evaluate, hf_distance
from marginalflow.core.flow import integrate
from marginalflow.core.fock import FockBasis, fock_basis, random_unitary
from marginalflow.core.hamiltonians import hamiltonian_matrix
from marginalflow.core.marginal import require_normalized, spectrum_of, state_spectrum
from marginalflow.errors import (
    BasisTooLargeError, DegenerateGroundStateError, DegenerateSpectrumError, InvalidSettingError,
    LengthMismatchError, NotHermitianError,
)
from marginalflow.models.constraints import LinearConstraint
from marginalflow.models.fock import StateVector
from marginalflow.models.reports import BoundCheck
from marginalflow.models.variational import (
    EnergyEstimateReport, HartreeFockResult, HFLemmaReport, Hamiltonian, SandwichReport, SpectralData,
    VariationalResult,
)

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-8
ESTIMATE_TOL = 1e-7
LEMMA_TOL = 1e-9
ARMIJO = 1e-4
MAX_BACKTRACK = 40


# EXACT DIAGONALIZATION

def dense_matrix(H: Hamiltonian) -> np.ndarray:
    if H.setting.dimension > settings.max_basis_dim:
        raise BasisTooLargeError(f"N-particle dimension {H.setting.dimension} exceeds {settings.max_basis_dim}")
    M = hamiltonian_matrix(H).toarray()
    deviation = np.abs(M - M.conj().T).max()
    if deviation > 1e-9:
        raise NotHermitianError(f"lifted Hamiltonian is not Hermitian (deviation {deviation:.2e})")
    return (M + M.conj().T) / 2


def diagonalize_matrix(M: np.ndarray, H: Hamiltonian) -> SpectralData:
    energies, vectors = np.linalg.eigh(M)
    E0 = float(energies[0])
    ground = energies <= E0 + DEGENERACY_TOL
    excited = energies[~ground]
    gap = float(energies[1] - E0) if len(energies) > 1 else np.inf
    return SpectralData(
        E0=E0,
        E_ex_minus=float(excited[0]) if len(excited) else E0,
        E_ex_plus=float(energies[-1]),
        ground_state=StateVector(setting=H.setting, amplitudes=vectors[:, 0]),
        gap_to_second=gap,
        degenerate=bool(gap < DEGENERACY_TOL),
        energies=energies,
        ground_space=vectors[:, ground],
    )


def exact_diagonalize(H: Hamiltonian) -> SpectralData:
    data = diagonalize_matrix(dense_matrix(H), H)
    if data.degenerate:
        logger.warning(f"Ground state of {H.label or 'Hamiltonian'} is degenerate (gap {data.gap_to_second:.2e})")
    return data


def _require_unique(spectral: SpectralData):
    if spectral.degenerate:
        raise DegenerateGroundStateError(
            f"ground state is degenerate (gap to second level {spectral.gap_to_second:.2e})"
        )


# FACET SOLVER

class FacetSolver:
    """Lowest energy on the zero eigenspace of D-hat as a function of the reference basis"""

    def __init__(self, H: Hamiltonian, constraint: LinearConstraint, M: Optional[np.ndarray] = None):
        if constraint.d != H.setting.d:
            raise LengthMismatchError(f"constraint {constraint.name!r} has {constraint.d} coefficients, d={H.setting.d}")
        self.H = H
        self.constraint = constraint
        self.basis: FockBasis = fock_basis(H.setting)
        self.M = dense_matrix(H) if M is None else M
        diagonal = constraint.kappa0 + self.basis.occupations @ np.asarray(constraint.kappa, dtype=np.int64)
        self.zero = np.flatnonzero(diagonal == 0)
        if len(self.zero) == 0:
            raise InvalidSettingError(f"constraint {constraint.name!r} has an empty zero eigenspace")

    def solve(self, B: np.ndarray) -> Tuple[float, np.ndarray]:
        """(energy, ground vector over the zero configurations) for basis B"""
        L = self.basis.lift_columns(B, self.zero)
        projected = L.conj().T @ self.M @ L
        energies, vectors = np.linalg.eigh((projected + projected.conj().T) / 2)
        return float(energies[0]), vectors[:, 0]

    def state(self, B: np.ndarray, vector: np.ndarray) -> np.ndarray:
        return self.basis.lift_columns(B, self.zero) @ vector

    def gradient(self, B: np.ndarray, vector: np.ndarray) -> np.ndarray:
        """R - R^dag with R_ij = <chi|a†_i a_j|phi>, chi = H phi in reference coordinates.

        Along B expm(tX) the energy changes at rate 2 Re sum_ij X_ij R_ij.
        """
        phi = np.zeros(self.basis.dim, dtype=complex)
        phi[self.zero] = vector
        chi = self.basis.to_reference(self.M @ self.basis.from_reference(phi, B), B)
        R = self.basis.transition_rdm(chi, phi)
        return R - R.conj().T

    def minimize(self, B0: np.ndarray, max_iter: int, gtol: float) -> Tuple[float, np.ndarray, np.ndarray]:
        B = np.asarray(B0, dtype=complex)
        energy, vector = self.solve(B)
        if len(self.zero) == self.basis.dim:
            return energy, B, vector
        step = 1.0
        for iteration in range(max_iter):
            G = self.gradient(B, vector)
            X = -np.conj(G)
            slope = -float(np.real(np.sum(np.conj(X) * X)))
            if np.linalg.norm(G) < gtol:
                break
            for _ in range(MAX_BACKTRACK):
                trial = B @ expm(step * X)
                trial_energy, trial_vector = self.solve(trial)
                if trial_energy <= energy + ARMIJO * step * slope:
                    break
                step /= 2
            else:
                logger.debug(f"Line search stalled at iteration {iteration}, E={energy:.12f}")
                break
            u, _, vh = np.linalg.svd(trial)
            B, energy, vector = u @ vh, trial_energy, trial_vector
            step = min(step * 2, 1.0)
        return energy, B, vector


def _starting_bases(H: Hamiltonian, restarts: int, seed: Optional[int],
                    extra: Iterable[np.ndarray]) -> List[np.ndarray]:
    _, h_orbitals = np.linalg.eigh(np.asarray(H.one_body))
    bases = [np.asarray(B, dtype=complex) for B in extra] + [h_orbitals]
    rng = np.random.default_rng(seed)
    bases.extend(random_unitary(H.setting.d, rng) for _ in range(restarts))
    return bases


def _optimize(solver: FacetSolver, bases: List[np.ndarray], max_iter: Optional[int],
              gtol: Optional[float]) -> Tuple[float, np.ndarray, np.ndarray]:
    max_iter = settings.variational_max_iter if max_iter is None else max_iter
    gtol = settings.variational_gtol if gtol is None else gtol
    best = None
    for k, B0 in enumerate(bases):
        energy, B, vector = solver.minimize(B0, max_iter, gtol)
        logger.debug(f"Start {k}: E={energy:.12f}")
        if best is None or energy < best[0]:
            best = (energy, B, vector)
    return best


def hartree_fock(H: Hamiltonian, restarts: Optional[int] = None, seed: Optional[int] = None,
                 initial_bases: Iterable[np.ndarray] = (), max_iter: Optional[int] = None,
                 gtol: Optional[float] = None) -> HartreeFockResult:
    """Best single determinant over orbital rotations, multi-start"""
    restarts = settings.variational_restarts if restarts is None else restarts
    N, d = H.setting.N, H.setting.d
    solver = FacetSolver(H, collective_pauli(N, d - N, N, d))
    bases = _starting_bases(H, restarts, seed, initial_bases)
    energy, B, vector = _optimize(solver, bases, max_iter, gtol)
    state = StateVector(setting=H.setting, amplitudes=solver.state(B, vector))
    logger.info(f"Hartree-Fock energy {energy:.10f} from {len(bases)} starts")
    return HartreeFockResult(energy=energy, orbitals=B, state=state, restarts_used=len(bases))


def facet_variational(H: Hamiltonian, constraint: LinearConstraint, restarts: Optional[int] = None,
                      seed: Optional[int] = None, initial_bases: Iterable[np.ndarray] = (),
                      spectral: Optional[SpectralData] = None, max_iter: Optional[int] = None,
                      gtol: Optional[float] = None) -> VariationalResult:
    """Minimum energy over states pinned to the facet D = 0, reference basis optimized"""
    restarts = settings.variational_restarts if restarts is None else restarts
    M = dense_matrix(H)
    spectral = diagonalize_matrix(M, H) if spectral is None else spectral
    _require_unique(spectral)
    solver = FacetSolver(H, constraint, M)
    natural = state_spectrum(spectral.ground_state, gap_tol=0.0).orbitals
    bases = _starting_bases(H, restarts, seed, list(initial_bases) + [natural])
    energy, B, vector = _optimize(solver, bases, max_iter, gtol)
    D0 = evaluate(constraint, state_spectrum(spectral.ground_state, gap_tol=0.0).lambdas)
    logger.info(f"Facet {constraint.name} energy {energy:.10f} (E0={spectral.E0:.10f}) from {len(bases)} starts")
    return VariationalResult(
        energy=energy, reference_basis=B, state=StateVector(setting=H.setting, amplitudes=solver.state(B, vector)),
        constraint_name=constraint.name, zero_space_dimension=len(solver.zero), restarts_used=len(bases),
        D_lambda0=D0,
    )


# BOUND CHECKS

def check_energy_sandwich(H: Hamiltonian, state: StateVector, spectral: Optional[SpectralData] = None,
                          tol: float = LEMMA_TOL) -> SandwichReport:
    """(E - E0)/(E+ - E0) <= 1 - ||pi_0 psi||^2 <= (E - E0)/(E- - E0)"""
    require_normalized(state.amplitudes)
    M = dense_matrix(H)
    spectral = diagonalize_matrix(M, H) if spectral is None else spectral
    psi = np.asarray(state.amplitudes)
    energy = float(np.vdot(psi, M @ psi).real)
    outside = 1.0 - float(np.sum(np.abs(spectral.ground_space.conj().T @ psi) ** 2))
    excess = energy - spectral.E0
    spread = spectral.E_ex_plus - spectral.E0
    gap = spectral.E_ex_minus - spectral.E0
    lower = excess / spread if spread > 0 else 0.0
    upper = excess / gap if gap > 0 else np.inf
    return SandwichReport(
        energy=energy, weight_outside_ground_space=outside,
        lower=BoundCheck(name="sandwich_lower", lhs=lower, rhs=outside, tol=tol),
        upper=BoundCheck(name="sandwich_upper", lhs=outside, rhs=upper, tol=tol),
    )


def check_hf_lemma(state: StateVector, reference: np.ndarray, tol: float = LEMMA_TOL) -> HFLemmaReport:
    """S(lambda)/N <= 1 - |<1',...,N'|psi>|^2 and S(lambda) <= S(lambda')"""
    require_normalized(state.amplitudes)
    N = state.setting.N
    basis = fock_basis(state.setting)
    reference = np.asarray(reference, dtype=complex)
    psi = np.asarray(state.amplitudes)
    # mask 0b1...1 is the smallest, so index 0
    overlap = float(abs(basis.to_reference(psi, reference)[0]) ** 2)
    rho = basis.one_rdm(psi)
    lambdas, _, _ = spectrum_of((rho + rho.conj().T) / 2)
    occupations = np.sort(np.real(np.einsum("ij,ik,kj->j", reference.conj(), rho, reference)))[::-1]
    S = hf_distance(lambdas, N)
    S_ref = hf_distance(occupations, N)
    return HFLemmaReport(
        S_lambda=S, S_reference=S_ref, overlap=overlap,
        distance=BoundCheck(name="hf_distance", lhs=S / N, rhs=1.0 - overlap, tol=tol),
        majorization=BoundCheck(name="majorization", lhs=S, rhs=S_ref, tol=tol),
    )


def check_hf_correlation(H: Hamiltonian, hf: Optional[HartreeFockResult] = None,
                         spectral: Optional[SpectralData] = None, restarts: Optional[int] = None,
                         seed: Optional[int] = None, tol: float = ESTIMATE_TOL) -> BoundCheck:
    """E_HF - E0 >= (E- - E0) S(lambda_0) / N"""
    spectral = exact_diagonalize(H) if spectral is None else spectral
    _require_unique(spectral)
    hf = hartree_fock(H, restarts, seed) if hf is None else hf
    N = H.setting.N
    S0 = hf_distance(state_spectrum(spectral.ground_state, gap_tol=0.0).lambdas, N)
    return BoundCheck(
        name="hf_correlation", lhs=(spectral.E_ex_minus - spectral.E0) * S0 / N, rhs=hf.energy - spectral.E0, tol=tol,
    )


def flow_limit_orbitals(state: StateVector, constraint: LinearConstraint) -> Optional[np.ndarray]:
    """Natural orbitals of the flow limit started at state, when the flow converges"""
    try:
        trace = integrate(state, constraint)
    except DegenerateSpectrumError:
        return None
    if not trace.converged:
        logger.debug(f"Flow from the ground state ended with {trace.termination_reason.value}")
        return None
    rho = fock_basis(state.setting).one_rdm(trace.terminal_state)
    return spectrum_of((rho + rho.conj().T) / 2)[1]


def check_energy_estimates(H: Hamiltonian, constraint: LinearConstraint, restarts: Optional[int] = None,
                           seed: Optional[int] = None, tol: float = ESTIMATE_TOL, max_iter: Optional[int] = None,
                           gtol: Optional[float] = None) -> EnergyEstimateReport:
    """Delta E_D <= C D(lambda_0) and Delta E_D / E_corr <= K D(lambda_0) / S(lambda_0)"""
    M = dense_matrix(H)
    spectral = diagonalize_matrix(M, H)
    _require_unique(spectral)
    N = H.setting.N
    lambdas0 = state_spectrum(spectral.ground_state, gap_tol=0.0).lambdas
    D0 = evaluate(constraint, lambdas0)
    S0 = hf_distance(lambdas0, N)

    hf = hartree_fock(H, restarts, seed, max_iter=max_iter, gtol=gtol)
    seeds = [hf.orbitals]
    limit = flow_limit_orbitals(spectral.ground_state, constraint)
    if limit is not None:
        seeds.append(limit)
    result = facet_variational(H, constraint, restarts, seed, seeds, spectral, max_iter, gtol)

    E0, E_plus, E_minus = spectral.E0, spectral.E_ex_plus, spectral.E_ex_minus
    delta = result.energy - E0
    C = 2 * (E_plus - E0)
    K = 2 * N * (E_plus - E0) / (E_minus - E0)
    checks = [BoundCheck(name="energy_error", lhs=delta, rhs=C * D0, tol=tol)]
    E_corr = hf.energy - E0
    ratio_defined = S0 > 1e-6 and E_corr > 1e-10
    slack_ratio = None
    if ratio_defined:
        ratio_check = BoundCheck(name="correlation_ratio", lhs=delta / E_corr, rhs=K * D0 / S0, tol=tol)
        checks.append(ratio_check)
        slack_ratio = ratio_check.slack
    else:
        logger.info(f"Correlation ratio undefined (S={S0:.2e}, E_corr={E_corr:.2e})")
    return EnergyEstimateReport(
        E0=E0, E_hf=hf.energy, E_D=result.energy, D_lambda0=D0, S_lambda0=S0, C=C, K=K,
        slack_energy=checks[0].slack, slack_ratio=slack_ratio,
        restarts_used=result.restarts_used + hf.restarts_used,
        constraint=constraint.name, ratio_defined=ratio_defined, checks=checks,
    )
