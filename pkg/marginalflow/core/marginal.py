import logging
from typing import Optional

import numpy as np

from marginalflow.config import settings
from marginalflow.core.fock import fock_basis
from marginalflow.errors import NotNormalizedError
from marginalflow.models.fock import StateVector
from marginalflow.models.marginal import NaturalSpectrum, OneRDM

logger = logging.getLogger(__name__)

NORM_TOL = 1e-8


def require_normalized(amplitudes: np.ndarray, tol: float = NORM_TOL):
    norm = np.linalg.norm(amplitudes)
    if abs(norm - 1.0) > tol:
        raise NotNormalizedError(f"state norm {norm:.12f} deviates from 1 by more than {tol:g}")


def one_rdm(state: StateVector) -> OneRDM:
    require_normalized(state.amplitudes)
    rho = fock_basis(state.setting).one_rdm(state.amplitudes)
    # exact Hermitian part; asymmetry is rounding only
    return OneRDM(matrix=(rho + rho.conj().T) / 2, N=state.setting.N)


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive"""
    rows = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[rows, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[None, :]


def spectrum_of(matrix: np.ndarray):
    """(lambdas, orbitals, gap) for a Hermitian matrix, eigenvalues decreasing"""
    eigenvalues, vectors = np.linalg.eigh(matrix)
    dominant = np.argmax(np.abs(vectors), axis=0)
    # ties: larger diagonal entry of the dominant slot first, then lower slot index
    diagonal = np.real(np.diag(matrix))[dominant]
    order = np.lexsort((dominant, -diagonal, -np.round(eigenvalues, 12)))
    lambdas = eigenvalues[order]
    orbitals = fix_phases(vectors[:, order])
    gap = max(0.0, float(np.min(lambdas[:-1] - lambdas[1:]))) if len(lambdas) > 1 else np.inf
    return lambdas, orbitals, gap


def natural_spectrum(rdm: OneRDM, gap_tol: Optional[float] = None) -> NaturalSpectrum:
    gap_tol = settings.gap_tol if gap_tol is None else gap_tol
    lambdas, orbitals, gap = spectrum_of(rdm.matrix)
    degenerate = gap < gap_tol
    if degenerate:
        logger.debug(f"Natural spectrum is degenerate (gap={gap:.3e} < {gap_tol:g})")
    return NaturalSpectrum(lambdas=lambdas, orbitals=orbitals, gap=gap, degenerate=degenerate)


def state_spectrum(state: StateVector, gap_tol: Optional[float] = None) -> NaturalSpectrum:
    return natural_spectrum(one_rdm(state), gap_tol)
