"""Distinguishable qubits: single-site marginals, Higuchi constraints and their D-hat operators.

Local basis labels: 1 is the eigenvector of the larger local eigenvalue, 2 of the smaller one.
A product configuration k carries the label of site s in bit (n - 1 - s) of k.
"""
import logging
from functools import lru_cache, reduce
from typing import List, Optional, Tuple

import numpy as np

from marginalflow.config import settings
from marginalflow.core.constraints import evaluate, higuchi_set
from marginalflow.core.dhat import DhatOperator, selection_rule
from marginalflow.core.fock import random_unitary
from marginalflow.core.marginal import require_normalized, spectrum_of
from marginalflow.errors import DegenerateSpectrumError, InvalidSettingError
from marginalflow.models.dhat import SelectionRule
from marginalflow.models.fock import OccupationConfig
from marginalflow.models.qubits import LocalSpectra, QubitState

logger = logging.getLogger(__name__)


class QubitRegister:
    """Product basis of n qubits, big-endian amplitude index"""

    def __init__(self, n: int):
        if n < 1:
            raise InvalidSettingError(f"need at least one qubit, got {n}")
        self.n = n
        self.dim = 2 ** n
        shifts = n - 1 - np.arange(n)
        self.occupations = ((np.arange(self.dim)[:, None] >> shifts[None, :]) & 1).astype(np.int64)

    def apply_site(self, psi: np.ndarray, site: int, M: np.ndarray) -> np.ndarray:
        t = psi.reshape((2,) * self.n)
        out = np.tensordot(M, t, axes=([1], [site]))
        return np.moveaxis(out, 0, site).reshape(self.dim)

    def to_reference(self, psi: np.ndarray, bases: np.ndarray) -> np.ndarray:
        for s in range(self.n):
            psi = self.apply_site(psi, s, bases[s].conj().T)
        return psi

    def from_reference(self, coefficients: np.ndarray, bases: np.ndarray) -> np.ndarray:
        for s in range(self.n):
            coefficients = self.apply_site(coefficients, s, bases[s])
        return coefficients

    def apply_occupation_operator(self, psi: np.ndarray, bases: np.ndarray,
                                  kappa0: float, kappa: np.ndarray) -> np.ndarray:
        """(kappa0 + sum_s kappa_s |2><2|_s) psi with |2>_s = bases[s][:, 1]"""
        out = kappa0 * psi
        for s, k in enumerate(kappa):
            if k == 0:
                continue
            v = bases[s][:, 1]
            out = out + k * self.apply_site(psi, s, np.outer(v, v.conj()))
        return out

    def lift_matrix(self, bases: np.ndarray) -> np.ndarray:
        return reduce(np.kron, list(bases))

    def config(self, k: int) -> OccupationConfig:
        """bit s set when site s sits in its local state 2"""
        return OccupationConfig(bits=int(sum(int(x) << s for s, x in enumerate(self.occupations[k]))))

    def config_label(self, k: int) -> str:
        return "".join(str(1 + int(x)) for x in self.occupations[k])

    def site_rdm(self, psi: np.ndarray, site: int) -> np.ndarray:
        t = np.moveaxis(psi.reshape((2,) * self.n), site, 0).reshape(2, -1)
        rho = t @ t.conj().T
        return (rho + rho.conj().T) / 2

    def local_spectra(self, psi: np.ndarray) -> LocalSpectra:
        major, minor, bases = [], [], []
        for s in range(self.n):
            lambdas, vectors, _ = spectrum_of(self.site_rdm(psi, s))
            major.append(lambdas[0])
            minor.append(lambdas[1])
            bases.append(vectors)
        # pin the pair sum exactly; rounding only
        minor = np.clip(np.array(minor), 0.0, 0.5)
        return LocalSpectra(major=1.0 - minor, minor=minor, bases=np.array(bases))


@lru_cache(maxsize=16)
def qubit_register(n: int) -> QubitRegister:
    return QubitRegister(n)


def qubit_state(amplitudes, normalize: bool = False) -> QubitState:
    amplitudes = np.asarray(amplitudes, dtype=complex)
    n = int(round(np.log2(len(amplitudes))))
    if 2 ** n != len(amplitudes):
        raise InvalidSettingError(f"amplitude count {len(amplitudes)} is not a power of two")
    state = QubitState(n=n, amplitudes=amplitudes)
    return state.normalize() if normalize else state


def product_state(bits: str) -> QubitState:
    """Computational product state, e.g. '010' (site 0 first)"""
    n = len(bits)
    amplitudes = np.zeros(2 ** n, dtype=complex)
    amplitudes[int(bits, 2)] = 1.0
    return QubitState(n=n, amplitudes=amplitudes)


def w_state(n: int) -> QubitState:
    amplitudes = np.zeros(2 ** n, dtype=complex)
    for s in range(n):
        amplitudes[1 << (n - 1 - s)] = 1.0
    return QubitState(n=n, amplitudes=amplitudes / np.sqrt(n))


def ghz_state(n: int) -> QubitState:
    amplitudes = np.zeros(2 ** n, dtype=complex)
    amplitudes[0] = amplitudes[-1] = 1 / np.sqrt(2)
    return QubitState(n=n, amplitudes=amplitudes)


def random_qubit_state(n: int, seed: Optional[int]) -> QubitState:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return QubitState(n=n, amplitudes=z / np.linalg.norm(z))


def apply_local_unitaries(state: QubitState, unitaries: List[np.ndarray]) -> QubitState:
    register = qubit_register(state.n)
    psi = state.amplitudes
    for s, u in enumerate(unitaries):
        psi = register.apply_site(psi, s, np.asarray(u, dtype=complex))
    return QubitState(n=state.n, amplitudes=psi)


def random_local_unitaries(n: int, seed: Optional[int]) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [random_unitary(2, rng) for _ in range(n)]


# MARGINALS AND HIGUCHI CONSTRAINTS

def qubit_rdm(state: QubitState, site: int) -> np.ndarray:
    if not 0 <= site < state.n:
        raise IndexError(f"site {site} out of range for {state.n} qubits")
    return qubit_register(state.n).site_rdm(state.amplitudes, site)


def local_spectra(state: QubitState) -> LocalSpectra:
    require_normalized(state.amplitudes)
    return qubit_register(state.n).local_spectra(state.amplitudes)


def higuchi_evaluate(state: QubitState) -> List[float]:
    constraints = higuchi_set(state.n)
    minor = local_spectra(state).minor
    return [evaluate(c, minor) for c in constraints.constraints]


def qubit_dhat(state: QubitState, i: int, gap_tol: Optional[float] = None) -> Tuple[DhatOperator, SelectionRule]:
    """D-hat of Higuchi D_i (0-based site i) in the local eigenbases of state"""
    gap_tol = settings.gap_tol if gap_tol is None else gap_tol
    if not 0 <= i < state.n:
        raise IndexError(f"site {i} out of range for {state.n} qubits")
    spectra = local_spectra(state)
    if spectra.min_gap < gap_tol:
        site = int(np.argmin(spectra.gaps))
        raise DegenerateSpectrumError(
            f"qubit {site} has a degenerate marginal (gap {spectra.min_gap:.3e} < {gap_tol:g})",
            gap=spectra.min_gap,
        )
    op = DhatOperator(qubit_register(state.n), higuchi_set(state.n).constraints[i], spectra.bases)
    return op, selection_rule(op)
