"""N-fermion pure states over bitmask-encoded Slater determinants.

Sign convention: a†_i and a_i act with sign (-1)^(number of occupied orbitals below i).
The basis state for a mask with occupied orbitals k1 < k2 < ... < kN is
a†_k1 a†_k2 ... a†_kN |0>. Basis order is ascending integer mask.

Orbital rotations follow lift(U) a†_k lift(U)^† = sum_i U_ik a†_i, so column k of U is
the new orbital k expressed in the old orbitals and lift(U) lift(V) = lift(UV).
"""
import logging
from functools import lru_cache
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy import sparse

from marginalflow.config import settings
from marginalflow.errors import (
    BasisTooLargeError, InvalidSettingError, NotHermitianError, NotUnitaryError,
)
from marginalflow.models.fock import FockSetting, OccupationConfig, OrbitalRotation, StateVector

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10


def _scatter(index: np.ndarray, values: np.ndarray, size: int) -> np.ndarray:
    """Complex-valued np.bincount"""
    real = np.bincount(index, weights=values.real, minlength=size)
    imag = np.bincount(index, weights=values.imag, minlength=size)
    return real + 1j * imag


def _parity_below(mask: int, orbital: int) -> int:
    return -1 if bin(mask & ((1 << orbital) - 1)).count("1") % 2 else 1


def check_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotUnitaryError(f"expected a square matrix, got shape {matrix.shape}")
    deviation = np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])).max()
    if deviation > tol:
        raise NotUnitaryError(f"matrix is not unitary (max |U^dag U - 1| = {deviation:.2e})")
    return matrix


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {matrix.shape}")
    deviation = np.abs(matrix - matrix.conj().T).max()
    if deviation > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |h - h^dag| = {deviation:.2e})")
    return matrix


def fock_setting(N: int, d: int) -> FockSetting:
    try:
        setting = FockSetting(N=N, d=d)
    except ValidationError as e:
        raise InvalidSettingError(f"invalid setting (N={N}, d={d}): {e.errors()[0]['msg']}") from e
    if setting.dimension > settings.max_basis_dim:
        raise BasisTooLargeError(
            f"binomial({d},{N}) = {setting.dimension} exceeds max_basis_dim={settings.max_basis_dim}"
        )
    return setting


class FockBasis:
    """Ordered determinant basis of one FockSetting with precomputed a†_i a_j tables"""

    def __init__(self, setting: FockSetting):
        if setting.dimension > settings.max_basis_dim:
            raise BasisTooLargeError(
                f"basis dimension {setting.dimension} exceeds max_basis_dim={settings.max_basis_dim}"
            )
        self.setting = setting
        self.N = setting.N
        self.d = setting.d
        masks = sorted(sum(1 << i for i in c) for c in combinations(range(self.d), self.N))
        self.masks = np.array(masks, dtype=np.int64)
        self.dim = len(masks)
        self.index = {m: k for k, m in enumerate(masks)}
        self.occupations = ((self.masks[:, None] >> np.arange(self.d)) & 1).astype(np.int64)
        self.orbital_lists = np.array(
            [[i for i in range(self.d) if (m >> i) & 1] for m in masks], dtype=np.int64
        )
        self._build_hopping_table(masks)
        self._build_adjacent_pairs(masks)
        logger.debug(f"Built Fock basis for N={self.N}, d={self.d} ({self.dim} determinants)")

    def _build_hopping_table(self, masks: List[int]):
        """Every nonzero a†_i a_j |src> = sign |dst>"""
        create, annihilate, src, dst, sign = [], [], [], [], []
        for k, m in enumerate(masks):
            for j in range(self.d):
                if not (m >> j) & 1:
                    continue
                s_j = _parity_below(m, j)
                removed = m & ~(1 << j)
                for i in range(self.d):
                    if (removed >> i) & 1:
                        continue
                    create.append(i)
                    annihilate.append(j)
                    src.append(k)
                    dst.append(self.index[removed | (1 << i)])
                    sign.append(s_j * _parity_below(removed, i))
        self.hop_create = np.array(create, dtype=np.int64)
        self.hop_annihilate = np.array(annihilate, dtype=np.int64)
        self.hop_src = np.array(src, dtype=np.int64)
        self.hop_dst = np.array(dst, dtype=np.int64)
        self.hop_sign = np.array(sign, dtype=float)
        self._hop_flat = self.hop_create * self.d + self.hop_annihilate

    def _build_adjacent_pairs(self, masks: List[int]):
        """For orbitals (p, p+1): configs holding only p, their partners holding only p+1, and both"""
        self.adjacent = []
        for p in range(self.d - 1):
            bit_p, bit_q = 1 << p, 1 << (p + 1)
            only_p, partner, both = [], [], []
            for k, m in enumerate(masks):
                has_p, has_q = bool(m & bit_p), bool(m & bit_q)
                if has_p and not has_q:
                    only_p.append(k)
                    partner.append(self.index[(m & ~bit_p) | bit_q])
                elif has_p and has_q:
                    both.append(k)
            self.adjacent.append(
                (np.array(only_p, dtype=np.int64), np.array(partner, dtype=np.int64),
                 np.array(both, dtype=np.int64))
            )

    def config(self, k: int) -> OccupationConfig:
        return OccupationConfig(bits=int(self.masks[k]))

    def config_label(self, k: int) -> str:
        return self.config(k).label()

    # ONE-BODY ACTIONS

    def apply_one_body(self, psi: np.ndarray, h: np.ndarray) -> np.ndarray:
        """sum_ij h_ij a†_i a_j psi"""
        values = h[self.hop_create, self.hop_annihilate] * self.hop_sign * psi[self.hop_src]
        return _scatter(self.hop_dst, values, self.dim)

    def transition_rdm(self, bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
        """T_ij = <bra| a†_i a_j |ket>"""
        values = np.conj(bra[self.hop_dst]) * self.hop_sign * ket[self.hop_src]
        return _scatter(self._hop_flat, values, self.d * self.d).reshape(self.d, self.d)

    def one_rdm(self, psi: np.ndarray) -> np.ndarray:
        """rho_ij = <a†_j a_i>, so rho = sum_k lambda_k phi_k phi_k^dag"""
        return self.transition_rdm(psi, psi).T

    def one_body_matrix(self, h: np.ndarray) -> sparse.csr_matrix:
        values = h[self.hop_create, self.hop_annihilate] * self.hop_sign
        return sparse.coo_matrix(
            (values, (self.hop_dst, self.hop_src)), shape=(self.dim, self.dim)
        ).tocsr()

    def excitation_matrix(self, i: int, j: int) -> sparse.csr_matrix:
        """Sparse matrix of a†_i a_j"""
        h = np.zeros((self.d, self.d), dtype=complex)
        h[i, j] = 1.0
        return self.one_body_matrix(h)

    # ORBITAL ROTATIONS

    def rotate(self, psi: np.ndarray, U: np.ndarray) -> np.ndarray:
        """lift(U) psi via a Givens factorization U = R_1 ... R_m W (W diagonal)"""
        rotations, phases = givens_decomposition(U)
        out = psi * np.prod(np.where(self.occupations == 1, phases[None, :], 1.0), axis=1)
        for p, g in reversed(rotations):
            out = self._apply_adjacent(out, p, g)
        return out

    def _apply_adjacent(self, psi: np.ndarray, p: int, g: np.ndarray) -> np.ndarray:
        only_p, partner, both = self.adjacent[p]
        out = psi.copy()
        a, b = psi[only_p], psi[partner]
        out[only_p] = g[0, 0] * a + g[0, 1] * b
        out[partner] = g[1, 0] * a + g[1, 1] * b
        out[both] = psi[both] * (g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0])
        return out

    def to_reference(self, psi: np.ndarray, basis: np.ndarray) -> np.ndarray:
        """Coefficients of psi over determinants built from the columns of basis"""
        return self.rotate(psi, basis.conj().T)

    def from_reference(self, coefficients: np.ndarray, basis: np.ndarray) -> np.ndarray:
        return self.rotate(coefficients, basis)

    def apply_occupation_operator(self, psi: np.ndarray, basis: np.ndarray,
                                  kappa0: float, kappa: np.ndarray) -> np.ndarray:
        """(kappa0 + sum_j kappa_j n_j) psi, with n_j counting orbital basis[:, j]"""
        h = (basis * np.asarray(kappa, dtype=float)[None, :]) @ basis.conj().T
        return kappa0 * psi + self.apply_one_body(psi, h)

    def lift_matrix(self, U: np.ndarray) -> np.ndarray:
        """Dense lift(U) by determinant minors: L[I, K] = det U[I, K]"""
        return self.lift_columns(U, np.arange(self.dim))

    def lift_columns(self, U: np.ndarray, columns: np.ndarray) -> np.ndarray:
        occ = self.orbital_lists
        cols = occ[np.asarray(columns, dtype=np.int64)]
        blocks = np.asarray(U)[occ[:, None, :, None], cols[None, :, None, :]]
        return np.linalg.det(blocks)


@lru_cache(maxsize=32)
def fock_basis(setting: FockSetting) -> FockBasis:
    return FockBasis(setting)


def givens_decomposition(U: np.ndarray) -> Tuple[List[Tuple[int, np.ndarray]], np.ndarray]:
    """Factor U = R_1 R_2 ... R_m diag(phases) with R_k acting on adjacent orbitals (p, p+1)"""
    W = np.array(U, dtype=complex, copy=True)
    d = W.shape[0]
    rotations = []
    for col in range(d):
        for row in range(d - 1, col, -1):
            a, b = W[row - 1, col], W[row, col]
            if abs(b) < 1e-300:
                continue
            r = np.hypot(abs(a), abs(b))
            g = np.array([[a / r, -np.conj(b) / r], [b / r, np.conj(a) / r]])
            W[[row - 1, row], :] = g.conj().T @ W[[row - 1, row], :]
            rotations.append((row - 1, g))
    return rotations, np.diag(W).copy()


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary: QR of a complex Gaussian matrix with the phases of R divided out"""
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))[None, :]


# OPERATIONS ON StateVector

def enumerate_basis(setting: FockSetting) -> List[OccupationConfig]:
    return [OccupationConfig(bits=int(m)) for m in fock_basis(setting).masks]


def slater_state(setting: FockSetting, orbitals: Sequence[int]) -> StateVector:
    """|orbitals> with 0-based orbital indices"""
    mask = sum(1 << i for i in set(orbitals))
    if len(set(orbitals)) != setting.N:
        raise InvalidSettingError(f"need {setting.N} distinct orbitals, got {list(orbitals)}")
    basis = fock_basis(setting)
    if mask not in basis.index:
        raise InvalidSettingError(f"orbitals {list(orbitals)} out of range for d={setting.d}")
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[basis.index[mask]] = 1.0
    return StateVector(setting=setting, amplitudes=amplitudes)


def state_from_terms(setting: FockSetting, terms: Sequence[Tuple[complex, Sequence[int]]]) -> StateVector:
    """sum_k c_k |orbitals_k> (0-based orbitals, not normalized)"""
    basis = fock_basis(setting)
    amplitudes = np.zeros(basis.dim, dtype=complex)
    for coefficient, orbitals in terms:
        amplitudes += coefficient * slater_state(setting, orbitals).amplitudes
    return StateVector(setting=setting, amplitudes=amplitudes)


def apply_number_operator(state: StateVector, orbital: int) -> StateVector:
    if not 0 <= orbital < state.setting.d:
        raise IndexError(f"orbital {orbital} out of range for d={state.setting.d}")
    basis = fock_basis(state.setting)
    return StateVector(setting=state.setting,
                       amplitudes=state.amplitudes * basis.occupations[:, orbital])


def apply_one_body_operator(state: StateVector, h: np.ndarray) -> StateVector:
    h = check_hermitian(h)
    if h.shape != (state.setting.d, state.setting.d):
        raise InvalidSettingError(f"one-body operator must be {state.setting.d}x{state.setting.d}")
    basis = fock_basis(state.setting)
    return StateVector(setting=state.setting, amplitudes=basis.apply_one_body(state.amplitudes, h))


def apply_orbital_rotation(state: StateVector, U: OrbitalRotation) -> StateVector:
    matrix = check_unitary(U.matrix)
    if U.d != state.setting.d:
        raise InvalidSettingError(f"rotation acts on {U.d} orbitals, state has {state.setting.d}")
    basis = fock_basis(state.setting)
    return StateVector(setting=state.setting, amplitudes=basis.rotate(state.amplitudes, matrix))


def random_state(setting: FockSetting, seed: Optional[int]) -> StateVector:
    """Haar-random unit vector from independent complex Gaussian amplitudes"""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=setting.dimension) + 1j * rng.normal(size=setting.dimension)
    return StateVector(setting=setting, amplitudes=z / np.linalg.norm(z))
