"""Hamiltonian builders and the lift of one- plus two-body operators to the N-particle space"""
import logging
from typing import Optional

import numpy as np
from scipy import sparse

from marginalflow.core.fock import fock_basis, fock_setting
from marginalflow.models.fock import FockSetting
from marginalflow.models.variational import Hamiltonian

logger = logging.getLogger(__name__)


def antisymmetrize(W: np.ndarray) -> np.ndarray:
    """Antisymmetric in (i, j) and (k, l), with V_ijkl = conj(V_klij)"""
    V = (W - W.transpose(1, 0, 2, 3) - W.transpose(0, 1, 3, 2) + W.transpose(1, 0, 3, 2)) / 4
    return (V + V.transpose(2, 3, 0, 1).conj()) / 2


def random_hamiltonian(setting: FockSetting, g: float, seed: Optional[int]) -> Hamiltonian:
    """Gaussian Hermitian h plus a Gaussian antisymmetrized V scaled by the coupling g"""
    rng = np.random.default_rng(seed)
    d = setting.d
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (A + A.conj().T) / 2
    W = rng.normal(size=(d,) * 4) + 1j * rng.normal(size=(d,) * 4)
    return Hamiltonian(setting=setting, one_body=h, two_body=g * antisymmetrize(W), label=f"random(g={g}, seed={seed})")


def one_body_hamiltonian(setting: FockSetting, h: np.ndarray) -> Hamiltonian:
    d = setting.d
    return Hamiltonian(setting=setting, one_body=h, two_body=np.zeros((d,) * 4), label="one-body")


def hubbard_hamiltonian(sites: int, N: int, t: float = 1.0, U: float = 1.0, periodic: bool = False) -> Hamiltonian:
    """Spinful Hubbard chain; spin orbital 2s is site s up, 2s + 1 is site s down"""
    setting = fock_setting(N, 2 * sites)
    d = setting.d
    h = np.zeros((d, d), dtype=complex)
    bonds = [(s, s + 1) for s in range(sites - 1)]
    if periodic and sites > 2:
        bonds.append((sites - 1, 0))
    for a, b in bonds:
        for spin in (0, 1):
            i, j = 2 * a + spin, 2 * b + spin
            h[i, j] = h[j, i] = -t
    V = np.zeros((d,) * 4, dtype=complex)
    for s in range(sites):
        up, down = 2 * s, 2 * s + 1
        V[up, down, up, down] = V[down, up, down, up] = U / 4
        V[down, up, up, down] = V[up, down, down, up] = -U / 4
    return Hamiltonian(setting=setting, one_body=h, two_body=V, label=f"hubbard(L={sites}, t={t}, U={U})")


def hamiltonian_matrix(H: Hamiltonian) -> sparse.csr_matrix:
    """Lift using a†_i a†_j a_l a_k = delta_jl E_ik - E_il E_jk with E_ab = a†_a a_b"""
    basis = fock_basis(H.setting)
    V = np.asarray(H.two_body)
    matrix = basis.one_body_matrix(np.asarray(H.one_body) + np.einsum("ijkj->ik", V))
    d = H.setting.d
    for j in range(d):
        for k in range(d):
            block = V[:, j, k, :]
            if not np.any(block):
                continue
            matrix = matrix - basis.one_body_matrix(block) @ basis.excitation_matrix(j, k)
    return matrix.tocsr()
