"""Shared fixtures and brute-force oracles.

The oracle builds a†_i as dense Jordan-Wigner matrices on the full 2^d Fock space (index = bitmask)
and restricts to the N-particle sector, independently of the hopping tables used by the package.
"""
from functools import lru_cache
from typing import List

import numpy as np
import pytest

from marginalflow.core.borland_dennis import pinned_state
from marginalflow.core.fock import fock_basis, fock_setting, random_state
from marginalflow.core.qubits import ghz_state, w_state


@lru_cache(maxsize=8)
def jw_creation(d: int) -> List[np.ndarray]:
    """a†_i with sign (-1)^(occupied orbitals below i)"""
    ops = []
    for i in range(d):
        op = np.zeros((2 ** d, 2 ** d))
        for mask in range(2 ** d):
            if (mask >> i) & 1:
                continue
            sign = (-1) ** bin(mask & ((1 << i) - 1)).count("1")
            op[mask | (1 << i), mask] = sign
        ops.append(op)
    return ops


def sector(setting) -> np.ndarray:
    """2^d x dim isometry embedding the package's basis order"""
    basis = fock_basis(setting)
    P = np.zeros((2 ** setting.d, basis.dim))
    P[basis.masks, np.arange(basis.dim)] = 1.0
    return P


def dense_one_body(setting, h: np.ndarray) -> np.ndarray:
    cd = jw_creation(setting.d)
    full = sum(h[i, j] * cd[i] @ cd[j].T for i in range(setting.d) for j in range(setting.d))
    P = sector(setting)
    return P.T @ full @ P


def dense_hamiltonian(setting, h: np.ndarray, V: np.ndarray) -> np.ndarray:
    """sum h_ij a†_i a_j + sum V_ijkl a†_i a†_j a_l a_k"""
    cd = jw_creation(setting.d)
    d = setting.d
    full = sum(h[i, j] * cd[i] @ cd[j].T for i in range(d) for j in range(d))
    for i in range(d):
        for j in range(d):
            for k in range(d):
                for l in range(d):
                    if V[i, j, k, l] != 0:
                        full = full + V[i, j, k, l] * cd[i] @ cd[j] @ cd[l].T @ cd[k].T
    P = sector(setting)
    return P.T @ full @ P


def dense_rdm(setting, psi: np.ndarray) -> np.ndarray:
    """rho_ij = <a†_j a_i>"""
    cd = jw_creation(setting.d)
    full = sector(setting) @ psi
    d = setting.d
    return np.array([[np.vdot(full, cd[j] @ cd[i].T @ full) for j in range(d)] for i in range(d)])


def dense_rotation(setting, psi: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Rebuild every determinant from the rotated creators b†_k = sum_i U_ik a†_i"""
    cd = jw_creation(setting.d)
    basis = fock_basis(setting)
    vacuum = np.zeros(2 ** setting.d)
    vacuum[0] = 1.0
    creators = [sum(U[i, k] * cd[i] for i in range(setting.d)) for k in range(setting.d)]
    out = np.zeros(2 ** setting.d, dtype=complex)
    for amplitude, orbitals in zip(psi, basis.orbital_lists):
        vec = vacuum.astype(complex)
        for k in reversed(orbitals):
            vec = creators[k] @ vec
        out += amplitude * vec
    return sector(setting).T @ out


def partial_trace_site(psi: np.ndarray, n: int, site: int) -> np.ndarray:
    """2x2 reduced state of one qubit, site 0 being the most significant bit"""
    tensor = psi.reshape([2] * n)
    moved = np.moveaxis(tensor, site, 0).reshape(2, -1)
    return moved @ moved.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(2025)


@pytest.fixture
def setting_24():
    return fock_setting(2, 4)


@pytest.fixture
def setting_36():
    return fock_setting(3, 6)


@pytest.fixture
def random_36(setting_36):
    return random_state(setting_36, 7)


@pytest.fixture
def pinned_bd():
    return pinned_state([0.6, 0.3, 0.1])


@pytest.fixture
def w3():
    return w_state(3)


@pytest.fixture
def ghz3():
    return ghz_state(3)
