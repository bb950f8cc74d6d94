import numpy as np
import pytest
from pydantic import ValidationError

from marginalflow.core.fock import fock_setting
from marginalflow.core.hamiltonians import (
    antisymmetrize, hamiltonian_matrix, hubbard_hamiltonian, one_body_hamiltonian, random_hamiltonian,
)
from marginalflow.core.variational import exact_diagonalize
from marginalflow.models.variational import Hamiltonian

from tests.conftest import dense_hamiltonian


@pytest.mark.parametrize("N,d", [(2, 4), (1, 3), (3, 5)])
def test_lift_matches_dense_oracle(N, d):
    setting = fock_setting(N, d)
    H = random_hamiltonian(setting, g=0.7, seed=N + d)
    expected = dense_hamiltonian(setting, np.asarray(H.one_body), np.asarray(H.two_body))
    np.testing.assert_allclose(hamiltonian_matrix(H).toarray(), expected, atol=1e-10)


def test_two_site_hubbard_dimer():
    for U in (0.0, 1.0, 4.0):
        spectral = exact_diagonalize(hubbard_hamiltonian(2, 2, t=1.0, U=U))
        assert spectral.E0 == pytest.approx((U - np.sqrt(U ** 2 + 16)) / 2, abs=1e-10)
        assert not spectral.degenerate


def test_hubbard_is_hermitian_and_spin_symmetric():
    H = hubbard_hamiltonian(3, 2, t=1.0, U=2.0)
    M = hamiltonian_matrix(H).toarray()
    np.testing.assert_allclose(M, M.conj().T, atol=1e-12)
    assert H.setting.d == 6
    # up and down hopping blocks coincide
    h = np.asarray(H.one_body)
    np.testing.assert_allclose(h[0::2, 0::2], h[1::2, 1::2])


def test_one_body_ground_energy_fills_lowest_orbitals(rng):
    setting = fock_setting(2, 5)
    A = rng.normal(size=(5, 5))
    h = (A + A.T) / 2
    spectral = exact_diagonalize(one_body_hamiltonian(setting, h))
    assert spectral.E0 == pytest.approx(np.sort(np.linalg.eigvalsh(h))[:2].sum(), abs=1e-10)


def test_antisymmetrize_symmetries(rng):
    V = antisymmetrize(rng.normal(size=(4,) * 4) + 1j * rng.normal(size=(4,) * 4))
    np.testing.assert_allclose(V, -V.transpose(1, 0, 2, 3), atol=1e-14)
    np.testing.assert_allclose(V, -V.transpose(0, 1, 3, 2), atol=1e-14)
    np.testing.assert_allclose(V, V.transpose(2, 3, 0, 1).conj(), atol=1e-14)


def test_hamiltonian_model_rejects_bad_coefficients(setting_24):
    with pytest.raises(ValidationError):
        Hamiltonian(setting=setting_24, one_body=np.triu(np.ones((4, 4))), two_body=np.zeros((4,) * 4))
    with pytest.raises(ValidationError):
        Hamiltonian(setting=setting_24, one_body=np.eye(4), two_body=np.ones((4,) * 4))
    with pytest.raises(ValidationError):
        Hamiltonian(setting=setting_24, one_body=np.eye(3), two_body=np.zeros((4,) * 4))


def test_random_hamiltonian_is_reproducible(setting_24):
    a, b = random_hamiltonian(setting_24, 0.1, 3), random_hamiltonian(setting_24, 0.1, 3)
    np.testing.assert_array_equal(a.two_body, b.two_body)
    assert "g=0.1" in a.label
