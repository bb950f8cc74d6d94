import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marginalflow.core.fock import (
    apply_number_operator, apply_one_body_operator, apply_orbital_rotation, enumerate_basis, fock_basis,
    fock_setting, givens_decomposition, random_state, random_unitary, slater_state, state_from_terms,
)
from marginalflow.errors import BasisTooLargeError, InvalidSettingError, NotHermitianError, NotUnitaryError
from marginalflow.models.fock import OrbitalRotation

from tests.conftest import dense_one_body, dense_rdm, dense_rotation

SETTINGS = [(1, 3), (2, 4), (3, 6), (2, 5)]


def random_hermitian(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


def test_basis_is_ascending_masks():
    basis = fock_basis(fock_setting(3, 6))
    assert basis.dim == 20
    assert list(basis.masks) == sorted(basis.masks)
    assert enumerate_basis(fock_setting(3, 6))[0].label() == "1,2,3"
    assert basis.config_label(basis.dim - 1) == "4,5,6"


def test_invalid_settings():
    with pytest.raises(InvalidSettingError):
        fock_setting(4, 3)
    with pytest.raises(InvalidSettingError):
        fock_setting(0, 3)
    with pytest.raises(BasisTooLargeError):
        fock_setting(12, 24)


def test_slater_state_and_terms(setting_36):
    psi = slater_state(setting_36, [0, 1, 2])
    assert psi.amplitudes[0] == 1
    superposition = state_from_terms(setting_36, [(1.0, [0, 1, 2]), (1.0, [0, 3, 4])]).normalize()
    assert superposition.norm == pytest.approx(1.0)
    with pytest.raises(InvalidSettingError):
        slater_state(setting_36, [0, 1])
    with pytest.raises(InvalidSettingError):
        slater_state(setting_36, [0, 1, 6])


def test_number_operator(setting_36):
    psi = state_from_terms(setting_36, [(0.6, [0, 1, 2]), (0.8, [0, 3, 4])])
    n3 = apply_number_operator(psi, 3)
    assert np.vdot(psi.amplitudes, n3.amplitudes).real == pytest.approx(0.64)
    with pytest.raises(IndexError):
        apply_number_operator(psi, 6)


@pytest.mark.parametrize("N,d", [(2, 4), (3, 6)])
def test_number_operators_commute_and_sum_to_N(N, d):
    psi = random_state(fock_setting(N, d), 7)
    total = sum(apply_number_operator(psi, j).amplitudes for j in range(d))
    np.testing.assert_allclose(total, N * psi.amplitudes, atol=1e-12)
    for i in range(d):
        for j in range(i + 1, d):
            ij = apply_number_operator(apply_number_operator(psi, j), i).amplitudes
            ji = apply_number_operator(apply_number_operator(psi, i), j).amplitudes
            np.testing.assert_allclose(ij, ji, atol=1e-12)


@pytest.mark.parametrize("N,d", SETTINGS)
def test_one_body_action_matches_dense_oracle(N, d, rng):
    setting = fock_setting(N, d)
    h = random_hermitian(d, rng)
    psi = random_state(setting, 3)
    expected = dense_one_body(setting, h) @ psi.amplitudes
    np.testing.assert_allclose(apply_one_body_operator(psi, h).amplitudes, expected, atol=1e-9)
    np.testing.assert_allclose(fock_basis(setting).one_body_matrix(h).toarray(), dense_one_body(setting, h),
                               atol=1e-12)


@hsettings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_one_rdm_matches_dense_oracle(seed):
    setting = fock_setting(2, 4)
    psi = random_state(setting, seed)
    rho = fock_basis(setting).one_rdm(psi.amplitudes)
    np.testing.assert_allclose(rho, dense_rdm(setting, psi.amplitudes), atol=1e-9)


def test_transition_rdm_between_different_states(setting_24):
    bra, ket = random_state(setting_24, 1).amplitudes, random_state(setting_24, 2).amplitudes
    T = fock_basis(setting_24).transition_rdm(bra, ket)
    for i in range(4):
        for j in range(4):
            E = np.zeros((4, 4))
            E[i, j] = 1.0
            assert T[i, j] == pytest.approx(np.vdot(bra, dense_one_body(setting_24, E) @ ket), abs=1e-12)


def test_non_hermitian_operator_is_rejected(setting_24, rng):
    psi = random_state(setting_24, 1)
    with pytest.raises(NotHermitianError):
        apply_one_body_operator(psi, rng.normal(size=(4, 4)) + 1j * np.eye(4))


@pytest.mark.parametrize("N,d", SETTINGS)
def test_rotation_matches_rotated_creators(N, d, rng):
    setting = fock_setting(N, d)
    U = random_unitary(d, rng)
    psi = random_state(setting, 11)
    rotated = apply_orbital_rotation(psi, OrbitalRotation(matrix=U)).amplitudes
    np.testing.assert_allclose(rotated, dense_rotation(setting, psi.amplitudes, U), atol=1e-9)
    np.testing.assert_allclose(rotated, fock_basis(setting).lift_matrix(U) @ psi.amplitudes, atol=1e-9)


def test_lift_is_a_representation(setting_36, rng):
    basis = fock_basis(setting_36)
    U, V = random_unitary(6, rng), random_unitary(6, rng)
    np.testing.assert_allclose(basis.lift_matrix(U) @ basis.lift_matrix(V), basis.lift_matrix(U @ V),
                               atol=1e-10)
    psi = random_state(setting_36, 5).amplitudes
    back = basis.from_reference(basis.to_reference(psi, U), U)
    np.testing.assert_allclose(back, psi, atol=1e-10)


def test_rotation_preserves_norm_and_rejects_non_unitary(setting_36, rng):
    psi = random_state(setting_36, 2)
    rotated = apply_orbital_rotation(psi, OrbitalRotation(matrix=random_unitary(6, rng)))
    assert rotated.norm == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NotUnitaryError):
        apply_orbital_rotation(psi, OrbitalRotation(matrix=2 * np.eye(6)))
    with pytest.raises(InvalidSettingError):
        apply_orbital_rotation(psi, OrbitalRotation(matrix=np.eye(5)))


def test_givens_factorization_reassembles(rng):
    U = random_unitary(5, rng)
    rotations, phases = givens_decomposition(U)
    product = np.eye(5, dtype=complex)
    for p, g in rotations:
        R = np.eye(5, dtype=complex)
        R[p:p + 2, p:p + 2] = g
        product = product @ R
    np.testing.assert_allclose(product @ np.diag(phases), U, atol=1e-12)


def test_random_unitary_is_unitary(rng):
    U = random_unitary(6, rng)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(6), atol=1e-12)


def test_random_state_is_reproducible(setting_36):
    a, b = random_state(setting_36, 42), random_state(setting_36, 42)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    assert a.norm == pytest.approx(1.0)


def test_random_state_weights_are_uniform_on_average(setting_24):
    draws = 10_000
    weights = np.array([abs(random_state(setting_24, seed).amplitudes[0]) ** 2 for seed in range(draws)])
    standard_error = weights.std(ddof=1) / np.sqrt(draws)
    assert abs(weights.mean() - 1 / setting_24.dimension) < 3 * standard_error
