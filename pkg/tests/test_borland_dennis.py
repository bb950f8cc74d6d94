import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marginalflow.core.borland_dennis import (
    BD_SETTING, borland_dennis_d, check_off_diagonal, check_relaxation_chain, check_theorem_unstable,
    check_theorem_xizeta, expand, pinned_state, quasipinned_state, random_pinned_state, rotate_and_bound,
    rotated_coefficients, rotation_34,
)
from marginalflow.core.fock import fock_basis, fock_setting, random_state, random_unitary, slater_state, state_from_terms
from marginalflow.errors import DegenerateSpectrumError, InvalidSettingError, QuasipinningRangeError
from marginalflow.models.borland_dennis import BDCoefficients


def test_pinned_state_expansion(pinned_bd):
    exp = expand(pinned_bd)
    np.testing.assert_allclose(exp.lambdas, [0.9, 0.7, 0.6, 0.4, 0.3, 0.1], atol=1e-12)
    w = exp.weights()
    assert w["alpha"] == pytest.approx(0.6)
    assert w["nu"] == pytest.approx(0.3)
    assert w["mu"] == pytest.approx(0.1)
    assert exp.D == pytest.approx(0.0, abs=1e-12)
    assert exp.residual_weight < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_random_states_have_eight_determinants(seed):
    exp = expand(random_state(BD_SETTING, seed))
    assert exp.residual_weight < 1e-7
    lam = exp.lambdas
    np.testing.assert_allclose([lam[0] + lam[5], lam[1] + lam[4], lam[2] + lam[3]], 1.0, atol=1e-8)
    assert check_off_diagonal(exp).check.holds


@hsettings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_xi_zeta_weight_is_bounded_by_D(seed):
    exp = expand(random_state(BD_SETTING, seed), gap_tol=0.0)
    assert check_theorem_xizeta(exp).holds
    assert exp.D == pytest.approx(borland_dennis_d(random_state(BD_SETTING, seed)), abs=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_unstable_weight_bound(seed):
    exp = expand(quasipinned_state(seed, max_D=0.1))
    report = check_theorem_unstable(exp, min_gap=1e-3)
    assert report.gap34 == pytest.approx(exp.lambdas[2] - exp.lambdas[3])
    assert report.check.holds


def test_unstable_bound_needs_a_gap(pinned_bd):
    exp = expand(pinned_bd)
    with pytest.raises(DegenerateSpectrumError):
        check_theorem_unstable(exp, min_gap=0.5)


@pytest.mark.parametrize("seed", range(10))
def test_relaxation_chain(seed):
    report = check_relaxation_chain(expand(random_state(BD_SETTING, seed), gap_tol=0.0))
    assert report.identity_error < 1e-8
    assert report.holds
    assert report.Q <= report.D + 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_rotation_bounds_residual_weight(seed):
    exp = expand(quasipinned_state(seed, max_D=0.1))
    report = rotate_and_bound(exp)
    assert report.holds
    assert report.closed_form_error < 1e-10
    assert report.beta_tilde < 1e-10
    assert report.residual_weight <= 2 * exp.D / (1 - exp.D) + 1e-9


def test_rotation_closed_form_is_unitary():
    exp = expand(quasipinned_state(11, max_D=0.1))
    W = rotation_34(exp)
    np.testing.assert_allclose(W.conj().T @ W, np.eye(6), atol=1e-12)
    rotated = rotated_coefficients(exp)
    assert rotated.norm2 == pytest.approx(exp.norm2)
    assert abs(rotated.beta) == 0.0


def test_pinned_state_has_zero_residual():
    exp = expand(random_pinned_state(4))
    report = rotate_and_bound(exp)
    assert report.residual_weight == pytest.approx(0.0, abs=1e-10)
    assert exp.D == pytest.approx(0.0, abs=1e-10)


def test_rotation_requires_quasipinning(setting_36):
    state = state_from_terms(setting_36, [(1.0, [0, 1, 2]), (1.0, [3, 4, 5])]).normalize()
    exp = expand(state, gap_tol=0.0)
    assert exp.D == pytest.approx(0.5)
    with pytest.raises(QuasipinningRangeError):
        rotate_and_bound(exp)


def test_quasipinned_sampler_respects_max_D():
    for seed in range(5):
        assert borland_dennis_d(quasipinned_state(seed, max_D=0.02)) < 0.02


def test_expansion_needs_three_in_six(setting_24):
    with pytest.raises(InvalidSettingError):
        expand(random_state(setting_24, 0))


def test_expansion_rejects_degenerate_occupations():
    with pytest.raises(DegenerateSpectrumError):
        expand(slater_state(fock_setting(3, 6), [0, 1, 2]))


def test_pinned_weights_are_validated():
    with pytest.raises(InvalidSettingError):
        pinned_state([0.5, 0.5, 0.5])
    with pytest.raises(InvalidSettingError):
        pinned_state([1.2, -0.1, -0.1])


def test_pinned_state_in_rotated_orbitals(rng):
    U = random_unitary(6, rng)
    state = pinned_state([0.6, 0.3, 0.1], orbitals=U)
    back = fock_basis(BD_SETTING).to_reference(state.amplitudes, U)
    np.testing.assert_allclose(back, pinned_state([0.6, 0.3, 0.1]).amplitudes, atol=1e-10)


def test_off_diagonal_identities_on_coefficients():
    pinned = BDCoefficients(alpha=0.6 ** 0.5, beta=0, gamma=0, delta=0, nu=0.3 ** 0.5, mu=0.1 ** 0.5, xi=0, zeta=0)
    assert max(abs(v) for v in pinned.off_diagonal().values()) == 0.0
    mixed = BDCoefficients(alpha=0.8, beta=0.6, gamma=0, delta=0, nu=0, mu=0, xi=0, zeta=0)
    assert check_off_diagonal(mixed).values["off34"] == pytest.approx(0.48)
    assert not check_off_diagonal(mixed).check.holds


@pytest.mark.slow
def test_thousand_quasipinned_states():
    for seed in range(1000):
        exp = expand(quasipinned_state(seed, max_D=0.1))
        assert check_theorem_xizeta(exp).holds
        assert check_relaxation_chain(exp).holds
        assert rotate_and_bound(exp).holds
