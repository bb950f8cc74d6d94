import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marginalflow.core.borland_dennis import BD_SETTING
from marginalflow.core.constraints import borland_dennis_set, evaluate, higuchi_set, pauli_set
from marginalflow.core.dhat import (
    build_dhat, check_variance_bound, selection_rule, variance, variance_lower_bound, zero_projector,
)
from marginalflow.core.fock import fock_basis, random_state, random_unitary
from marginalflow.core.marginal import state_spectrum
from marginalflow.errors import InvalidSettingError, LengthMismatchError, NotUnitaryError

D_CONSTRAINT = borland_dennis_set().get("D")


def natural_dhat(state):
    spectrum = state_spectrum(state, gap_tol=0.0)
    return build_dhat(D_CONSTRAINT, spectrum.orbitals, state.setting), spectrum


def test_borland_dennis_selection_rule(rng):
    op = build_dhat(D_CONSTRAINT, random_unitary(6, rng), BD_SETTING)
    rule = selection_rule(op)
    # n1 + n2 + n4 = 2
    assert rule.dimension == 9
    assert {"1,2,3", "1,4,5", "2,4,6"} <= set(rule.labels)
    assert "1,2,4" not in rule.labels
    assert zero_projector(op).rank == 9


def test_dhat_spectrum_is_integer(rng):
    op = build_dhat(D_CONSTRAINT, random_unitary(6, rng), BD_SETTING)
    assert op.diagonal.dtype.kind == "i"
    assert sorted(set(op.diagonal.tolist())) == [-1, 0, 1, 2]


def test_expectation_equals_constraint_value(random_36):
    op, spectrum = natural_dhat(random_36)
    assert op.expectation(random_36.amplitudes) == pytest.approx(evaluate(D_CONSTRAINT, spectrum.lambdas),
                                                                 abs=1e-10)


def test_apply_matches_dense_matrix(random_36, rng):
    op = build_dhat(D_CONSTRAINT, random_unitary(6, rng), BD_SETTING)
    psi = random_36.amplitudes
    np.testing.assert_allclose(op.apply(psi), op.matrix() @ psi, atol=1e-10)
    M = op.matrix()
    np.testing.assert_allclose(M, M.conj().T, atol=1e-12)


def test_projector_is_idempotent(random_36, rng):
    P = zero_projector(build_dhat(D_CONSTRAINT, random_unitary(6, rng), BD_SETTING))
    once = P.apply(random_36.amplitudes)
    np.testing.assert_allclose(P.apply(once), once, atol=1e-12)
    assert P.weight(random_36.amplitudes) == pytest.approx(np.vdot(once, once).real, abs=1e-12)
    dense = P.matrix()
    np.testing.assert_allclose(dense @ dense, dense, atol=1e-10)


@hsettings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_variance_lower_bound_holds(seed):
    state = random_state(BD_SETTING, seed)
    op, _ = natural_dhat(state)
    report = check_variance_bound(state, op)
    if report.mean < 1:
        assert report.lower_bound.holds
    assert report.variance == pytest.approx(variance(state, op))


@pytest.mark.slow
def test_variance_lower_bound_on_thousand_states():
    for seed in range(1000):
        state = random_state(BD_SETTING, seed)
        op, _ = natural_dhat(state)
        report = check_variance_bound(state, op)
        if report.mean < 1:
            assert report.variance >= report.mean * (1 - report.mean) - 1e-9


def test_variance_lower_bound_helper():
    assert variance_lower_bound(0.25) == pytest.approx(0.1875)
    assert variance_lower_bound(2.0, 1.0, 3.0) == pytest.approx(1.0)


def test_pauli_dhat_on_slater_determinant():
    setting = BD_SETTING
    basis = fock_basis(setting)
    op = build_dhat(pauli_set(3, 6).get("pauli_upper"), np.eye(6), setting)
    psi = np.zeros(basis.dim, dtype=complex)
    psi[0] = 1.0
    assert op.expectation(psi) == 0.0
    assert op.variance(psi) == 0.0


def test_builder_rejects_bad_inputs(rng):
    with pytest.raises(NotUnitaryError):
        build_dhat(D_CONSTRAINT, 2 * np.eye(6), BD_SETTING)
    with pytest.raises(LengthMismatchError):
        build_dhat(pauli_set(2, 4).get("pauli_upper"), np.eye(6), BD_SETTING)
    with pytest.raises(InvalidSettingError):
        build_dhat(higuchi_set(6).constraints[0], np.eye(6), BD_SETTING)
