import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marginalflow.core.dhat import check_variance_bound, zero_projector
from marginalflow.core.qubits import (
    apply_local_unitaries, ghz_state, higuchi_evaluate, local_spectra, product_state, qubit_dhat, qubit_register,
    qubit_rdm, qubit_state, random_local_unitaries, random_qubit_state, w_state,
)
from marginalflow.errors import DegenerateSpectrumError, InvalidSettingError

from tests.conftest import partial_trace_site


def test_w_state_higuchi_values(w3):
    np.testing.assert_allclose(higuchi_evaluate(w3), [1 / 3] * 3, atol=1e-10)


def test_ghz_state_higuchi_values(ghz3):
    np.testing.assert_allclose(higuchi_evaluate(ghz3), [0.5] * 3, atol=1e-10)


def test_product_state_saturates_every_constraint():
    np.testing.assert_allclose(higuchi_evaluate(product_state("010")), [0, 0, 0], atol=1e-12)


@pytest.mark.parametrize("site", range(4))
def test_site_rdm_matches_partial_trace(site):
    state = random_qubit_state(4, 9)
    np.testing.assert_allclose(qubit_rdm(state, site), partial_trace_site(state.amplitudes, 4, site), atol=1e-12)


def test_site_index_is_checked(w3):
    with pytest.raises(IndexError):
        qubit_rdm(w3, 3)
    with pytest.raises(IndexError):
        qubit_dhat(w3, -1)


def test_local_spectra_are_ordered():
    spectra = local_spectra(random_qubit_state(3, 1))
    assert np.all(spectra.major >= spectra.minor)
    np.testing.assert_allclose(spectra.major + spectra.minor, 1.0)
    assert spectra.minor.max() <= 0.5


@pytest.mark.parametrize("n", [3, 4, 5])
def test_higuchi_zero_space_has_dimension_n(n):
    state = random_qubit_state(n, 100 + n)
    for i in range(n):
        op, rule = qubit_dhat(state, i)
        assert rule.dimension == n
        assert zero_projector(op).rank == n


def test_selection_rule_labels_for_first_site():
    _, rule = qubit_dhat(random_qubit_state(3, 4), 0)
    assert sorted(rule.labels) == ["111", "212", "221"]


def test_dhat_expectation_equals_constraint_value():
    state = random_qubit_state(4, 21)
    values = higuchi_evaluate(state)
    for i in range(4):
        op, _ = qubit_dhat(state, i)
        assert op.expectation(state.amplitudes) == pytest.approx(values[i], abs=1e-10)


def test_ghz_marginals_are_degenerate(ghz3):
    with pytest.raises(DegenerateSpectrumError):
        qubit_dhat(ghz3, 0)


@hsettings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_local_unitaries_leave_constraints_invariant(seed):
    state = random_qubit_state(3, seed)
    rotated = apply_local_unitaries(state, random_local_unitaries(3, seed + 1))
    np.testing.assert_allclose(higuchi_evaluate(rotated), higuchi_evaluate(state), atol=1e-10)


@hsettings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_qubit_variance_bound(seed):
    state = random_qubit_state(3, seed)
    op, _ = qubit_dhat(state, 0, gap_tol=0.0)
    report = check_variance_bound(state, op)
    assert report.lower_bound.holds or report.mean > 1


def test_register_labels_and_lift():
    register = qubit_register(3)
    assert register.config_label(0) == "111"
    assert register.config_label(6) == "221"
    assert register.config(6).bits == 0b011
    bases = np.array(random_local_unitaries(3, 5))
    np.testing.assert_allclose(register.lift_matrix(bases).conj().T @ register.lift_matrix(bases), np.eye(8),
                               atol=1e-12)


def test_qubit_state_from_amplitudes():
    state = qubit_state([1, 1, 0, 0], normalize=True)
    assert state.n == 2 and state.norm == pytest.approx(1.0)
    with pytest.raises(InvalidSettingError):
        qubit_state([1, 0, 0])
    assert w_state(4).norm == pytest.approx(1.0)
    assert ghz_state(4).amplitudes[-1] == pytest.approx(1 / np.sqrt(2))
