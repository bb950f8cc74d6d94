import json

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marginalflow.core.constraints import (
    borland_dennis_set, catalog, check_decreasing, collective_pauli, evaluate, evaluate_set, hf_distance,
    higuchi_set, load_constraint_file, pauli_set, select_constraint, trivial_constraint, write_constraint_file,
)
from marginalflow.core.fock import fock_setting, random_state
from marginalflow.core.marginal import state_spectrum
from marginalflow.errors import (
    ConstraintIntegerError, ConstraintLengthError, ConstraintSchemaError, InvalidSettingError,
    LengthMismatchError, OrderingError,
)
from marginalflow.models.constraints import LinearConstraint

HF = [1, 1, 1, 0, 0, 0]
PINNED = [0.9, 0.7, 0.6, 0.4, 0.3, 0.1]


def decreasing_vectors(d):
    return st.lists(st.floats(min_value=0, max_value=1), min_size=d, max_size=d).map(
        lambda xs: sorted(xs, reverse=True)
    )


def test_borland_dennis_on_pinned_spectrum():
    D = borland_dennis_set().get("D")
    assert evaluate(D, PINNED) == pytest.approx(0.0, abs=1e-12)
    assert evaluate(D, HF) == pytest.approx(0.0)
    for eq in borland_dennis_set().equalities:
        assert evaluate(eq, PINNED) == pytest.approx(0.0, abs=1e-12)


def test_hartree_fock_saturates_pauli():
    values = evaluate_set(pauli_set(3, 6), HF)
    assert values == [0.0, 0.0]


def test_hf_distance():
    assert hf_distance(HF, 3) == 0.0
    assert hf_distance(PINNED, 3) == pytest.approx(0.1 + 0.3 + 0.4 + 0.4 + 0.3 + 0.1)


def test_ordering_and_length_are_checked():
    D = borland_dennis_set().get("D")
    with pytest.raises(OrderingError):
        evaluate(D, [0.7, 0.9, 0.6, 0.4, 0.3, 0.1])
    with pytest.raises(LengthMismatchError):
        evaluate(D, [1, 1, 0])
    with pytest.raises(OrderingError):
        check_decreasing([0.1, 0.2])


@hsettings(max_examples=50)
@given(a=decreasing_vectors(6), b=decreasing_vectors(6), t=st.floats(min_value=0, max_value=1))
def test_evaluate_is_affine(a, b, t):
    D = borland_dennis_set().get("D")
    mix = [t * x + (1 - t) * y for x, y in zip(a, b)]
    expected = t * evaluate(D, a) + (1 - t) * evaluate(D, b)
    assert evaluate(D, mix) == pytest.approx(expected, abs=1e-12)


def test_higuchi_skips_ordering():
    higuchi = higuchi_set(3)
    values = evaluate_set(higuchi, [0.1, 0.4, 0.2])
    np.testing.assert_allclose(values, [0.5, -0.1, 0.3])


def test_catalog_names():
    assert catalog("pauli", 3, 6).name == "pauli"
    assert catalog("bd").name == "borland-dennis"
    assert len(catalog("higuchi", qubits=4).constraints) == 4
    assert catalog("collective:1,1", 3, 6).constraints[0].name == "S_1,1"
    assert catalog("trivial", 2, 4).constraints[0].is_trivial
    with pytest.raises(InvalidSettingError):
        catalog("no-such-set", 3, 6)
    with pytest.raises(InvalidSettingError):
        catalog("borland-dennis", 2, 4)


def test_collective_pauli_values():
    c = collective_pauli(1, 1, 3, 6)
    assert c.kappa0 == 1 and c.kappa == (-1, 0, 0, 0, 0, 1)
    assert evaluate(c, HF) == 0.0
    with pytest.raises(InvalidSettingError):
        collective_pauli(4, 0, 3, 6)


def test_select_constraint_defaults_to_first_nontrivial():
    assert select_constraint("borland-dennis", 3, 6).name == "D"
    assert select_constraint("pauli", 3, 6).name == "pauli_upper"
    assert select_constraint("higuchi:2", qubits=3).name == "D2"
    assert select_constraint("borland-dennis#eq16", 3, 6).equality


def test_structural_ordering_detection():
    s = borland_dennis_set()
    assert [c.name for c in s.nontrivial] == ["D"]
    assert s.get("order12").is_ordering and s.get("nonneg6").is_ordering
    assert not s.get("D").is_ordering
    assert trivial_constraint(4).is_trivial


def test_constraint_file_round_trip(tmp_path):
    path = write_constraint_file(borland_dennis_set(), tmp_path / "bd.json")
    loaded = load_constraint_file(path)
    assert loaded.N == 3 and loaded.d == 6
    assert [c.kappa for c in loaded.constraints] == [c.kappa for c in borland_dennis_set().constraints]
    assert [c.name for c in loaded.nontrivial] == ["D"]
    assert select_constraint(str(path), 3, 6).name == "D"


def test_constraint_file_accepts_integral_floats(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "name": "custom", "N": 2, "d": 4,
        "constraints": [{"kappa0": 1.0, "kappa": [-1, 0, 0, 0], "equality": False}],
    }))
    c = load_constraint_file(path).constraints[0]
    assert c.kappa0 == 1 and c.name == "c1"


@pytest.mark.parametrize("document,error", [
    ({"name": "x", "N": 2, "d": 4, "constraints": [{"kappa0": 0.5, "kappa": [1, 0, 0, 0]}]},
     ConstraintIntegerError),
    ({"name": "x", "N": 2, "d": 4, "constraints": [{"kappa0": 0, "kappa": [1, 0, 0]}]}, ConstraintLengthError),
    ({"name": "x", "N": 2, "constraints": []}, ConstraintSchemaError),
    ({"name": "x", "N": 2, "d": 4, "constraints": [{"kappa0": "1", "kappa": [1, 0, 0, 0]}]},
     ConstraintSchemaError),
    ({"name": "x", "N": 2, "d": 4, "constraints": [{"kappa0": 0, "kappa": [1, 0, 0, 0], "extra": 1}]},
     ConstraintSchemaError),
])
def test_malformed_constraint_files(tmp_path, document, error):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document))
    with pytest.raises(error):
        load_constraint_file(path)


def test_constraint_file_for_wrong_setting(tmp_path):
    path = write_constraint_file(pauli_set(2, 4), tmp_path / "pauli.json")
    with pytest.raises(ConstraintLengthError):
        select_constraint(str(path), 3, 6)


def test_linear_constraint_is_frozen():
    c = LinearConstraint(name="x", kappa0=1, kappa=(1, -1))
    with pytest.raises(Exception):
        c.kappa0 = 2


@pytest.mark.slow
def test_borland_dennis_inequality_holds_on_random_states():
    D = borland_dennis_set().get("D")
    setting = fock_setting(3, 6)
    values = [evaluate(D, state_spectrum(random_state(setting, seed), gap_tol=0.0).lambdas)
              for seed in range(10_000)]
    assert min(values) >= -1e-9
