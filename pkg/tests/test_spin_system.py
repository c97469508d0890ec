import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamtomo.errors import HamiltonianParseError, HamiltonianValidationError, ResourceLimitError
from hamtomo.spin_system import (
    PauliAxis,
    SpinSystem,
    from_document,
    load,
    matrix_representation,
    random_instance,
    save,
    to_document,
)
from hamtomo.verify import kron_hamiltonian


def test_axis_successor_is_cyclic():
    assert PauliAxis.X.successor() is PauliAxis.Y
    assert PauliAxis.Y.successor() is PauliAxis.Z
    assert PauliAxis.Z.successor() is PauliAxis.X


def test_random_instance_two_spins():
    s = random_instance(2, seed=3)
    assert len(s.couplings) == 9
    assert len(s.fields) == 6
    vals = list(s.couplings.values()) + list(s.fields.values())
    assert all(-1 <= v <= 1 for v in vals)


def test_random_instance_coefficient_count_n12():
    # 9 N (N - 1) / 2 + 3 N for N = 12
    assert random_instance(12, seed=0).n_coefficients == 630


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_coefficient_count_formula(n):
    assert random_instance(n, seed=n).n_coefficients == 9 * n * (n - 1) // 2 + 3 * n


def test_random_instance_is_deterministic():
    assert random_instance(4, seed=11) == random_instance(4, seed=11)
    assert random_instance(4, seed=11) != random_instance(4, seed=12)


def test_random_instance_rejects_single_spin():
    with pytest.raises(ValueError):
        random_instance(1, seed=0)


def test_generator_marginals():
    # 10^4 independent draws of each of the nine couplings of a 2-spin system
    vals = np.array([list(random_instance(2, seed=k).couplings.values()) for k in range(10_000)])
    assert np.all(np.abs(vals.mean(axis=0)) <= 0.05)
    assert np.all((vals.min(axis=0) >= -1) & (vals.min(axis=0) <= -0.9))
    assert np.all((vals.max(axis=0) <= 1) & (vals.max(axis=0) >= 0.9))


def test_lookup_resolves_reverse_order():
    s = SpinSystem(3, {(0, 2, "x", "z"): 0.4})
    assert s.coupling(2, 0, "z", "x") == 0.4
    assert s.coupling(0, 2, "z", "x") == 0.0
    assert s.coupling(0, 1, "x", "x") == 0.0


def test_reverse_keys_are_canonicalized():
    s = SpinSystem(3, {(2, 0, "y", "x"): 0.25})
    assert list(s.couplings) == [(0, 2, PauliAxis.X, PauliAxis.Y)]


def test_matrix_single_field():
    h = matrix_representation(SpinSystem(1, {}, {(0, "z"): 1.0}))
    assert np.allclose(h, np.diag([1, -1]))


def test_matrix_zz_coupling():
    h = matrix_representation(SpinSystem(2, {(0, 1, "z", "z"): 1.0}))
    assert np.allclose(h, np.diag([1, -1, -1, 1]))


def test_qubit_zero_is_most_significant():
    # b_0^x flips the leading bit: |00> <-> |10>
    h = matrix_representation(SpinSystem(2, {}, {(0, "x"): 1.0}))
    assert h[2, 0] == 1 and h[1, 0] == 0


def test_matrix_matches_kronecker_oracle_n3():
    s = random_instance(3, seed=5)
    assert np.max(np.abs(matrix_representation(s) - kron_hamiltonian(s))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2**32 - 1))
def test_matrix_is_hermitian(n, seed):
    h = matrix_representation(random_instance(n, seed))
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12


def test_matrix_cap():
    with pytest.raises(ResourceLimitError):
        matrix_representation(random_instance(4, 0), cap=3)


def test_minimal_document():
    doc = {"n_spins": 2, "couplings": [{"m": 0, "n": 1, "a": "x", "b": "x", "value": 0.5}]}
    s = from_document(doc)
    assert s.n_coefficients == 1
    assert s.coupling(0, 1, "x", "x") == 0.5


def test_round_trip_n12_is_bit_identical(tmp_path):
    s = random_instance(12, seed=99)
    path = tmp_path / "h.json"
    save(s, path)
    back = load(path)
    assert back == s
    assert all(back.couplings[k] == v for k, v in s.couplings.items())
    assert to_document(back) == json.loads(path.read_text())


def test_document_round_trip_identity():
    doc = to_document(random_instance(3, seed=1))
    assert to_document(from_document(doc)) == doc


def test_out_of_range_value_rejected():
    doc = {"n_spins": 2, "couplings": [{"m": 0, "n": 1, "a": "x", "b": "x", "value": 1.5}]}
    with pytest.raises(HamiltonianValidationError):
        from_document(doc)


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"couplings": []}, "n_spins"),
        ({"n_spins": 2, "couplings": [{"m": 0, "a": "x", "b": "x", "value": 0.1}]}, "'n'"),
        ({"n_spins": 2, "couplings": [{"m": 0, "n": 1, "a": "w", "b": "x", "value": 0.1}]}, "'a'"),
        ({"n_spins": 2, "fields": [{"m": 0, "a": "x", "value": "big"}]}, "'value'"),
        ({"n_spins": 2, "extra": 1}, "extra"),
    ],
)
def test_parse_errors_name_the_key(doc, key):
    with pytest.raises(HamiltonianParseError, match=key):
        from_document(doc)


def test_m_less_than_n_enforced_on_load():
    doc = {"n_spins": 2, "couplings": [{"m": 1, "n": 0, "a": "x", "b": "y", "value": 0.1}]}
    with pytest.raises(HamiltonianValidationError):
        from_document(doc)


def test_invalid_json_is_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(HamiltonianParseError):
        load(p)
