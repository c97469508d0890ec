import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from hamtomo.pulses import (
    NPE,
    AxisVariant,
    PulseErrorModel,
    environment_sequence,
    global_cancel_sequence,
    ideal_pulse,
    pair_sequence,
    realize_pulses,
    rotation_unitaries,
)
from hamtomo.spin_system import PAULI, PauliAxis

X, Y, Z = PauliAxis.X, PauliAxis.Y, PauliAxis.Z


def test_single_cycle_xy8_layout():
    s = pair_sequence(2, 5, "xx-yy", n_cycles=1, tau=0.01)
    assert s.n_pulses == 8
    assert s.total_time == pytest.approx(0.08)
    assert np.allclose([e.t for e in s.events], (np.arange(8) + 0.5) * 0.01)
    axes = [e.targets[0][1] for e in s.events]
    assert axes == [X, Y, X, Y, Y, X, Y, X]
    assert all(e.targets == ((2, e.targets[0][1]), (5, e.targets[0][1])) for e in s.events)


def test_xy4_layout():
    s = pair_sequence(0, 1, n_cycles=2, tau=0.02, kind="xy4")
    assert s.n_pulses == 8
    assert [e.targets[0][1] for e in s.events] == [X, Y] * 4


@settings(max_examples=30, deadline=None)
@given(n_cycles=st.integers(1, 20), tau=st.floats(1e-4, 0.1))
def test_pulse_count_and_offsets(n_cycles, tau):
    s = pair_sequence(0, 3, "xy-yz", n_cycles, tau)
    assert s.n_pulses == 8 * n_cycles
    assert s.total_time == pytest.approx(8 * n_cycles * tau)
    # first pulse at tau/2, last at T - tau/2
    assert s.events[0].t == pytest.approx(tau / 2)
    assert s.events[-1].t == pytest.approx(s.total_time - tau / 2)
    # palindromic cycle
    cycle = [e.targets for e in s.events[:8]]
    assert cycle == cycle[::-1]


@pytest.mark.parametrize("variant, first, second", [
    ("xx-yy", (X, X), (Y, Y)),
    ("xy-yz", (X, Y), (Y, Z)),
    ("yx-zy", (Y, X), (Z, Y)),
])
def test_variant_axes(variant, first, second):
    s = pair_sequence(4, 1, variant, 1, 0.01)
    # targets sorted ascending, axis order follows (i, j) = (4, 1)
    assert s.events[0].targets == ((1, first[1]), (4, first[0]))
    assert s.events[1].targets == ((1, second[1]), (4, second[0]))


def test_variant_parse():
    assert AxisVariant.parse("XY_YZ") is AxisVariant.XY_YZ
    with pytest.raises(ValueError):
        AxisVariant.parse("zz-xx")


def test_pair_rejects_same_spin():
    with pytest.raises(ValueError):
        pair_sequence(3, 3)


def test_environment_sequence_targets():
    s = environment_sequence(2, 5, n_cycles=1, tau=0.01)
    assert [q for q, _ in s.events[0].targets] == [0, 1, 3, 4]
    assert not s.events[0].cancel


def test_global_cancel_layout():
    s = global_cancel_sequence(1, 3, n_cycles=1, tau=0.01)
    ev = s.events[1]
    assert [q for q, _ in ev.targets] == [0, 1, 2]
    assert ev.cancel == ((1, Y),)


def test_json_dump():
    s = pair_sequence(0, 1, n_cycles=1, tau=0.01)
    doc = json.loads(s.to_json())
    assert len(doc) == 8
    assert doc[0]["targets"] == [{"q": 0, "axis": "x"}, {"q": 1, "axis": "x"}]
    assert "cancel" in json.loads(global_cancel_sequence(0, 2, 1, 0.01).to_json())[0]


def test_truncated_prefix():
    s = pair_sequence(0, 1, n_cycles=5, tau=0.01)
    t = s.truncated(2)
    assert t.events == s.events[:16]
    assert t.total_time == pytest.approx(0.16)


def test_ideal_pulse_is_i_sigma():
    for a in PauliAxis:
        assert np.allclose(ideal_pulse(a), expm(0.5j * np.pi * a.matrix))


@settings(max_examples=30, deadline=None)
@given(v=st.tuples(*[st.floats(-2, 2)] * 3))
def test_rotation_unitaries_match_expm(v):
    v = np.array(v)
    gen = sum(c * PAULI[k] for c, k in zip(v, "xyz"))
    assert np.allclose(rotation_unitaries(v), expm(0.5j * np.pi * gen), atol=1e-10)


def test_npe_realization_is_ideal():
    s = pair_sequence(0, 1, "xy-yz", 2, 0.01)
    real = realize_pulses(s, NPE)
    for e, ev in enumerate(s.events):
        for k, (_, a) in enumerate(ev.slots):
            assert np.allclose(real[e, k], ideal_pulse(a))


def test_sae_infidelity_closed_form():
    eps = 0.05
    u = realize_pulses(pair_sequence(0, 1, n_cycles=1, tau=0.01), PulseErrorModel("SAE", eps))[0, 0]
    infid = 1 - abs(np.trace(ideal_pulse(X).conj().T @ u) / 2) ** 2
    assert infid == pytest.approx(np.sin(np.pi * eps / 2) ** 2, abs=1e-12)
    assert infid == pytest.approx(6.16e-3, abs=1e-5)


def test_rre_tilt_norm():
    s = environment_sequence(0, 6, n_cycles=20, tau=0.01)
    err = PulseErrorModel("RRE", 0.01)
    real = realize_pulses(s, err, rng=3)
    # recover generator from U = cos(theta) I + i sin(theta) n.sigma with theta = pi |v| / 2
    for ev, u_ev in zip(s.events[:10], real[:10]):
        for (_, a), u in zip(ev.slots, u_ev):
            theta = np.arccos(np.clip(np.trace(u).real / 2, -1, 1))
            comps = np.array([np.trace(PAULI[k] @ u).imag / 2 for k in "xyz"]) / np.sin(theta)
            v = comps * 2 * theta / np.pi
            ideal = np.eye(3)[{"x": 0, "y": 1, "z": 2}[a.value]]
            assert np.linalg.norm(v - ideal) == pytest.approx(0.01, rel=1e-6)


def test_rae_bounds():
    s = environment_sequence(0, 4, n_cycles=50, tau=0.01)
    real = realize_pulses(s, PulseErrorModel("RAE", 0.02), rng=1)
    # |1 + delta| * pi/2 is the rotation angle; cos(angle) = Re tr U / 2
    angles = np.arccos(np.clip(np.einsum("...ii->...", real).real / 2, -1, 1))
    deltas = 2 * angles / np.pi - 1
    assert np.all(np.abs(deltas) <= 0.02 + 1e-9)
    assert deltas.std() > 0.005


def test_realization_is_reproducible():
    s = pair_sequence(0, 1, n_cycles=3, tau=0.01)
    err = PulseErrorModel("rre", 0.05)
    assert np.array_equal(realize_pulses(s, err, 7), realize_pulses(s, err, 7))
    assert not np.array_equal(realize_pulses(s, err, 7), realize_pulses(s, err, 8))


@pytest.mark.parametrize("eps", [0.0, 0.01, 0.05])
def test_global_cancel_composite(eps):
    # global pulse then identical focused pulse on spin i: -exp(i pi eps sigma)
    s = global_cancel_sequence(1, 3, n_cycles=1, tau=0.01)
    real = realize_pulses(s, PulseErrorModel("SAE", eps))
    for e, ev in enumerate(s.events):
        axis = ev.cancel[0][1]
        slot_global = [q for q, _ in ev.targets].index(1)
        composite = real[e, -1] @ real[e, slot_global]
        assert np.allclose(composite, -expm(1j * np.pi * eps * axis.matrix), atol=1e-12)


def test_unknown_error_kind():
    with pytest.raises(ValueError):
        PulseErrorModel("XYZ", 0.1)
