import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamtomo.evolution import product_state, pure_density, reduced_density
from hamtomo.measurement import MeasSetting, ShotRecord, outcome_probabilities, outcome_probability, sample_shots


def test_probability_of_prepared_state_is_one():
    s = MeasSetting(("+", "I"), ("+", "I"))
    rho = reduced_density(product_state(3, {0: "+", 2: "I"}), [0, 2])
    assert outcome_probability(rho, s) == pytest.approx(1.0)


def test_orthogonal_outcome_is_zero():
    rho = pure_density(product_state(1, {0: "0"}))
    assert outcome_probability(rho, MeasSetting(("0",), ("1",))) == pytest.approx(0.0)
    assert outcome_probability(rho, MeasSetting(("0",), ("+",))) == pytest.approx(0.5)


def test_first_label_is_first_target():
    rho = pure_density(product_state(2, {0: "1"}))  # |10>
    assert outcome_probability(rho, MeasSetting(("0", "0"), ("1", "0"))) == pytest.approx(1.0)
    assert outcome_probability(rho, MeasSetting(("0", "0"), ("0", "1"))) == pytest.approx(0.0)


def test_rotated_setting_uses_r_dagger():
    r = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = MeasSetting(("0",), ("0",), (r,))
    assert np.allclose(s.prepared_states()[0], r.conj().T @ [1, 0])


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        outcome_probability(np.eye(2) / 2, MeasSetting(("0", "0"), ("0", "0")))


def test_bad_label():
    with pytest.raises(ValueError):
        MeasSetting(("x",), ("0",))


def test_vectorized_probabilities():
    rhos = np.stack([pure_density(product_state(1, {0: lab})) for lab in ("0", "1", "+")])
    assert np.allclose(outcome_probabilities(rhos, MeasSetting(("0",), ("0",))), [1, 0, 0.5])


@settings(max_examples=50, deadline=None)
@given(p=st.floats(0, 1), n=st.integers(1, 500), seed=st.integers(0, 2**32 - 1))
def test_sample_shots_range_and_grid(p, n, seed):
    p_m, sigma = sample_shots(np.array([p]), n, seed)
    assert 0 <= p_m[0] <= 1
    assert p_m[0] * n == pytest.approx(round(p_m[0] * n))
    assert sigma[0] == pytest.approx(np.sqrt(p_m[0] * (1 - p_m[0]) / n))


def test_binomial_statistics():
    p, n = 0.3, 100
    p_m, _ = sample_shots(np.full(100_000, p), n, 0)
    assert p_m.mean() == pytest.approx(p, abs=1e-3)
    assert p_m.std() == pytest.approx(np.sqrt(p * (1 - p) / n), rel=0.02)


def test_certain_outcomes_have_zero_sigma():
    p_m, sigma = sample_shots(np.array([0.0, 1.0]), 100, 1)
    assert np.array_equal(p_m, [0.0, 1.0])
    assert np.array_equal(sigma, [0.0, 0.0])


def test_record_csv_round_trip(tmp_path):
    rec = ShotRecord.sample(np.linspace(0.08, 4, 50), np.full(50, 0.4), 100, 3, "x")
    path = tmp_path / "curve.csv"
    rec.to_csv(path, p_fit=np.full(50, 0.41))
    back = ShotRecord.from_csv(path)
    assert np.array_equal(back.times, rec.times)
    assert np.array_equal(back.p_m, rec.p_m)
    assert np.array_equal(back.p_true, rec.p_true)
    header = path.read_text().splitlines()[0]
    assert header == "T,p_true,p_m,sigma_m,n_shots,p_fit"


def test_resampled_keeps_grid():
    rec = ShotRecord.sample(np.arange(10.0), np.full(10, 0.5), 100, 0)
    rep = rec.resampled(1)
    assert np.array_equal(rep.times, rec.times)
    assert not np.array_equal(rep.p_m, rec.p_m)
