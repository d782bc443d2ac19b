"""Adaptive-threshold neuron: transform, threshold dynamics, spike trains."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fptsim.errors import ParameterError, SequencingError
from fptsim.exact import expected_proposals, sample_batch
from fptsim.model import Orientation
from fptsim.neuron import (
    NeuronParams,
    SpikeTrain,
    _stage_problem,
    apply_spike,
    initial_state,
    inter_spike_intervals,
    pooled_isi_cv,
    simulate_spike_train,
    simulate_trials,
    summarize_trains,
    threshold_value,
    transform_neuron,
    write_spike_trains_csv,
)


# --- adaptive threshold --------------------------------------------------------


def test_threshold_decay_closed_form():
    p = NeuronParams()
    s = initial_state(p)
    assert threshold_value(s, p, 0.0) == pytest.approx(2.0, abs=1e-12)
    assert threshold_value(s, p, 1.0) == pytest.approx(1.0 + math.exp(-1.0), abs=1e-12)
    assert threshold_value(s, p, 50.0) == pytest.approx(p.theta0, abs=1e-12)


def test_threshold_rejects_times_before_last_spike():
    p = NeuronParams()
    s = apply_spike(initial_state(p), p, 0.5)
    with pytest.raises(SequencingError):
        threshold_value(s, p, 0.25)


def test_spike_jump_size():
    p = NeuronParams(delta=0.7, tau1=2.0)
    s0 = initial_state(p)
    t = 0.5
    level = threshold_value(s0, p, t)
    s1 = apply_spike(s0, p, t)
    assert s1.last_spike == t
    assert s1.theta_plus == pytest.approx(level + 0.7 / 2.0, abs=1e-12)
    assert threshold_value(s1, p, t) == pytest.approx(level + 0.35, abs=1e-12)


def test_params_validation():
    with pytest.raises(ParameterError):
        NeuronParams(tau_m=0.0)
    with pytest.raises(ParameterError):
        NeuronParams(sigma=0.0)
    with pytest.raises(ParameterError):
        NeuronParams(tau1=-1.0)
    with pytest.raises(ParameterError):
        NeuronParams(v0=0.0)
    with pytest.raises(ParameterError):
        NeuronParams(v_reset=-0.5)
    with pytest.raises(ParameterError):
        NeuronParams(theta0=0.0, v0=1.0)  # initial threshold not above v0


def test_drift_coefficients():
    assert NeuronParams(I=0.0).drift_coefficients() == pytest.approx((1.5, -1.0), abs=1e-12)
    assert NeuronParams(I=20.0).drift_coefficients() == pytest.approx((-18.5, -1.0), abs=1e-12)


# --- log-transformed interval problem ------------------------------------------


def test_transform_first_interval_geometry():
    p = NeuronParams()
    sde, th, gammas = transform_neuron(p)
    assert sde.x0 == pytest.approx(0.0, abs=1e-12)  # -ln(v0) with v0 = 1
    assert th.orientation is Orientation.BELOW_START
    assert th.beta(0.0) == pytest.approx(-math.log(2.0), abs=1e-12)
    # d/dt of -ln(theta(t)) at t=0: (theta(0) - theta0) / (tau1 * theta(0))
    assert th.beta_prime(0.0) == pytest.approx(0.5, abs=1e-12)
    assert th.sup_slope == pytest.approx(0.5, abs=1e-12)
    assert th.inf_slope == 0.0
    c, d = p.drift_coefficients()
    for x in (-0.5, 0.0, 1.0, 3.0):
        assert sde.alpha(x) == pytest.approx(c + d * math.exp(-x), abs=1e-12)
        assert sde.alpha_prime(x) == pytest.approx(-d * math.exp(-x), abs=1e-12)


@pytest.mark.parametrize("current", [0.0, 20.0])
def test_stage_rate_sum_is_admissible_on_a_dense_grid(current):
    p = NeuronParams(I=current)
    sde, th, gammas = transform_neuron(p)
    for t in np.linspace(0.0, 7.0, 120):
        lo = th.beta(float(t))
        for x in np.linspace(lo, lo + 3.0, 40):
            v = gammas.evaluate(float(t), float(x))  # raises if outside [0, kappa]
            assert v >= 0.0


def test_stage_acceptance_identity_at_strong_current():
    p = NeuronParams(I=20.0)
    prob = _stage_problem(
        p, theta_plus=2.0, x_start=0.0, offset=0.0, time_shift=0.0,
        prop_horizon=7.0, max_proposals=10**6,
    )
    target = expected_proposals(prob)
    draws = sample_batch(prob, 3000, 70)
    assert all(d.finite for d in draws)
    counts = np.array([d.proposals for d in draws], dtype=float)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - target) < 3.0 * se


# --- spike trains ---------------------------------------------------------------


def test_spike_train_validation():
    p = NeuronParams()
    with pytest.raises(ParameterError):
        SpikeTrain(times=(0.5, 0.5), horizon=1.0, params=p)
    with pytest.raises(ParameterError):
        SpikeTrain(times=(-0.1,), horizon=1.0, params=p)
    with pytest.raises(ParameterError):
        SpikeTrain(times=(1.0,), horizon=1.0, params=p)


def test_simulated_trains_are_well_formed_and_deterministic():
    p = NeuronParams(I=20.0)
    trains = simulate_trials(p, 2.0, 5, 71)
    again = simulate_trials(p, 2.0, 5, 71)
    assert [t.times for t in trains] == [t.times for t in again]
    assert any(t.count > 0 for t in trains)
    for train in trains:
        assert all(b > a for a, b in zip(train.times, train.times[1:]))
        assert all(0.0 <= t < 2.0 for t in train.times)


def test_simulate_trials_worker_invariance():
    p = NeuronParams(I=20.0)
    a = simulate_trials(p, 1.0, 6, 72)
    b = simulate_trials(p, 1.0, 6, 72, workers=3)
    assert [t.times for t in a] == [t.times for t in b]


def test_stronger_current_spikes_more():
    quiet = simulate_trials(NeuronParams(I=0.0), 2.0, 8, 73)
    driven = simulate_trials(NeuronParams(I=20.0), 2.0, 8, 73)
    mean_quiet = np.mean([t.count for t in quiet])
    mean_driven = np.mean([t.count for t in driven])
    assert mean_driven > mean_quiet + 5.0


def test_leaky_membrane_also_runs():
    p = NeuronParams(tau_m=1.0, I=20.0)
    train = simulate_spike_train(p, 1.0, np.random.default_rng(74))
    assert train.horizon == 1.0  # smoke: chain runs under a positive tau_m


# --- interval statistics --------------------------------------------------------


def test_inter_spike_intervals_are_anchored_at_zero():
    p = NeuronParams()
    train = SpikeTrain(times=(1.0, 3.0), horizon=4.0, params=p)
    np.testing.assert_allclose(inter_spike_intervals(train), [1.0, 2.0])
    empty = SpikeTrain(times=(), horizon=4.0, params=p)
    assert inter_spike_intervals(empty).size == 0


def test_pooled_isi_cv_hand_value():
    p = NeuronParams()
    trains = [
        SpikeTrain(times=(1.0, 3.0), horizon=4.0, params=p),
        SpikeTrain(times=(2.0,), horizon=4.0, params=p),
    ]
    pooled = np.array([1.0, 2.0, 2.0])
    expected = pooled.std(ddof=1) / pooled.mean()
    assert pooled_isi_cv(trains) == pytest.approx(expected, rel=1e-12)


def test_pooled_isi_cv_degenerate_cases():
    p = NeuronParams()
    assert math.isnan(pooled_isi_cv([]))
    one = SpikeTrain(times=(1.0,), horizon=4.0, params=p)
    assert math.isnan(pooled_isi_cv([one]))


def test_summarize_trains_counts():
    p = NeuronParams()
    trains = [
        SpikeTrain(times=(1.0, 3.0), horizon=4.0, params=p),
        SpikeTrain(times=(), horizon=4.0, params=p),
    ]
    s = summarize_trains(trains)
    assert s["n_trials"] == 2
    assert s["mean_count"] == 1.0
    assert s["total_spikes"] == 2
    assert s["horizon"] == 4.0


def test_spike_train_csv_format(tmp_path):
    p = NeuronParams()
    trains = [
        SpikeTrain(times=(0.25, 1.5), horizon=4.0, params=p),
        SpikeTrain(times=(), horizon=4.0, params=p),
        SpikeTrain(times=(0.125,), horizon=4.0, params=p),
    ]
    path = tmp_path / "spikes.csv"
    write_spike_trains_csv(trains, path)
    assert path.read_text() == (
        "trial,spike_index,time\n"
        "0,0,0.25\n"
        "0,1,1.5\n"
        "2,0,0.125\n"
    )
