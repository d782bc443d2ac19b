"""Rejection sampler: bridge recursion, thinning, and end-to-end law oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fptsim.bm_fpt import inverse_gaussian_cdf
from fptsim.errors import (
    AssumptionViolation,
    ConfigurationError,
    NonTerminationError,
    ParameterError,
)
from fptsim.exact import (
    BridgeState,
    ExactProblem,
    Proposal,
    bridge_step,
    choose_split_count,
    default_proposal,
    expected_proposals,
    iteration_bound_linear,
    run_thinning_trial,
    sample_batch,
    sample_exact,
    sample_exact_below,
    sample_exact_split,
)
from fptsim.model import (
    Orientation,
    UnitDiffusionSDE,
    linear_threshold,
    make_gamma_pair,
)
from fptsim.problems import example1_problem
from fptsim.stats import ks_one_sample, ks_two_sample


def _unit_sde(c: float, x0: float = 0.0) -> UnitDiffusionSDE:
    return UnitDiffusionSDE(
        alpha=lambda x: c,
        alpha_prime=lambda x: 0.0,
        A=lambda x: c * x,
        x0=x0,
    )


def _problem(c: float, a: float, b: float, orientation: Orientation, kappa: float,
             max_proposals: int = 10**6) -> ExactProblem:
    sde = _unit_sde(c)
    th = linear_threshold(a, b, orientation)
    gammas = make_gamma_pair(sde, th).with_kappa(kappa)
    return ExactProblem(
        sde=sde, threshold=th, gammas=gammas,
        proposal=default_proposal(th), max_proposals=max_proposals,
    )


# --- bridge recursion --------------------------------------------------------


def test_bridge_step_conditional_moments():
    rng = np.random.default_rng(31)
    state = BridgeState(l=np.array([1.0, 0.0, 0.0]), E0=0.2, E1=0.5)
    tau = 1.0
    n = 100_000
    out = np.empty((n, 3))
    for i in range(n):
        out[i] = bridge_step(state, tau, rng.standard_normal(3)).l
    c1 = (tau - 0.5) / (tau - 0.2)
    c2_sq = (tau - 0.5) * (0.5 - 0.2) / (tau - 0.2)
    se_mean = math.sqrt(c2_sq / n)
    np.testing.assert_allclose(out.mean(axis=0), [c1, 0.0, 0.0], atol=3.1 * se_mean)
    se_var = c2_sq * math.sqrt(2.0 / n)
    np.testing.assert_allclose(out.var(axis=0, ddof=1), c2_sq, atol=3.1 * se_var)


def test_bridge_step_validates_inputs():
    with pytest.raises(ParameterError):
        BridgeState(l=np.zeros(2), E0=0.0, E1=1.0)
    with pytest.raises(ParameterError):
        BridgeState(l=np.zeros(3), E0=2.0, E1=1.0)
    state = BridgeState(l=np.zeros(3), E0=0.0, E1=2.0)
    with pytest.raises(ParameterError):
        bridge_step(state, 1.0, np.zeros(3))  # pin before the current event


def test_bridge_step_at_the_pin_collapses_to_zero():
    state = BridgeState(l=np.array([0.7, -0.2, 0.1]), E0=0.3, E1=1.0)
    stepped = bridge_step(state, 1.0, np.random.default_rng(0).standard_normal(3))
    np.testing.assert_allclose(stepped.l, 0.0, atol=1e-15)


# --- thinning law ------------------------------------------------------------


@pytest.mark.parametrize(
    "intensity,horizon,integral",
    [
        (lambda t: 0.37, 2.0, 0.74),
        (lambda t: 0.2 + 0.3 * t, 2.0, 1.0),
    ],
)
def test_thinning_reproduces_void_probability(intensity, horizon, integral):
    rng = np.random.default_rng(32)
    n = 100_000
    zeros = sum(run_thinning_trial(intensity, horizon, 1.5, rng) == 0 for i in range(n))
    p = math.exp(-integral)
    se = math.sqrt(p * (1.0 - p) / n)
    assert abs(zeros / n - p) < 3.0 * se


def test_thinning_rejects_intensity_above_kappa():
    rng = np.random.default_rng(33)
    with pytest.raises(AssumptionViolation):
        for _ in range(200):
            run_thinning_trial(lambda t: 2.0, 1.0, 1.0, rng)


# --- end-to-end closed-form laws --------------------------------------------


def test_zero_drift_above_start_reduces_to_the_proposal_law():
    # gamma1 = gamma2 = 0, so every proposal is accepted and the accepted law
    # is the Brownian passage law to the falling line itself
    prob = _problem(0.0, -1.0, 0.5, Orientation.ABOVE_START, kappa=1.0)
    draws = sample_batch(prob, 20000, 41)
    assert all(d.proposals == 1 for d in draws)
    x = np.array([d.time for d in draws])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, 0.5, 0.25))
    assert p > 0.01


def test_constant_drift_to_constant_level_is_inverse_gaussian():
    # dX = c dt + dB to level b: tau ~ IG(b/c, b^2); exercises proposals,
    # thinning and acceptance with a non-trivial gamma2 = c^2/2
    c, b = 1.0, 1.0
    prob = _problem(c, 0.0, b, Orientation.ABOVE_START, kappa=c * c / 2.0)
    draws = sample_batch(prob, 20000, 42)
    x = np.array([d.time for d in draws])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, b / c, b * b))
    assert p > 0.01
    assert any(d.proposals > 1 for d in draws)


def test_below_start_zero_drift_matches_reflected_line_law():
    # BM to the rising line -1 + 0.5 t from below: by symmetry the law is the
    # passage of BM to the falling line 1 - 0.5 t, i.e. IG(2, 1)
    prob = _problem(0.0, 0.5, -1.0, Orientation.BELOW_START, kappa=1.0)
    draws = [sample_exact_below(prob, np.random.default_rng(100 + i)) for i in range(20000)]
    x = np.array([d.time for d in draws])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, 2.0, 1.0))
    assert p > 0.01


def test_example1_acceptance_identity():
    prob = example1_problem()
    target = expected_proposals(prob)
    assert target == pytest.approx(math.exp((1.6 * 0.5 - math.cos(0.5)) - (0.0 - 1.0)), rel=1e-12)
    draws = sample_batch(prob, 4000, 43)
    counts = np.array([d.proposals for d in draws], dtype=float)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - target) < 3.0 * se


def test_proposal_budget_is_generous_enough_in_practice():
    bound = iteration_bound_linear(-1.0, 0.5, 6.48)
    prob = example1_problem(max_proposals=math.ceil(100 * bound))
    draws = sample_batch(prob, 10000, 44)
    assert len(draws) == 10000  # no NonTerminationError raised


def test_max_proposals_exhaustion_raises():
    prob = example1_problem(max_proposals=1)
    with pytest.raises(NonTerminationError):
        sample_batch(prob, 50, 45)


def test_kappa_too_small_is_caught_not_silently_biased():
    prob = example1_problem()
    lowered = ExactProblem(
        sde=prob.sde,
        threshold=prob.threshold,
        gammas=prob.gammas.with_kappa(0.5),
        proposal=prob.proposal,
        max_proposals=prob.max_proposals,
    )
    with pytest.raises(AssumptionViolation):
        sample_batch(lowered, 200, 46)


# --- batching ---------------------------------------------------------------


def test_sample_batch_worker_invariance():
    prob = example1_problem()
    a = sample_batch(prob, 60, 47)
    b = sample_batch(prob, 60, 47, workers=4)
    assert a == b


def test_sample_batch_key_prefix_decorrelates():
    prob = example1_problem()
    a = sample_batch(prob, 10, 47)
    b = sample_batch(prob, 10, 47, key_prefix=(9,))
    assert a != b


# --- space splitting ---------------------------------------------------------


def test_split_preserves_the_law():
    prob = example1_problem()
    base = np.array([d.time for d in sample_batch(prob, 8000, 48)])
    for k in (2, 4):
        split = np.array([d.time for d in sample_batch(prob, 8000, 48, split=k)])
        d, p = ks_two_sample(base, split)
        assert p > 0.01


def test_split_requires_above_start_linear():
    prob = _problem(0.0, 0.5, -1.0, Orientation.BELOW_START, kappa=1.0)
    with pytest.raises(ConfigurationError):
        sample_exact_split(prob, 2, np.random.default_rng(49))
    with pytest.raises(ParameterError):
        sample_exact_split(example1_problem(), 0, np.random.default_rng(50))


def test_split_reduces_proposals_for_far_thresholds():
    far = example1_problem(b=3.0)
    k = choose_split_count(-1.0, 3.0, far.gammas.kappa)
    assert k > 1
    plain_mean = expected_proposals(far)
    draws = sample_batch(far, 400, 51, split=k)
    mean_total = np.mean([d.proposals for d in draws])
    assert mean_total < plain_mean
    assert mean_total <= k * math.e


# --- closed forms -------------------------------------------------------------


def test_iteration_bound_linear_formula():
    a, b, kappa = -1.0, 0.5, 6.48
    expected = math.exp(a * b - a * b * math.sqrt(1.0 + 2.0 * kappa / (a * a)))
    got = iteration_bound_linear(a, b, kappa)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(3.928, abs=5e-3)


def test_expected_proposals_accounts_for_reference_drift():
    c, b, g = 1.0, 1.0, 0.5
    sde = _unit_sde(c)
    th = linear_threshold(0.0, b, Orientation.ABOVE_START)
    gammas = make_gamma_pair(sde, th, reference_drift=g).with_kappa(1.0)
    prob = ExactProblem(sde=sde, threshold=th, gammas=gammas,
                        proposal=Proposal("linear"))
    manual = math.exp((c * b - g * b) - 0.0)
    assert expected_proposals(prob) == pytest.approx(manual, rel=1e-12)


def test_proposal_kind_validation():
    with pytest.raises(ConfigurationError):
        Proposal("bogus")
    with pytest.raises(ConfigurationError):
        Proposal("curvy")  # needs CurvyParams
