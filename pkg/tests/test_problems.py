"""Preconfigured problems and the name-based problem registry."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fptsim.bm_fpt import inverse_gaussian_cdf
from fptsim.errors import ConfigurationError, ParameterError
from fptsim.exact import expected_proposals, sample_batch
from fptsim.model import Orientation
from fptsim.problems import (
    DRIFT_REGISTRY,
    THRESHOLD_REGISTRY,
    build_custom_problem,
    example1_kappa,
    example1_problem,
    example2_kappa,
    example2_problem,
    exponential_threshold,
    sinusoidal_sde,
)
from fptsim.stats import ks_one_sample


def test_example1_kappa_closed_form():
    K, a = 1.6, -1.0
    manual = -a * (K + 1.0) + ((K + 1.0) ** 2 + 1.0) / 2.0
    assert example1_kappa() == pytest.approx(manual, rel=1e-15)
    assert example1_kappa() == pytest.approx(6.48, rel=1e-12)


def test_example2_kappa_closed_form():
    K, a, b = 1.6, 1.0, 1.0
    manual = a * b * (K + math.sin(a)) + ((K + 1.0) ** 2 + 1.0) / 2.0
    assert example2_kappa() == pytest.approx(manual, rel=1e-15)
    assert example2_kappa() == pytest.approx(6.321470984807896, rel=1e-12)


def test_example1_problem_wiring():
    prob = example1_problem()
    assert prob.threshold.linear == (-1.0, 0.5)
    assert prob.threshold.orientation is Orientation.ABOVE_START
    assert prob.proposal.kind == "linear"
    assert prob.gammas.kappa == pytest.approx(example1_kappa(), rel=1e-15)
    assert prob.sde.x0 == 0.0
    assert prob.max_proposals == 10**6


def test_example1_expected_proposals_value():
    # exp(A(0.5) - A(0)) with A(x) = K*x - cos(x)
    assert expected_proposals(example1_problem()) == pytest.approx(
        2.515363782220287, abs=1e-9
    )


def test_example2_problem_wiring():
    prob = example2_problem()
    assert prob.threshold.linear is None
    assert prob.threshold.orientation is Orientation.ABOVE_START
    assert prob.threshold.beta(0.0) == pytest.approx(1.0, rel=1e-15)
    assert prob.proposal.kind == "curvy"
    cp = prob.proposal.curvy
    assert cp is not None
    assert cp.epsilon == 2.0**-4
    assert cp.r == -1.0  # steepest threshold slope, attained at t = 0
    assert cp.horizon == 50.0
    assert prob.gammas.kappa == pytest.approx(example2_kappa(), rel=1e-15)


def test_sinusoidal_sde_antiderivative_consistency():
    sde = sinusoidal_sde()
    for x in (-1.0, 0.0, 0.4, 2.0):
        assert sde.alpha(x) == pytest.approx(1.6 + math.sin(x), rel=1e-15)
        assert sde.alpha_prime(x) == pytest.approx(math.cos(x), rel=1e-15)
        assert sde.A(x) == pytest.approx(1.6 * x - math.cos(x), rel=1e-14)


def test_registry_names():
    assert set(DRIFT_REGISTRY) == {"sinusoidal", "constant", "zero"}
    assert set(THRESHOLD_REGISTRY) == {"linear", "constant", "exponential"}


def test_build_custom_zero_drift_falling_line_matches_ig():
    prob = build_custom_problem("zero", {}, "linear", {"a": -0.5, "b": 1.0})
    assert prob.threshold.orientation is Orientation.ABOVE_START
    x = np.array([d.time for d in sample_batch(prob, 10000, 60)])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, 2.0, 1.0))
    assert p > 0.01


def test_build_custom_constant_drift_to_level_matches_ig():
    prob = build_custom_problem("constant", {"c": 1.0}, "constant", {"level": 1.0})
    x = np.array([d.time for d in sample_batch(prob, 10000, 61)])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, 1.0, 1.0))
    assert p > 0.01


def test_build_custom_infers_below_start():
    prob = build_custom_problem("zero", {}, "linear", {"a": 0.5, "b": -1.0})
    assert prob.threshold.orientation is Orientation.BELOW_START
    x = np.array([d.time for d in sample_batch(prob, 10000, 62)])
    d, p = ks_one_sample(x, lambda t: inverse_gaussian_cdf(t, 2.0, 1.0))
    assert p > 0.01


def test_build_custom_rejects_unknown_names_and_bad_params():
    with pytest.raises(ConfigurationError):
        build_custom_problem("ornstein", {}, "linear", {"a": -1.0, "b": 0.5})
    with pytest.raises(ConfigurationError):
        build_custom_problem("zero", {}, "parabola", {})
    with pytest.raises(ConfigurationError):
        build_custom_problem("constant", {"speed": 2.0}, "constant", {"level": 1.0})
    with pytest.raises(ConfigurationError):
        build_custom_problem("zero", {}, "linear", {"a": -1.0})  # missing b
    with pytest.raises(ConfigurationError):
        build_custom_problem("zero", {}, "constant", {"level": 0.0})  # starts at x0


def test_example_builders_reject_wrong_side_starts():
    with pytest.raises(ParameterError):
        example1_problem(b=0.0)
    with pytest.raises(ParameterError):
        example2_problem(a=-1.0)


def test_exponential_threshold_slope_bounds():
    th = exponential_threshold(1.0, 1.0)
    assert th.inf_slope == pytest.approx(-1.0, rel=1e-15)
    assert th.sup_slope == pytest.approx(0.0, abs=1e-15)
    assert th.beta(2.0) == pytest.approx(math.exp(-2.0), rel=1e-12)
