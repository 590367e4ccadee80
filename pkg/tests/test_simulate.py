import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from src.errors import MalformedModelError, ValidityDomainError
from src.measurements.povm import BUCKET, distribution_pair, outcome_distribution, rotade_povm
from src.optics.psf import Hypothesis, Scenario
from src.simulate.montecarlo import (
    RunConfig,
    TrialSummary,
    build_likelihood_table,
    decide_hypothesis,
    empirical_error_rate,
    empirical_estimator_variance,
    exact_reference_error,
    mle_separation,
    sample_outcomes,
    trial_rng,
)


def _error_config(**overrides):
    base = dict(scenario=Scenario.from_dimensionless(0.2, 0.2, 0.3), povm=rotade_povm(0.2),
                n_photons=50, n_trials=500, seed=7)
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def aligned_table():
    scenario = Scenario.from_dimensionless(0.0, 0.0, 0.1)
    return build_likelihood_table(rotade_povm(0.0), scenario, points=801, eps_max=0.4)


# -------------------------------------------------------------------
# Sampling
# -------------------------------------------------------------------

def test_trial_streams_are_independent_of_order():
    a = trial_rng(11, 3).random(4)
    trial_rng(11, 2).random(4)
    assert np.array_equal(trial_rng(11, 3).random(4), a)
    assert not np.array_equal(trial_rng(11, 4).random(4), a)


def test_multinomial_counts_follow_distribution():
    probs = np.array([0.2, 0.3, 0.5])
    counts = sample_outcomes(probs, 100_000, trial_rng(5, 0))
    assert counts.sum() == 100_000
    _, p_value = stats.chisquare(counts, probs * 100_000)
    assert p_value > 1e-4


def test_single_dark_click_decides_two_sources():
    s = Scenario.from_dimensionless(0.0, 0.0, 0.3)
    p1, p2 = distribution_pair(rotade_povm(0.0), s)
    counts = np.zeros(len(p1.labels), dtype=int)
    counts[p1.labels.index("rot:2")] = 40
    assert decide_hypothesis(counts, p1, p2) is Hypothesis.H1
    counts[p1.labels.index("rot:1")] = 1
    assert decide_hypothesis(counts, p1, p2) is Hypothesis.H2


def test_record_impossible_under_both_hypotheses():
    with pytest.raises(MalformedModelError):
        decide_hypothesis([1, 1], [0.0, 1.0], [1.0, 0.0])


def test_run_config_validation():
    with pytest.raises(ValidityDomainError):
        _error_config(n_photons=0)
    with pytest.raises(ValidityDomainError):
        _error_config(seed=-1)


def test_summary_record_columns():
    rec = TrialSummary(estimates=np.zeros(2), empirical_error=0.1, predicted={"chernoff_bound": 0.2},
                       flags=("a", "b")).as_record()
    assert rec["flags"] == "a;b"
    assert rec["predicted_chernoff_bound"] == 0.2


# -------------------------------------------------------------------
# Maximum likelihood
# -------------------------------------------------------------------

def test_mle_recovers_separation_from_expected_counts(aligned_table):
    truth = outcome_distribution(rotade_povm(0.0), Scenario.from_dimensionless(0.0, 0.0, 0.3), Hypothesis.H2)
    est = mle_separation(truth.probs * 1e6, table=aligned_table)
    assert not est.at_boundary
    assert est.eps_hat == pytest.approx(0.3, abs=1e-3)


def test_mle_without_clicks_sits_on_boundary(aligned_table):
    labels = rotade_povm(0.0).labels
    counts = np.zeros(len(labels))
    counts[labels.index("rot:2")] = 500
    est = mle_separation(counts, table=aligned_table)
    assert est.at_boundary
    assert est.eps_hat == 0.0


def test_mle_needs_a_model():
    with pytest.raises(ValidityDomainError):
        mle_separation(np.array([1, 2, 0]))


# -------------------------------------------------------------------
# Reproducibility
# -------------------------------------------------------------------

def test_error_runs_are_reproducible():
    first = empirical_error_rate(_error_config())
    again = empirical_error_rate(_error_config())
    assert np.array_equal(first.estimates, again.estimates)
    assert first.empirical_error == again.empirical_error


def test_chunking_and_processes_do_not_change_results():
    serial = empirical_error_rate(_error_config())
    chunked = empirical_error_rate(_error_config(chunk_size=64))
    pooled = empirical_error_rate(_error_config(chunk_size=100, max_procs=2))
    assert np.array_equal(serial.estimates, chunked.estimates)
    assert np.array_equal(serial.estimates, pooled.estimates)


def test_estimator_runs_are_reproducible(aligned_table):
    cfg = RunConfig(scenario=Scenario.from_dimensionless(0.0, 0.0, 0.1), povm=rotade_povm(0.0),
                    n_photons=1000, n_trials=200, seed=3)
    a = empirical_estimator_variance(cfg, aligned_table)
    b = empirical_estimator_variance(replace(cfg, chunk_size=30), aligned_table)
    assert np.array_equal(a.estimates, b.estimates)
    assert a.empirical_variance == b.empirical_variance


# -------------------------------------------------------------------
# Error-rate experiments
# -------------------------------------------------------------------

def test_no_errors_reports_rule_of_three():
    cfg = RunConfig(scenario=Scenario.from_dimensionless(0.0, 0.0, 3.0), povm=rotade_povm(0.0),
                    n_photons=20, n_trials=200, seed=1)
    summary = empirical_error_rate(cfg)
    assert summary.empirical_error == 0.0
    assert summary.upper_bound == pytest.approx(3.0 / 200)
    assert "no_errors_observed" in summary.flags


def test_predictions_are_attached():
    summary = empirical_error_rate(_error_config(n_photons=1, n_trials=100))
    assert "single_shot_error" in summary.predicted
    assert summary.predicted["chernoff_bound"] <= 0.5


@pytest.mark.slow
def test_single_shot_error_matches_prediction():
    summary = empirical_error_rate(_error_config(n_photons=1, n_trials=20_000))
    expected = summary.predicted["single_shot_error"]
    sd = math.sqrt(expected * (1 - expected) / 20_000)
    assert abs(summary.empirical_error - expected) <= 4 * sd


@pytest.mark.slow
def test_error_rate_matches_exact_enumeration():
    cfg = RunConfig(scenario=Scenario.from_dimensionless(0.3, 0.3, 0.25), povm=rotade_povm(0.3),
                    n_photons=20, n_trials=20_000, seed=11)
    exact = exact_reference_error(cfg)
    summary = empirical_error_rate(cfg)
    sd = math.sqrt(exact * (1 - exact) / cfg.n_trials)
    assert abs(summary.empirical_error - exact) <= 4 * sd
    assert exact <= summary.predicted["chernoff_bound"] * (1 + 1e-9)


@pytest.mark.slow
def test_rotade_error_exponent_at_two_hundred_photons():
    cfg = RunConfig(scenario=Scenario.from_dimensionless(0.3, 0.3, 0.25), povm=rotade_povm(0.3),
                    n_photons=200, n_trials=100_000, seed=7)
    summary = empirical_error_rate(cfg)
    xi = summary.predicted["chernoff_exponent"]
    assert xi == pytest.approx(0.009906, rel=1e-3)
    exact = exact_reference_error(cfg)
    sd = math.sqrt(exact * (1 - exact) / cfg.n_trials)
    assert abs(summary.empirical_error - exact) <= 4 * sd
    assert summary.predicted["observed_exponent"] == pytest.approx(-math.log(exact) / 200, rel=0.03)

    # the sub-exponential prefactor keeps the finite-n rate above ξ, closing as n grows
    rates = [-math.log(exact_reference_error(replace(cfg, n_photons=n))) / n for n in (100, 200, 400, 800)]
    assert all(r > xi for r in rates)
    assert rates == sorted(rates, reverse=True)
    assert rates[-1] - xi < 0.6 * (rates[1] - xi)


# -------------------------------------------------------------------
# Estimator variance
# -------------------------------------------------------------------

@pytest.mark.slow
def test_mle_variance_near_cramer_rao_bound(aligned_table):
    trials = 2000
    cfg = RunConfig(scenario=Scenario.from_dimensionless(0.0, 0.0, 0.1), povm=rotade_povm(0.0),
                    n_photons=10_000, n_trials=trials, seed=2021)
    summary = empirical_estimator_variance(cfg, aligned_table)
    ratio = summary.empirical_variance / summary.predicted["cramer_rao_bound"]
    band = 4.5 * math.sqrt(2.0 / trials)
    assert 1 - band <= ratio <= 1 + band
    assert not any(f.startswith("boundary_hits") for f in summary.flags)


@pytest.mark.slow
def test_mle_variance_scales_inversely_with_photons():
    scenario = Scenario.from_dimensionless(0.0, 0.0, 0.2)
    povm = rotade_povm(0.0)
    table = build_likelihood_table(povm, scenario, points=801, eps_max=0.5)
    variances = []
    for n in (1000, 10_000):
        cfg = RunConfig(scenario=scenario, povm=povm, n_photons=n, n_trials=4000, seed=99)
        variances.append(empirical_estimator_variance(cfg, table).empirical_variance)
    assert variances[0] / variances[1] == pytest.approx(10.0, rel=0.2)


def test_bucket_counts_are_sampled():
    s = Scenario.from_dimensionless(0.0, 0.0, 0.5)
    p2 = outcome_distribution(rotade_povm(0.0), s, Hypothesis.H2)
    counts = sample_outcomes(p2, 200_000, trial_rng(0, 0))
    assert counts[p2.labels.index(BUCKET)] > 0
