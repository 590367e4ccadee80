# src/simulate/montecarlo.py
"""
Monte Carlo photon records.

Every trial draws from its own stream SeedSequence(seed, spawn_key=(trial,)), so
chunked process-pool runs reproduce the serial result bit for bit regardless of
chunk size or completion order.
"""

import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import special
from tqdm import tqdm

from src.analysis.discrimination import (
    chernoff_exponent_classical,
    error_rates_from,
    exact_error_probability,
)
from src.analysis.estimation import cfi_matrix
from src.config import simulation
from src.errors import MalformedModelError, ValidityDomainError
from src.logger import event, get_logger, timing
from src.measurements.povm import (
    OutcomeDistribution,
    Povm,
    Representation,
    distribution_pair,
    outcome_distribution,
)
from src.optics.psf import Hypothesis, Scenario
from src.optics.qubit_model import StateConvention

logger = get_logger(__name__)

SHOW_PROGRESS = os.getenv("CI", "false").lower() != "true" and sys.stderr.isatty()


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario
    povm: Povm
    n_photons: int
    n_trials: int
    seed: int = 0
    representation: Representation = Representation.FULL_MODEL
    convention: StateConvention = StateConvention.SECOND_ORDER
    max_procs: int = 1
    chunk_size: Optional[int] = None

    def __post_init__(self):
        if self.n_photons < 1 or self.n_trials < 1:
            raise ValidityDomainError("n_photons and n_trials must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidityDomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class TrialSummary:
    estimates: np.ndarray = field(repr=False)
    empirical_error: Optional[float] = None
    standard_error: Optional[float] = None
    upper_bound: Optional[float] = None
    empirical_variance: Optional[float] = None
    predicted: Dict[str, float] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.empirical_error is not None and not 0.0 <= self.empirical_error <= 1.0:
            raise ValidityDomainError(f"empirical error {self.empirical_error} outside [0, 1]")

    def as_record(self) -> Dict[str, Any]:
        rec = {
            "empirical_error": self.empirical_error,
            "standard_error": self.standard_error,
            "upper_bound": self.upper_bound,
            "empirical_variance": self.empirical_variance,
            "flags": ";".join(self.flags),
        }
        rec.update({f"predicted_{k}": v for k, v in sorted(self.predicted.items())})
        return rec


@dataclass(frozen=True)
class MleEstimate:
    eps_hat: float
    at_boundary: bool


# -------------------------------------------------------------------
# Sampling and decisions
# -------------------------------------------------------------------

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def sample_outcomes(dist, n: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts over the distribution's labels, summing to n."""
    probs = np.asarray(dist.probs if isinstance(dist, OutcomeDistribution) else dist, dtype=float)
    return rng.multinomial(n, probs / probs.sum())


def decide_hypothesis(counts, p1, p2) -> Hypothesis:
    """Likelihood-ratio decision with equal priors; ties go to H1."""
    c = np.asarray(counts, dtype=float)
    a = p1.probs if isinstance(p1, OutcomeDistribution) else np.asarray(p1)
    b = p2.probs if isinstance(p2, OutcomeDistribution) else np.asarray(p2)
    l1 = float(np.sum(special.xlogy(c, a)))
    l2 = float(np.sum(special.xlogy(c, b)))
    if math.isinf(l1) and math.isinf(l2):
        raise MalformedModelError("observed record has zero probability under both hypotheses")
    return Hypothesis.H2 if l2 > l1 else Hypothesis.H1


# -------------------------------------------------------------------
# Maximum likelihood
# -------------------------------------------------------------------

@dataclass(frozen=True)
class LikelihoodTable:
    grid: np.ndarray
    probs: np.ndarray = field(repr=False)  # (grid, outcomes)


def build_likelihood_table(povm: Povm, scenario: Scenario, representation=Representation.FULL_MODEL,
                           convention=StateConvention.SECOND_ORDER, points: Optional[int] = None,
                           eps_max: Optional[float] = None) -> LikelihoodTable:
    """Two-source outcome probabilities on an ε grid over [0, eps_max] at the scenario's known θ."""
    points = points or simulation("mle_grid_points")
    eps_max = eps_max or simulation("mle_eps_max")
    grid = np.linspace(0.0, eps_max, points)
    rows = [outcome_distribution(povm, scenario.with_params(eps=e), Hypothesis.H2, representation,
                                 convention).probs for e in grid]
    return LikelihoodTable(grid=grid, probs=np.vstack(rows))


def mle_separation(counts, povm: Povm = None, theta_known: float = 0.0, kind="gaussian",
                   table: Optional[LikelihoodTable] = None) -> MleEstimate:
    """
    argmax_ε of the multinomial log-likelihood on the table grid, refined by a
    parabola through the best point and its neighbours. Grid-edge maxima are flagged.
    """
    if table is None:
        if povm is None:
            raise ValidityDomainError("mle_separation needs a POVM or a precomputed likelihood table")
        table = build_likelihood_table(povm, Scenario.from_dimensionless(theta_known, theta_known, 0.0, kind))
    ll = np.sum(special.xlogy(np.asarray(counts, dtype=float)[None, :], table.probs), axis=1)
    if not np.any(np.isfinite(ll)):
        raise MalformedModelError("observed record is impossible for every separation on the grid")
    j = int(np.argmax(ll))
    last = len(table.grid) - 1
    if j == 0 or j == last:
        return MleEstimate(float(table.grid[j]), True)

    left, mid, right = ll[j - 1], ll[j], ll[j + 1]
    step = table.grid[1] - table.grid[0]
    curvature = left - 2.0 * mid + right
    if not (np.isfinite(left) and np.isfinite(right)) or curvature >= 0.0:
        return MleEstimate(float(table.grid[j]), False)
    offset = 0.5 * (left - right) / curvature
    return MleEstimate(float(table.grid[j] + offset * step), False)


# -------------------------------------------------------------------
# Chunked execution
# -------------------------------------------------------------------

def _error_chunk(p1: np.ndarray, p2: np.ndarray, n: int, seed: int, start: int, stop: int) -> Dict[str, Any]:
    """Worker: wrong-decision indicators for trials [start, stop). Top-level so it pickles."""
    wrong = np.empty(stop - start, dtype=bool)
    for i in range(start, stop):
        rng = trial_rng(seed, i)
        truth = Hypothesis.H2 if rng.integers(2) else Hypothesis.H1
        counts = sample_outcomes(p2 if truth is Hypothesis.H2 else p1, n, rng)
        wrong[i - start] = decide_hypothesis(counts, p1, p2) is not truth
    return {"start": start, "values": wrong}


def _estimate_chunk(table: LikelihoodTable, p_true: np.ndarray, n: int, seed: int,
                    start: int, stop: int) -> Dict[str, Any]:
    est = np.empty(stop - start)
    boundary = np.zeros(stop - start, dtype=bool)
    for i in range(start, stop):
        counts = sample_outcomes(p_true, n, trial_rng(seed, i))
        mle = mle_separation(counts, table=table)
        est[i - start], boundary[i - start] = mle.eps_hat, mle.at_boundary
    return {"start": start, "values": est, "boundary": boundary}


def run_chunks(worker: Callable, args: tuple, n_trials: int, chunk_size: Optional[int] = None,
               max_procs: int = 1, label: str = "trials") -> List[Dict[str, Any]]:
    """Split [0, n_trials) into chunks, run them serially or on a process pool, return them in trial order."""
    chunk_size = chunk_size or simulation("chunk_size")
    bounds = [(s, min(s + chunk_size, n_trials)) for s in range(0, n_trials, chunk_size)]
    results = []
    if max_procs <= 1 or len(bounds) == 1:
        for s, e in tqdm(bounds, desc=label, disable=not SHOW_PROGRESS):
            results.append(worker(*args, s, e))
    else:
        with ProcessPoolExecutor(max_workers=max_procs) as exe:
            futures = {exe.submit(worker, *args, s, e): (s, e) for s, e in bounds}
            for fut in tqdm(as_completed(futures), total=len(futures), desc=label, disable=not SHOW_PROGRESS):
                s, e = futures[fut]
                try:
                    results.append(fut.result())
                except Exception:
                    logger.exception("Chunk [%d, %d) of %s failed", s, e, label)
                    raise
    return sorted(results, key=lambda r: r["start"])


# -------------------------------------------------------------------
# Experiments
# -------------------------------------------------------------------

def empirical_error_rate(config: RunConfig) -> TrialSummary:
    """Fraction of wrong likelihood-ratio decisions, each trial's hypothesis drawn with probability 1/2."""
    t0 = time.time()
    p1, p2 = distribution_pair(config.povm, config.scenario, config.representation, config.convention)
    chunks = run_chunks(_error_chunk, (p1.probs, p2.probs, config.n_photons, config.seed),
                        config.n_trials, config.chunk_size, config.max_procs, "error trials")
    wrong = np.concatenate([c["values"] for c in chunks])

    n_trials, n = config.n_trials, config.n_photons
    p_hat = float(wrong.mean())
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / n_trials)
    xi = chernoff_exponent_classical(p1, p2).exponent
    predicted = {"chernoff_exponent": xi, "chernoff_bound": 0.5 * math.exp(-n * xi)}
    if n == 1:
        predicted["single_shot_error"] = error_rates_from(p1, p2).total
    flags, upper = [], None
    if p_hat == 0.0:
        upper = 3.0 / n_trials
        flags.append("no_errors_observed")
        logger.warning("No decision errors in %d trials; reporting the upper bound %.3g", n_trials, upper)
    else:
        predicted["observed_exponent"] = -math.log(p_hat) / n

    event(logger, "empirical_error_rate", povm=config.povm.name, n=n, trials=n_trials, p_hat=p_hat, xi=xi)
    timing(logger, f"empirical_error_rate ({n_trials} trials)", t0)
    return TrialSummary(estimates=wrong, empirical_error=p_hat, standard_error=std_err, upper_bound=upper,
                        predicted=predicted, flags=tuple(flags))


def empirical_estimator_variance(config: RunConfig, table: Optional[LikelihoodTable] = None) -> TrialSummary:
    """Sample variance of the separation MLE under H2 against the Cramér-Rao bound 1/(n F_εε)."""
    t0 = time.time()
    scenario = config.scenario
    table = table or build_likelihood_table(config.povm, scenario, config.representation, config.convention)
    p_true = outcome_distribution(config.povm, scenario, Hypothesis.H2, config.representation,
                                  config.convention).probs
    chunks = run_chunks(_estimate_chunk, (table, p_true, config.n_photons, config.seed),
                        config.n_trials, config.chunk_size, config.max_procs, "mle trials")
    estimates = np.concatenate([c["values"] for c in chunks])
    boundary = int(sum(int(c["boundary"].sum()) for c in chunks))

    variance = float(np.var(estimates, ddof=1)) if len(estimates) > 1 else 0.0
    fisher = cfi_matrix(config.povm, scenario, config.representation, convention=config.convention).eps_eps
    crb = 1.0 / (config.n_photons * fisher) if fisher > 0 else math.inf
    floor = crb * (1.0 - 3.0 / math.sqrt(config.n_trials))
    flags = []
    if boundary:
        flags.append(f"boundary_hits={boundary}")
        logger.warning("%d of %d MLE estimates hit the grid boundary (biased regime)", boundary, config.n_trials)
    if variance < floor:
        flags.append("below_cramer_rao_floor")
        logger.warning("MLE variance %.4g below the Cramer-Rao floor %.4g", variance, floor)

    event(logger, "empirical_estimator_variance", povm=config.povm.name, n=config.n_photons,
          trials=config.n_trials, variance=variance, crb=crb, boundary=boundary)
    timing(logger, f"empirical_estimator_variance ({config.n_trials} trials)", t0)
    return TrialSummary(estimates=estimates, empirical_variance=variance,
                        predicted={"cramer_rao_bound": crb, "fisher_eps_eps": fisher,
                                   "mean_estimate": float(np.mean(estimates))},
                        flags=tuple(flags))


def exact_reference_error(config: RunConfig) -> float:
    """Exact finite-n Bayes error for the configured POVM and scenario."""
    p1, p2 = distribution_pair(config.povm, config.scenario, config.representation, config.convention)
    return exact_error_probability(p1, p2, config.n_photons)
