# src/analysis/discrimination.py
"""
One-versus-two source hypothesis testing with equal priors.

H1: one source at x0.  H2: two sources of half-separation d around the centroid xc.
Bayes decisions pick H1 whenever p(y|H1) >= p(y|H2).
"""

import itertools
import math
import sys
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from src.analysis.search import golden_section
from src.config import numerics
from src.errors import IncompatibleRepresentationError, InvalidPovmError, ValidityDomainError
from src.logger import event, get_logger
from src.measurements.povm import (
    BUCKET,
    Measurement,
    OutcomeDistribution,
    Povm,
    PovmSpace,
    Representation,
    build_povm,
    distribution_pair,
    rotade_povm,
)
from src.optics.psf import BasisKind, Hypothesis, ModeBasis, PsfKind, PsfModel, Scenario, mode_density_matrix
from src.optics.qubit_model import QubitState, StateConvention, qubit_state

logger = get_logger(__name__)

# -log of the smallest representable positive product; reported for disjoint supports
EXPONENT_CAP = -math.log(sys.float_info.min * sys.float_info.epsilon)
MAX_ENUMERATED_RECORDS = 5_000_000

DEFAULT_CURVE_MEASUREMENTS = (Measurement.ROTADE, Measurement.SPADE01, Measurement.BSPADE)


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorRates:
    type1: float  # decide H2 given H1
    type2: float  # decide H1 given H2
    total: float

    def __post_init__(self):
        for name in ("type1", "type2", "total"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValidityDomainError(f"{name} error {v} outside [0, 1]")
        if abs(self.total - 0.5 * (self.type1 + self.type2)) > 1e-12:
            raise ValidityDomainError("total error must be the prior-weighted mean of type-1 and type-2")


@dataclass(frozen=True)
class ChernoffResult:
    exponent: float
    s_star: float
    capped: bool = False
    converged: bool = True

    def __post_init__(self):
        if self.exponent < -1e-12:
            raise ValidityDomainError(f"Chernoff exponent {self.exponent} is negative")
        if not 0.0 <= self.s_star <= 1.0:
            raise ValidityDomainError(f"Chernoff minimiser s={self.s_star} outside [0, 1]")


# -------------------------------------------------------------------
# Single-shot errors
# -------------------------------------------------------------------

def decide_two_sources(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Per-outcome Bayes decision; True means H2. Ties go to H1."""
    return np.asarray(p2) > np.asarray(p1)


def error_rates_from(p1: OutcomeDistribution, p2: OutcomeDistribution) -> ErrorRates:
    if p1.labels != p2.labels:
        raise InvalidPovmError("hypothesis distributions are over different outcomes")
    pick_h2 = decide_two_sources(p1.probs, p2.probs)
    type1 = float(np.sum(p1.probs[pick_h2]))
    type2 = float(np.sum(p2.probs[~pick_h2]))
    return ErrorRates(type1=type1, type2=type2, total=0.5 * (type1 + type2))


def error_probabilities(povm: Povm, scenario: Scenario, representation=Representation.FULL_MODEL,
                        convention=StateConvention.SECOND_ORDER) -> ErrorRates:
    p1, p2 = distribution_pair(povm, scenario, representation, convention)
    return error_rates_from(p1, p2)


def _matrix(state) -> np.ndarray:
    return state.matrix if isinstance(state, QubitState) else np.asarray(state, dtype=float)


def helstrom_error(rho1, rho2) -> float:
    """Minimum single-shot error ½(1 - ½‖ρ1 - ρ2‖₁)."""
    diff = _matrix(rho1) - _matrix(rho2)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
    return 0.5 * (1.0 - 0.5 * trace_norm)


# -------------------------------------------------------------------
# Chernoff exponents
# -------------------------------------------------------------------

def _chernoff_from_overlap(overlap, label: str) -> ChernoffResult:
    res = golden_section(overlap, 0.0, 1.0)
    minimum, s_star = res["minimum"], res["argmin"]
    if minimum <= 0.0:
        logger.warning("%s: supports are disjoint, exponent capped at %.4g", label, EXPONENT_CAP)
        event(logger, "chernoff_capped", label=label)
        return ChernoffResult(EXPONENT_CAP, float(s_star), capped=True, converged=res["converged"])
    if not res["converged"]:
        logger.warning("%s: golden-section search did not converge", label)
    return ChernoffResult(max(0.0, -math.log(minimum)), float(s_star), converged=res["converged"])


def chernoff_exponent_classical(p1: OutcomeDistribution, p2: OutcomeDistribution) -> ChernoffResult:
    """
    ξ = -log min_s Σ_y p1^s p2^(1-s). Outcomes with a zero probability drop out for
    interior s; the endpoints use the support projections Σ_{p1>0} p2 and Σ_{p2>0} p1.
    """
    if p1.labels != p2.labels:
        raise InvalidPovmError("hypothesis distributions are over different outcomes")
    a, b = p1.probs, p2.probs
    if np.max(np.abs(a - b)) == 0.0:
        return ChernoffResult(0.0, 0.5)
    both = (a > 0) & (b > 0)
    la, lb = np.log(a[both]), np.log(b[both])
    end0 = float(np.sum(b[a > 0]))
    end1 = float(np.sum(a[b > 0]))

    def overlap(s):
        if s <= 0.0:
            return end0
        if s >= 1.0:
            return end1
        return float(np.sum(np.exp(s * la + (1.0 - s) * lb)))

    return _chernoff_from_overlap(overlap, "classical Chernoff")


def _matrix_power_factory(rho: np.ndarray):
    values, vectors = np.linalg.eigh(rho)
    tol = numerics("support_tol")
    support = values > tol
    values, vectors = values[support], vectors[:, support]

    def power(s):
        if s == 0.0:
            return vectors @ vectors.T
        return (vectors * values ** s) @ vectors.T

    return power


def chernoff_exponent_quantum(rho1, rho2) -> ChernoffResult:
    """ξ_QM = -log min_s Tr(ρ1^s ρ2^(1-s)); eigenvalues below the support tolerance count as 0."""
    m1, m2 = _matrix(rho1), _matrix(rho2)
    if np.max(np.abs(m1 - m2)) == 0.0:
        return ChernoffResult(0.0, 0.5)
    pow1, pow2 = _matrix_power_factory(m1), _matrix_power_factory(m2)

    def overlap(s):
        return float(np.trace(pow1(s) @ pow2(1.0 - s)))

    return _chernoff_from_overlap(overlap, "quantum Chernoff")


def state_pair(scenario: Scenario, representation=Representation.FULL_MODEL,
               convention=StateConvention.SECOND_ORDER, truncation: Optional[int] = None):
    """(ρ1, ρ2) as qubit matrices or truncated derivative-pair mode-space matrices."""
    if Representation(representation) is Representation.QUBIT_MODEL:
        kind = scenario.psf.kind
        rho1 = qubit_state(Hypothesis.H1, scenario.theta0, 0.0, kind, convention, scenario.sinc_convention)
        rho2 = qubit_state(Hypothesis.H2, scenario.thetac, abs(scenario.eps), kind, convention,
                           scenario.sinc_convention, scenario.weight)
        return rho1.matrix, rho2.matrix
    m = numerics("max_index") if truncation is None else truncation
    basis = ModeBasis(BasisKind.DERIVATIVE_PAIR, scenario.x_ref, m)
    rho1, _ = mode_density_matrix(scenario, Hypothesis.H1, basis)
    rho2, _ = mode_density_matrix(scenario, Hypothesis.H2, basis)
    return rho1, rho2


# -------------------------------------------------------------------
# Curves
# -------------------------------------------------------------------

def _curve_povm(measurement, theta: float, kind, sinc_convention: str) -> Povm:
    return build_povm(measurement, theta=theta, kind=kind, sinc_convention=sinc_convention)


def chernoff_point(theta: float, eps: float, kind=PsfKind.GAUSSIAN,
                   measurements: Sequence = DEFAULT_CURVE_MEASUREMENTS,
                   representation=Representation.FULL_MODEL, sinc_convention: str = "paper",
                   convention=StateConvention.SECOND_ORDER) -> Dict[str, float]:
    """Exponents of each measurement (ROTADE tuned to θ) and of the quantum bound at one (θ, ε)."""
    scenario = Scenario.from_dimensionless(theta, theta, eps, kind, sinc_convention=sinc_convention)
    row = {"theta": theta, "eps": eps}
    for m in measurements:
        name = Measurement(m).value
        povm = _curve_povm(m, theta, kind, sinc_convention)
        p1, p2 = distribution_pair(povm, scenario, representation, convention)
        res = chernoff_exponent_classical(p1, p2)
        row[f"xi_{name}"] = res.exponent
        row[f"s_{name}"] = res.s_star
    rho1, rho2 = state_pair(scenario, representation, convention)
    q = chernoff_exponent_quantum(rho1, rho2)
    row["xi_quantum"] = q.exponent
    row["s_quantum"] = q.s_star
    logger.trace("chernoff_point theta=%g eps=%g -> %s", theta, eps, row)
    return row


def chernoff_curves(grid: Iterable[Tuple[float, float]], kind=PsfKind.GAUSSIAN,
                    measurements: Sequence = DEFAULT_CURVE_MEASUREMENTS,
                    representation=Representation.FULL_MODEL, sinc_convention: str = "paper") -> pd.DataFrame:
    """Table of per-measurement and quantum exponents over (θ, ε) points, sorted by (θ, ε)."""
    rows = [chernoff_point(t, e, kind, measurements, representation, sinc_convention) for t, e in grid]
    if not rows:
        raise ValidityDomainError("Chernoff curve grid is empty")
    return pd.DataFrame(rows).sort_values(["theta", "eps"]).reset_index(drop=True)


def max_relative_improvement(table: pd.DataFrame, reference: str = "bspade", best: str = "rotade") -> Dict[str, float]:
    """max(ξ_best/ξ_reference - 1) over rows with θ ≠ 0 and a positive reference exponent."""
    usable = table[(table["theta"] != 0.0) & (table[f"xi_{reference}"] > 0.0)]
    if usable.empty:
        return {"improvement": float("nan"), "theta": float("nan"), "eps": float("nan")}
    ratio = usable[f"xi_{best}"] / usable[f"xi_{reference}"] - 1.0
    idx = ratio.idxmax()
    return {"improvement": float(ratio[idx]), "theta": float(usable.at[idx, "theta"]),
            "eps": float(usable.at[idx, "eps"])}


def single_shot_table(thetas: Iterable[float], eps: float, kind=PsfKind.GAUSSIAN,
                      measurements: Sequence = DEFAULT_CURVE_MEASUREMENTS,
                      representation=Representation.FULL_MODEL,
                      convention=StateConvention.SECOND_ORDER, sinc_convention: str = "paper") -> pd.DataFrame:
    rows = []
    for theta in thetas:
        scenario = Scenario.from_dimensionless(theta, theta, eps, kind, sinc_convention=sinc_convention)
        for m in measurements:
            povm = _curve_povm(m, theta, kind, sinc_convention)
            r = error_probabilities(povm, scenario, representation, convention)
            rows.append({"theta": theta, "eps": eps, "measurement": Measurement(m).value,
                         "type1": r.type1, "type2": r.type2, "total": r.total})
    return pd.DataFrame(rows).sort_values(["theta", "eps", "measurement"]).reset_index(drop=True)


# -------------------------------------------------------------------
# Intrinsic error of the two-mode model
# -------------------------------------------------------------------

def _paired(scenario: Scenario, paired_povm: Optional[Povm]) -> Povm:
    povm = paired_povm or rotade_povm(scenario.thetac, scenario.psf.kind, sinc_convention=scenario.sinc_convention)
    if povm.space is not PovmSpace.MODE or not povm.has_bucket:
        raise IncompatibleRepresentationError("intrinsic error needs a mode-space POVM with a bucket outcome")
    for e in povm.effects:
        if e.label != BUCKET and (np.max(np.abs(e.matrix[2:, :]), initial=0.0) > 0.0 or e.tail != 0.0):
            raise IncompatibleRepresentationError(f"effect '{e.label}' reaches beyond the two monitored modes")
    return povm


def intrinsic_error_breakdown(scenario: Scenario, paired_povm: Optional[Povm] = None) -> Dict[str, float]:
    """
    Bayes error and success restricted to the monitored outcomes, and the intrinsic
    error P_I = 1 - (P_err + P_suc), i.e. the prior-weighted bucket mass.
    """
    povm = _paired(scenario, paired_povm)
    p1, p2 = distribution_pair(povm, scenario, Representation.FULL_MODEL)
    monitored = np.array([lab != BUCKET for lab in p1.labels])
    a, b = p1.probs[monitored], p2.probs[monitored]
    pick_h2 = decide_two_sources(a, b)
    p_err = 0.5 * (float(np.sum(a[pick_h2])) + float(np.sum(b[~pick_h2])))
    p_suc = 0.5 * (float(np.sum(a[~pick_h2])) + float(np.sum(b[pick_h2])))
    p_intrinsic = 0.5 * (p1.prob(BUCKET) + p2.prob(BUCKET))
    return {"p_err": p_err, "p_suc": p_suc, "p_intrinsic": p_intrinsic}


def intrinsic_error(scenario: Scenario, paired_povm: Optional[Povm] = None) -> float:
    return intrinsic_error_breakdown(scenario, paired_povm)["p_intrinsic"]


def intrinsic_error_vs_reference(x_single: float, x_centroid: float, separation: float,
                                 x_refs: Iterable[float], kind=PsfKind.GAUSSIAN,
                                 sigma: float = 1.0, sinc_convention: str = "paper") -> pd.DataFrame:
    """Sweep the demultiplexer reference with ROTADE tuned to the centroid offset at each point."""
    psf = PsfModel(PsfKind(kind), sigma)
    rows = []
    for x_ref in x_refs:
        scenario = Scenario(psf=psf, separation=separation,
                            x_ref=x_ref, x_single=x_single, x_centroid=x_centroid,
                            sinc_convention=sinc_convention)
        row = {"x_ref": x_ref, "theta0": scenario.theta0, "thetac": scenario.thetac, "eps": scenario.eps}
        row.update(intrinsic_error_breakdown(scenario))
        rows.append(row)
    return pd.DataFrame(rows).sort_values("x_ref").reset_index(drop=True)


# -------------------------------------------------------------------
# Finite-n exact error
# -------------------------------------------------------------------

def _count_vectors(n: int, k: int) -> np.ndarray:
    total = math.comb(n + k - 1, k - 1)
    if total > MAX_ENUMERATED_RECORDS:
        raise ValidityDomainError(f"{total} count vectors exceed the enumeration limit")
    out = np.empty((total, k), dtype=np.int64)
    for row, bars in enumerate(itertools.combinations(range(n + k - 1), k - 1)):
        edges = (-1,) + bars + (n + k - 1,)
        out[row] = [edges[i + 1] - edges[i] - 1 for i in range(k)]
    return out


def log_likelihood(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Σ_y c_y log p_y with 0·log 0 = 0; -inf when a count lands on an impossible outcome."""
    return np.sum(special.xlogy(counts, probs), axis=-1)


def exact_error_probability(p1: OutcomeDistribution, p2: OutcomeDistribution, n: int) -> float:
    """Bayes error of the n-photon likelihood-ratio test, by enumerating every count vector."""
    if p1.labels != p2.labels:
        raise InvalidPovmError("hypothesis distributions are over different outcomes")
    if n < 1:
        raise ValidityDomainError(f"photon number must be >= 1, got {n}")
    counts = _count_vectors(n, len(p1.labels))
    log_norm = special.gammaln(n + 1) - np.sum(special.gammaln(counts + 1), axis=1)
    l1, l2 = log_likelihood(counts, p1.probs), log_likelihood(counts, p2.probs)
    pick_h2 = l2 > l1
    prob1 = np.where(np.isfinite(l1), np.exp(log_norm + l1), 0.0)
    prob2 = np.where(np.isfinite(l2), np.exp(log_norm + l2), 0.0)
    return 0.5 * (float(np.sum(prob1[pick_h2])) + float(np.sum(prob2[~pick_h2])))
