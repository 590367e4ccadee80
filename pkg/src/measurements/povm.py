# src/measurements/povm.py
"""
Measurement families and the outcome-distribution evaluator.

A Povm lives either in the qubit space span{|0>, |1>} or in the truncated mode
space span{Φ0..ΦM}. Mode-space effects carry a `tail` weight for the modes beyond
the truncation so the bucket outcome ("no click in the monitored modes") keeps the
distribution normalised.

Labels: mode:{n}, mode:>0, rot:{1|2}, helstrom:{+|-}, bucket.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import numerics
from src.errors import IncompatibleRepresentationError, InvalidPovmError
from src.logger import event, get_logger
from src.optics.psf import (
    BasisKind,
    Hypothesis,
    ModeBasis,
    PsfKind,
    Scenario,
    born_probability,
    mode_density_matrix,
)
from src.optics.qubit_model import HelstromGamma, StateConvention, qubit_state, rotated_pair, width_factor

logger = get_logger(__name__)

PSD_TOL = 1e-12
COMPLETENESS_TOL = 1e-10
DISTRIBUTION_TOL = 1e-9
DEGENERACY_TOL = 1e-15

BUCKET = "bucket"


class PovmSpace(str, Enum):
    QUBIT = "qubit"
    MODE = "mode"


class Representation(str, Enum):
    QUBIT_MODEL = "qubit"
    FULL_MODEL = "full"


class Measurement(str, Enum):
    ROTADE = "rotade"
    SPADE01 = "spade01"
    BSPADE = "bspade"
    SPADE = "spade"
    HELSTROM = "helstrom"


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class Effect:
    label: str
    matrix: np.ndarray
    tail: float = 0.0


@dataclass(frozen=True)
class Povm:
    space: PovmSpace
    effects: Tuple[Effect, ...]
    has_bucket: bool
    basis_kind: BasisKind = BasisKind.DERIVATIVE_PAIR
    name: str = ""
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "space", PovmSpace(self.space))
        object.__setattr__(self, "effects", tuple(self.effects))
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise InvalidPovmError(f"duplicate POVM labels: {labels}")
        dims = {e.matrix.shape for e in self.effects}
        if len(dims) != 1:
            raise InvalidPovmError(f"effects have mismatched shapes: {sorted(dims)}")
        dim = self.effects[0].matrix.shape[0]
        if self.space is PovmSpace.QUBIT and dim != 2:
            raise InvalidPovmError("qubit POVM effects must be 2x2")

        total = np.zeros((dim, dim))
        for e in self.effects:
            if np.max(np.abs(e.matrix - e.matrix.T)) > PSD_TOL:
                raise InvalidPovmError(f"effect '{e.label}' is not symmetric")
            if np.linalg.eigvalsh(e.matrix)[0] < -PSD_TOL:
                raise InvalidPovmError(f"effect '{e.label}' is not positive semidefinite")
            if not 0.0 <= e.tail <= 1.0:
                raise InvalidPovmError(f"effect '{e.label}' has tail weight {e.tail} outside [0, 1]")
            total += e.matrix
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
            raise InvalidPovmError(f"POVM '{self.name}' effects do not sum to the identity")
        if self.space is PovmSpace.MODE and abs(sum(e.tail for e in self.effects) - 1.0) > COMPLETENESS_TOL:
            raise InvalidPovmError(f"POVM '{self.name}' tail weights do not sum to 1")

    @property
    def labels(self) -> List[str]:
        return [e.label for e in self.effects]

    @property
    def dim(self) -> int:
        return self.effects[0].matrix.shape[0]

    @property
    def max_index(self) -> int:
        return self.dim - 1

    def effect(self, label: str) -> Effect:
        for e in self.effects:
            if e.label == label:
                return e
        raise KeyError(label)


@dataclass(frozen=True)
class OutcomeDistribution:
    labels: Tuple[str, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(p) != len(self.labels):
            raise InvalidPovmError("labels and probabilities differ in length")
        if p.size and p.min() < -PSD_TOL:
            raise InvalidPovmError(f"negative outcome probability {p.min():.3g}")
        if abs(p.sum() - 1.0) > DISTRIBUTION_TOL:
            raise InvalidPovmError(f"outcome probabilities sum to {p.sum():.12g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def prob(self, label: str) -> float:
        return float(self.probs[self.labels.index(label)])

    def as_dict(self) -> Dict[str, float]:
        return {lab: float(v) for lab, v in zip(self.labels, self.probs)}


# -------------------------------------------------------------------
# Constructors
# -------------------------------------------------------------------

def _truncation(truncation: Optional[int], monitored: int) -> int:
    return max(int(truncation if truncation is not None else numerics("max_index")), monitored)


def _projector(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec)


def _unit(dim: int, n: int) -> np.ndarray:
    v = np.zeros(dim)
    v[n] = 1.0
    return v


def _with_bucket(effects: List[Effect], dim: int, name: str, basis_kind=BasisKind.DERIVATIVE_PAIR) -> Povm:
    monitored = sum(e.matrix for e in effects)
    effects.append(Effect(BUCKET, np.eye(dim) - monitored, tail=1.0))
    return Povm(PovmSpace.MODE, effects, has_bucket=True, basis_kind=basis_kind, name=name)


def spade_povm(max_index: int, truncation: Optional[int] = None,
               basis_kind=BasisKind.HERMITE_GAUSS) -> Povm:
    """Projectors onto modes 0..max_index plus the completing bucket."""
    if max_index < 1:
        raise InvalidPovmError(f"SPADE needs max_index >= 1, got {max_index}")
    dim = _truncation(truncation, max_index) + 1
    effects = [Effect(f"mode:{n}", _projector(_unit(dim, n))) for n in range(max_index + 1)]
    return _with_bucket(effects, dim, f"spade{max_index}", BasisKind(basis_kind))


def spade01_povm(truncation: Optional[int] = None) -> Povm:
    povm = spade_povm(1, truncation, basis_kind=BasisKind.DERIVATIVE_PAIR)
    return Povm(povm.space, povm.effects, True, povm.basis_kind, name=Measurement.SPADE01.value)


def bspade_povm(truncation: Optional[int] = None) -> Povm:
    """Fundamental mode against everything else; the second outcome is a detection, not a bucket."""
    dim = _truncation(truncation, 1) + 1
    zero = _projector(_unit(dim, 0))
    effects = [Effect("mode:0", zero), Effect("mode:>0", np.eye(dim) - zero, tail=1.0)]
    return Povm(PovmSpace.MODE, effects, has_bucket=False, name=Measurement.BSPADE.value)


def rotade_povm(theta: float, kind=PsfKind.GAUSSIAN, space=PovmSpace.MODE,
                sinc_convention: str = "paper", truncation: Optional[int] = None) -> Povm:
    """
    Rotated pair ψ1 = (sin kθ, cos kθ), ψ2 = (-cos kθ, sin kθ) on {|0>, |1>}.
    rot:1 is evidence for two sources; rot:2 is the one-source direction.
    """
    if abs(theta) > numerics("validity_theta"):
        raise InvalidPovmError(f"ROTADE angle defined for |theta| <= 1, got {theta}")
    psi1, psi2 = rotated_pair(theta, width_factor(kind, sinc_convention))
    if PovmSpace(space) is PovmSpace.QUBIT:
        effects = [Effect("rot:1", _projector(psi1)), Effect("rot:2", _projector(psi2))]
        return Povm(PovmSpace.QUBIT, effects, has_bucket=False, name=Measurement.ROTADE.value)
    dim = _truncation(truncation, 1) + 1
    effects = []
    for label, psi in (("rot:1", psi1), ("rot:2", psi2)):
        vec = np.zeros(dim)
        vec[:2] = psi
        effects.append(Effect(label, _projector(vec)))
    return _with_bucket(effects, dim, Measurement.ROTADE.value)


def helstrom_povm(gamma: HelstromGamma) -> Povm:
    """
    Projectors onto the positive eigenspace of Γ (helstrom:+, decide two sources) and
    the non-positive eigenspace (helstrom:-, decide one source). Γ = 0 yields (0, I)
    with the degenerate flag set.
    """
    values, vectors = np.linalg.eigh(gamma.matrix)
    if np.max(np.abs(values)) <= DEGENERACY_TOL:
        logger.warning("Helstrom operator vanishes: hypotheses are indistinguishable, deciding one source")
        event(logger, "helstrom_degenerate", gamma=gamma.matrix.tolist())
        effects = [Effect("helstrom:+", np.zeros((2, 2))), Effect("helstrom:-", np.eye(2))]
        return Povm(PovmSpace.QUBIT, effects, has_bucket=False, name=Measurement.HELSTROM.value, degenerate=True)

    plus = sum((_projector(vectors[:, i]) for i in range(2) if values[i] > 0), np.zeros((2, 2)))
    effects = [Effect("helstrom:+", plus), Effect("helstrom:-", np.eye(2) - plus)]
    return Povm(PovmSpace.QUBIT, effects, has_bucket=False, name=Measurement.HELSTROM.value)


def build_povm(measurement, theta: float = 0.0, kind=PsfKind.GAUSSIAN, space=PovmSpace.MODE,
               sinc_convention: str = "paper", truncation: Optional[int] = None,
               gamma: Optional[HelstromGamma] = None, max_index: int = 1) -> Povm:
    """Factory keyed by measurement name; `theta` is the ROTADE tuning angle."""
    m = Measurement(measurement)
    if m is Measurement.ROTADE:
        return rotade_povm(theta, kind, space, sinc_convention, truncation)
    if m is Measurement.HELSTROM:
        if gamma is None:
            raise InvalidPovmError("Helstrom measurement needs its Γ operator")
        return helstrom_povm(gamma)
    if PovmSpace(space) is PovmSpace.QUBIT:
        return restrict_to_qubit(build_povm(m, theta, kind, PovmSpace.MODE, sinc_convention, 1, max_index=max_index))
    if m is Measurement.SPADE01:
        return spade01_povm(truncation)
    if m is Measurement.BSPADE:
        return bspade_povm(truncation)
    return spade_povm(max_index, truncation)


# -------------------------------------------------------------------
# Space conversions
# -------------------------------------------------------------------

def restrict_to_qubit(povm: Povm) -> Povm:
    """Compress a mode-space POVM onto span{|0>, |1>}; effects must not couple it to higher modes."""
    if povm.space is PovmSpace.QUBIT:
        return povm
    for e in povm.effects:
        if np.max(np.abs(e.matrix[:2, 2:]), initial=0.0) > PSD_TOL:
            raise IncompatibleRepresentationError(
                f"effect '{e.label}' of '{povm.name}' couples the qubit subspace to higher modes"
            )
    effects = [Effect(e.label, e.matrix[:2, :2].copy()) for e in povm.effects]
    return Povm(PovmSpace.QUBIT, effects, has_bucket=povm.has_bucket, name=povm.name, degenerate=povm.degenerate)


def embed_in_modes(povm: Povm, truncation: Optional[int] = None) -> Povm:
    """Lift a qubit POVM onto {mode0, mode1} and complete it with the bucket."""
    if povm.space is PovmSpace.MODE:
        return povm
    dim = _truncation(truncation, 1) + 1
    effects = []
    for e in povm.effects:
        m = np.zeros((dim, dim))
        m[:2, :2] = e.matrix
        effects.append(Effect(e.label, m))
    lifted = _with_bucket(effects, dim, povm.name)
    return Povm(lifted.space, lifted.effects, True, lifted.basis_kind, povm.name, povm.degenerate)


# -------------------------------------------------------------------
# Born rule
# -------------------------------------------------------------------

def outcome_distribution(povm: Povm, scenario: Scenario, hypothesis, representation=Representation.FULL_MODEL,
                         convention=StateConvention.SECOND_ORDER) -> OutcomeDistribution:
    hyp = Hypothesis(hypothesis)
    rep = Representation(representation)

    if rep is Representation.QUBIT_MODEL:
        if scenario.psf.kind is PsfKind.SINC and povm.space is PovmSpace.MODE \
                and povm.basis_kind is BasisKind.HERMITE_GAUSS:
            raise IncompatibleRepresentationError("Hermite-Gauss SPADE has no qubit image for the Sinc PSF")
        qpovm = restrict_to_qubit(povm)
        theta = scenario.theta0 if hyp is Hypothesis.H1 else scenario.thetac
        state = qubit_state(hyp, theta, abs(scenario.eps), scenario.psf.kind, convention,
                            scenario.sinc_convention, scenario.weight)
        probs = [born_probability(e.matrix, state.matrix) for e in qpovm.effects]
        return OutcomeDistribution(qpovm.labels, probs)

    mpovm = embed_in_modes(povm)
    basis = ModeBasis(mpovm.basis_kind, scenario.x_ref, mpovm.max_index)
    rho, residual = mode_density_matrix(scenario, hyp, basis)
    probs = [born_probability(e.matrix, rho, e.tail, residual) for e in mpovm.effects]
    logger.trace("outcome_distribution %s %s full -> %s", mpovm.name, hyp.value, probs)
    return OutcomeDistribution(mpovm.labels, probs)


def distribution_pair(povm: Povm, scenario: Scenario, representation=Representation.FULL_MODEL,
                      convention=StateConvention.SECOND_ORDER) -> Tuple[OutcomeDistribution, OutcomeDistribution]:
    return (outcome_distribution(povm, scenario, Hypothesis.H1, representation, convention),
            outcome_distribution(povm, scenario, Hypothesis.H2, representation, convention))
