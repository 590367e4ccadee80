import math

import numpy as np
import pytest

from src.errors import IncompatibleRepresentationError, InvalidPovmError
from src.measurements.povm import (
    BUCKET,
    Effect,
    Measurement,
    OutcomeDistribution,
    Povm,
    PovmSpace,
    Representation,
    build_povm,
    distribution_pair,
    embed_in_modes,
    helstrom_povm,
    outcome_distribution,
    restrict_to_qubit,
    rotade_povm,
    spade01_povm,
    spade_povm,
)
from src.optics.psf import Hypothesis, PsfKind, Scenario
from src.optics.qubit_model import HelstromGamma, StateConvention, gamma_matrix

NAMED = [Measurement.ROTADE, Measurement.SPADE01, Measurement.BSPADE, Measurement.SPADE]


@pytest.mark.parametrize("space", list(PovmSpace))
@pytest.mark.parametrize("measurement", NAMED)
def test_named_povms_are_complete(space, measurement):
    povm = build_povm(measurement, theta=0.3, space=space, max_index=3)
    total = sum(e.matrix for e in povm.effects)
    assert np.allclose(total, np.eye(povm.dim), atol=1e-12)
    for e in povm.effects:
        assert np.linalg.eigvalsh(e.matrix)[0] >= -1e-12


def test_aligned_rotade_is_spade01():
    rot, spade = rotade_povm(0.0), spade01_povm()
    assert np.allclose(rot.effect("rot:1").matrix, spade.effect("mode:1").matrix)
    assert np.allclose(rot.effect("rot:2").matrix, spade.effect("mode:0").matrix)
    assert np.allclose(rot.effect(BUCKET).matrix, spade.effect(BUCKET).matrix)


def test_bspade_has_no_bucket():
    povm = build_povm(Measurement.BSPADE)
    assert not povm.has_bucket
    assert povm.labels == ["mode:0", "mode:>0"]


def test_duplicate_labels_rejected():
    with pytest.raises(InvalidPovmError):
        Povm(PovmSpace.QUBIT, [Effect("a", np.eye(2) / 2), Effect("a", np.eye(2) / 2)], has_bucket=False)


def test_incomplete_povm_rejected():
    with pytest.raises(InvalidPovmError):
        Povm(PovmSpace.QUBIT, [Effect("a", np.diag([1.0, 0.0]))], has_bucket=False)


def test_non_positive_effect_rejected():
    effects = [Effect("a", np.diag([1.5, 0.0])), Effect("b", np.diag([-0.5, 1.0]))]
    with pytest.raises(InvalidPovmError):
        Povm(PovmSpace.QUBIT, effects, has_bucket=False)


def test_degenerate_helstrom_decides_one_source():
    povm = helstrom_povm(HelstromGamma(np.zeros((2, 2))))
    assert povm.degenerate
    assert np.allclose(povm.effect("helstrom:+").matrix, 0.0)
    assert np.allclose(povm.effect("helstrom:-").matrix, np.eye(2))


@pytest.mark.parametrize("kind", list(PsfKind))
@pytest.mark.parametrize("theta", [float(t) for t in np.linspace(-0.5, 0.5, 11)])
@pytest.mark.parametrize("eps", [0.05, 0.3])
def test_helstrom_is_rotade_for_aligned_hypotheses(kind, theta, eps):
    hel = helstrom_povm(gamma_matrix(theta, theta, eps, kind))
    rot = rotade_povm(theta, kind, PovmSpace.QUBIT)
    assert np.allclose(hel.effect("helstrom:+").matrix, rot.effect("rot:1").matrix, atol=1e-10)
    assert np.allclose(hel.effect("helstrom:-").matrix, rot.effect("rot:2").matrix, atol=1e-10)


def test_helstrom_needs_gamma():
    with pytest.raises(InvalidPovmError):
        build_povm(Measurement.HELSTROM)


def test_restrict_and_embed_are_inverse_for_rotade():
    mode = rotade_povm(0.3)
    qubit = rotade_povm(0.3, space=PovmSpace.QUBIT)
    restricted = restrict_to_qubit(mode)
    for label in ("rot:1", "rot:2"):
        assert np.allclose(restricted.effect(label).matrix, qubit.effect(label).matrix)
    lifted = embed_in_modes(qubit)
    for label in mode.labels:
        assert np.allclose(lifted.effect(label).matrix, mode.effect(label).matrix)
        assert lifted.effect(label).tail == mode.effect(label).tail


def test_restricting_a_coupling_povm_fails():
    plus = np.zeros(4)
    plus[[1, 2]] = 1 / math.sqrt(2)
    minus = np.zeros(4)
    minus[[1, 2]] = [1 / math.sqrt(2), -1 / math.sqrt(2)]
    e0 = np.zeros((4, 4))
    e0[0, 0] = 1.0
    e3 = np.zeros((4, 4))
    e3[3, 3] = 1.0
    effects = [Effect("a", e0), Effect("b", np.outer(plus, plus)), Effect("c", np.outer(minus, minus)),
               Effect(BUCKET, e3, tail=1.0)]
    povm = Povm(PovmSpace.MODE, effects, has_bucket=True)
    with pytest.raises(IncompatibleRepresentationError):
        restrict_to_qubit(povm)


def test_aligned_rotade_full_model_probabilities():
    eps = 0.3
    s = Scenario.from_dimensionless(0.0, 0.0, eps)
    p1, p2 = distribution_pair(rotade_povm(0.0), s)
    x = eps * eps / 4
    assert p1.prob("rot:1") == pytest.approx(0.0, abs=1e-15)
    assert p2.prob("rot:1") == pytest.approx(x * math.exp(-x), abs=1e-12)
    assert p2.prob("rot:2") == pytest.approx(math.exp(-x), abs=1e-12)
    assert p2.prob(BUCKET) == pytest.approx(1 - math.exp(-x) * (1 + x), abs=1e-12)


def test_aligned_rotade_qubit_model_probabilities():
    s = Scenario.from_dimensionless(0.0, 0.0, 0.3)
    p2 = outcome_distribution(rotade_povm(0.0, space=PovmSpace.QUBIT), s, Hypothesis.H2,
                              Representation.QUBIT_MODEL)
    assert p2.prob("rot:1") == pytest.approx(0.09 / 4)


def test_bspade_gaussian_fundamental_mode_probability():
    theta, eps = 0.2, 0.3
    s = Scenario.from_dimensionless(theta, theta, eps)
    p2 = outcome_distribution(build_povm(Measurement.BSPADE), s, Hypothesis.H2)
    expected = 0.5 * (math.exp(-(theta - eps) ** 2 / 4) + math.exp(-(theta + eps) ** 2 / 4))
    assert p2.prob("mode:0") == pytest.approx(expected, abs=1e-12)


def test_sinc_fundamental_mode_is_sinc_squared():
    theta = 0.3
    s = Scenario.from_dimensionless(theta, theta, 0.2, PsfKind.SINC)
    p1 = outcome_distribution(build_povm(Measurement.BSPADE), s, Hypothesis.H1)
    assert p1.prob("mode:0") == pytest.approx((math.sin(math.pi * theta) / (math.pi * theta)) ** 2, abs=1e-12)


@pytest.mark.parametrize("representation", list(Representation))
@pytest.mark.parametrize("kind", list(PsfKind))
def test_distributions_are_normalised(representation, kind):
    s = Scenario.from_dimensionless(0.1, 0.25, 0.3, kind)
    for m in (Measurement.ROTADE, Measurement.SPADE01, Measurement.BSPADE):
        for dist in distribution_pair(build_povm(m, theta=0.25, kind=kind), s, representation):
            assert dist.probs.sum() == pytest.approx(1.0, abs=1e-9)
            assert dist.probs.min() >= 0.0


def test_helstrom_distribution_in_qubit_model():
    s = Scenario.from_dimensionless(0.1, 0.2, 0.3)
    povm = helstrom_povm(gamma_matrix(0.1, 0.2, 0.3))
    p1, p2 = distribution_pair(povm, s, Representation.QUBIT_MODEL)
    assert p1.probs.sum() == pytest.approx(1.0)
    assert p2.prob("helstrom:+") > p1.prob("helstrom:+")


def test_sinc_hermite_gauss_has_no_qubit_image():
    s = Scenario.from_dimensionless(0.1, 0.1, 0.2, PsfKind.SINC)
    with pytest.raises(IncompatibleRepresentationError):
        outcome_distribution(spade_povm(2), s, Hypothesis.H2, Representation.QUBIT_MODEL,
                             StateConvention.EXACT)


def test_outcome_distribution_validation():
    with pytest.raises(InvalidPovmError):
        OutcomeDistribution(("a", "b"), [0.7, 0.7])
    d = OutcomeDistribution(("a", "b"), [0.25, 0.75])
    assert d.as_dict() == {"a": 0.25, "b": 0.75}
