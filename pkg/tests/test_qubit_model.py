import math

import numpy as np
import pytest

from src.errors import ValidityDomainError
from src.optics.psf import Hypothesis, PsfKind
from src.optics.qubit_model import (
    QubitState,
    StateConvention,
    bloch_vector,
    eigendecompose_two_source,
    from_bloch,
    gamma_matrix,
    qubit_state,
    second_order_matrix,
    sld_theta_eigenvectors,
    width_factor,
)


def test_width_factors():
    assert width_factor(PsfKind.GAUSSIAN) == 0.5
    assert width_factor(PsfKind.SINC, "paper") == pytest.approx(1 / math.sqrt(3))
    assert width_factor(PsfKind.SINC, "derived") == pytest.approx(math.pi / math.sqrt(3))
    with pytest.raises(ValidityDomainError):
        width_factor(PsfKind.SINC, "other")


@pytest.mark.parametrize("convention", list(StateConvention))
def test_aligned_single_source_is_mode_zero(convention):
    m = qubit_state(Hypothesis.H1, 0.0, 0.3, convention=convention).matrix
    assert np.allclose(m, [[1.0, 0.0], [0.0, 0.0]])


def test_gaussian_second_order_state_closed_form():
    theta, eps = 0.2, 0.3
    m = qubit_state(Hypothesis.H2, theta, eps).matrix
    s, c = math.sin(theta / 2), math.cos(theta / 2)
    mu = eps * eps / 4
    expected = mu * np.outer([s, c], [s, c]) + (1 - mu) * np.outer([-c, s], [-c, s])
    assert np.allclose(m, expected, atol=1e-15)


@pytest.mark.parametrize("kind", list(PsfKind))
@pytest.mark.parametrize("theta,eps", [(0.0, 0.1), (0.3, 0.2), (-0.5, 0.4), (1.0, 1.0)])
def test_states_are_density_matrices(kind, theta, eps):
    for conv in StateConvention:
        if conv is StateConvention.SECOND_ORDER and 2 * width_factor(kind) ** 2 * eps * eps > 1:
            continue
        m = qubit_state(Hypothesis.H2, theta, eps, kind, conv).matrix
        assert np.trace(m) == pytest.approx(1.0)
        assert np.linalg.eigvalsh(m)[0] >= -1e-12
        assert np.allclose(m, m.T)


def test_exact_and_second_order_agree_to_second_order():
    k = 0.5
    for eps in (0.05, 0.1, 0.2):
        exact = qubit_state(Hypothesis.H2, 0.0, eps, convention=StateConvention.EXACT).matrix
        second = qubit_state(Hypothesis.H2, 0.0, eps).matrix
        assert np.max(np.abs(exact - second)) <= 2 * (k * eps) ** 4


def test_states_are_even_in_separation():
    k = width_factor(PsfKind.GAUSSIAN)
    assert np.allclose(second_order_matrix(0.2, 0.3, k), second_order_matrix(0.2, -0.3, k))


def test_negative_separation_rejected():
    with pytest.raises(ValidityDomainError):
        qubit_state(Hypothesis.H2, 0.0, -0.1)


def test_outside_validity_domain_rejected():
    with pytest.raises(ValidityDomainError):
        qubit_state(Hypothesis.H2, 1.5, 0.1)


def test_second_order_positivity_guard():
    with pytest.raises(ValidityDomainError):
        qubit_state(Hypothesis.H2, 0.0, 0.5, PsfKind.SINC, sinc_convention="derived")


def test_unequal_weights_map_to_effective_separation():
    uneven = qubit_state(Hypothesis.H2, 0.1, 0.3, weight=0.2).matrix
    equal = qubit_state(Hypothesis.H2, 0.1, 2 * 0.3 * math.sqrt(0.2 * 0.8)).matrix
    assert np.allclose(uneven, equal)


def test_invalid_state_rejected():
    with pytest.raises(ValidityDomainError):
        QubitState(np.eye(2))
    with pytest.raises(ValidityDomainError):
        QubitState(np.array([[1.2, 0.0], [0.0, -0.2]]))


def test_state_is_read_only_copy():
    src = np.array([[0.7, 0.1], [0.1, 0.3]])
    state = QubitState(src)
    src[0, 0] = 0.0
    assert state.matrix[0, 0] == 0.7
    with pytest.raises(ValueError):
        state.matrix[0, 0] = 1.0


def test_bloch_round_trip():
    m = qubit_state(Hypothesis.H2, 0.3, 0.4).matrix
    r = bloch_vector(m)
    assert np.linalg.norm(r) <= 1.0
    assert np.allclose(from_bloch(r), m)


@pytest.mark.parametrize("kind", list(PsfKind))
def test_eigendecomposition_reconstructs_state(kind):
    eig = eigendecompose_two_source(0.25, 0.3, kind)
    m = qubit_state(Hypothesis.H2, 0.25, 0.3, kind).matrix
    assert np.allclose(eig.reconstruct(), m)
    assert eig.mu1 == pytest.approx(width_factor(kind) ** 2 * 0.09)
    assert eig.psi1 @ eig.psi2 == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("kind", list(PsfKind))
def test_gamma_closed_form(kind):
    rho1 = qubit_state(Hypothesis.H1, 0.1, 0.0, kind).matrix
    rho2 = qubit_state(Hypothesis.H2, 0.2, 0.3, kind).matrix
    gamma = gamma_matrix(0.1, 0.2, 0.3, kind).matrix
    assert np.allclose(gamma, 0.5 * (rho2 - rho1), atol=1e-14)
    assert np.trace(gamma) == pytest.approx(0.0, abs=1e-15)


def test_sld_theta_eigenvectors_are_orthonormal():
    plus, minus = sld_theta_eigenvectors(0.3)
    assert plus @ plus == pytest.approx(1.0)
    assert minus @ minus == pytest.approx(1.0)
    assert plus @ minus == pytest.approx(0.0, abs=1e-15)
