# src/optics/qubit_model.py
"""
Two-level model of the one- and two-source states on span{|0>, |1>}, where
|0> is the PSF centred on the demultiplexer reference and |1> its normalised
spatial derivative.

All closed forms are written in terms of the width factor k = σ√𝒩:
    Gaussian             k = 1/2
    Sinc, "paper"        k = 1/√3
    Sinc, "derived"      k = π/√3   (∫|Ψ'|² of the sinc amplitude)

Two state conventions are exposed:
    "exact"         normalised projection of the first-order Taylor states
    "second_order"  Bloch vector (1 - 2k²ε²)(-sin 2kθ, 0, cos 2kθ), the form whose
                    eigenvectors are the rotated demultiplexer modes
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.config import numerics
from src.errors import ValidityDomainError
from src.logger import get_logger
from src.optics.psf import Hypothesis, PsfKind

logger = get_logger(__name__)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IDENTITY = np.eye(2)

STATE_TOL = 1e-12


class StateConvention(str, Enum):
    EXACT = "exact"
    SECOND_ORDER = "second_order"


def width_factor(kind, sinc_convention: str = "paper") -> float:
    kind = PsfKind(kind)
    if kind is PsfKind.GAUSSIAN:
        return 0.5
    if sinc_convention == "paper":
        return 1.0 / math.sqrt(3.0)
    if sinc_convention == "derived":
        return math.pi / math.sqrt(3.0)
    raise ValidityDomainError(f"unknown sinc convention '{sinc_convention}'")


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class QubitState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (2, 2):
            raise ValidityDomainError(f"qubit state must be 2x2, got {m.shape}")
        if np.max(np.abs(m - m.T)) > STATE_TOL:
            raise ValidityDomainError("qubit state is not Hermitian")
        if abs(np.trace(m) - 1.0) > STATE_TOL:
            raise ValidityDomainError(f"qubit state trace {np.trace(m):.15g} != 1")
        if np.linalg.eigvalsh(m)[0] < -STATE_TOL:
            raise ValidityDomainError("qubit state has a negative eigenvalue; parameters outside the model")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def bloch(self) -> np.ndarray:
        return bloch_vector(self)


@dataclass(frozen=True)
class QubitEigen:
    mu1: float
    mu2: float
    psi1: np.ndarray
    psi2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.mu1 * np.outer(self.psi1, self.psi1) + self.mu2 * np.outer(self.psi2, self.psi2)


@dataclass(frozen=True)
class HelstromGamma:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if abs(np.trace(m)) > STATE_TOL or np.max(np.abs(m - m.T)) > STATE_TOL:
            raise ValidityDomainError("Helstrom operator must be real symmetric and traceless")
        object.__setattr__(self, "matrix", m)


# -------------------------------------------------------------------
# Construction
# -------------------------------------------------------------------

def _check_domain(theta: float, eps: float):
    if abs(theta) > numerics("validity_theta") or abs(eps) > numerics("validity_eps"):
        raise ValidityDomainError(f"(theta={theta}, eps={eps}) outside the qubit-model domain |θ|<=1, ε<=1")


def rotated_pair(theta: float, k: float):
    """(ψ1, ψ2): ψ1 carries the separation signal, ψ2 is the one-source direction."""
    a = k * theta
    return np.array([math.sin(a), math.cos(a)]), np.array([-math.cos(a), math.sin(a)])


def second_order_matrix(theta: float, eps: float, k: float) -> np.ndarray:
    """Unvalidated second-order two-source matrix; even in eps."""
    mu1 = k * k * eps * eps
    psi1, psi2 = rotated_pair(theta, k)
    return mu1 * np.outer(psi1, psi1) + (1.0 - mu1) * np.outer(psi2, psi2)


def exact_matrix(theta: float, eps: float, k: float) -> np.ndarray:
    """Unvalidated normalised first-order Taylor matrix; even in eps."""
    b = -k * theta
    c = k * k * (theta * theta + eps * eps)
    return np.array([[1.0, b], [b, c]]) / (1.0 + c)


def qubit_state(hypothesis, theta: float, eps: float = 0.0, kind=PsfKind.GAUSSIAN,
                convention=StateConvention.SECOND_ORDER, sinc_convention: str = "paper",
                weight: float = 0.5) -> QubitState:
    """
    Density matrix of H1 (eps ignored) or H2 in the {|0>, |1>} basis.

    A pair with weights (w, 1-w) and half-separation ε has the same qubit moments
    as an equal pair with ε_eff = 2ε√(w(1-w)).
    """
    hyp = Hypothesis(hypothesis)
    convention = StateConvention(convention)
    if eps < 0:
        raise ValidityDomainError(f"separation must be >= 0, got eps={eps}")
    if not 0.0 <= weight <= 1.0:
        raise ValidityDomainError(f"intensity weight must lie in [0, 1], got w={weight}")
    k = width_factor(kind, sinc_convention)
    eff = 0.0 if hyp is Hypothesis.H1 else 2.0 * eps * math.sqrt(weight * (1.0 - weight))

    if convention is StateConvention.EXACT:
        return QubitState(exact_matrix(theta, eff, k))

    _check_domain(theta, eps)
    if 2.0 * k * k * eff * eff > 1.0:
        raise ValidityDomainError(
            f"second-order state not positive: 2k²ε² = {2 * k * k * eff * eff:.4g} > 1 (kind={PsfKind(kind).value})"
        )
    return QubitState(second_order_matrix(theta, eff, k))


def bloch_vector(state) -> np.ndarray:
    m = state.matrix if isinstance(state, QubitState) else np.asarray(state)
    return np.real(np.array([np.trace(SIGMA_X @ m), np.trace(SIGMA_Y @ m), np.trace(SIGMA_Z @ m)]))


def from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return np.real(0.5 * (IDENTITY + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z))


def eigendecompose_two_source(theta: float, eps: float, kind=PsfKind.GAUSSIAN,
                              sinc_convention: str = "paper") -> QubitEigen:
    """Eigenpairs of the second-order two-source state: μ1 = k²ε², ψ1 = (sin kθ, cos kθ)."""
    _check_domain(theta, eps)
    k = width_factor(kind, sinc_convention)
    mu1 = k * k * eps * eps
    psi1, psi2 = rotated_pair(theta, k)
    return QubitEigen(mu1=mu1, mu2=1.0 - mu1, psi1=psi1, psi2=psi2)


def gamma_matrix(theta0: float, thetac: float, eps: float, kind=PsfKind.GAUSSIAN,
                 sinc_convention: str = "paper") -> HelstromGamma:
    """Γ = (ρ2(θc, ε) - ρ1(θ0)) / 2 for second-order states, in closed form."""
    for t in (theta0, thetac):
        _check_domain(t, eps)
    k = width_factor(kind, sinc_convention)
    shrink = 1.0 - 2.0 * k * k * eps * eps
    two_source = shrink * (-math.sin(2 * k * thetac) * SIGMA_X + math.cos(2 * k * thetac) * SIGMA_Z)
    one_source = -math.sin(2 * k * theta0) * SIGMA_X + math.cos(2 * k * theta0) * SIGMA_Z
    return HelstromGamma(0.25 * (two_source - one_source))


def sld_theta_eigenvectors(theta: float, kind=PsfKind.GAUSSIAN, sinc_convention: str = "paper"):
    """Eigenvectors (θ+, θ-) of the misalignment SLD, (ψ1 ± ψ2)/√2 in the {|0>, |1>} basis."""
    k = width_factor(kind, sinc_convention)
    psi1, psi2 = rotated_pair(theta, k)
    return (psi1 + psi2) / math.sqrt(2.0), (psi1 - psi2) / math.sqrt(2.0)
