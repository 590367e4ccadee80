# src/analysis/estimation.py
"""
Estimation of (θ, ε) = (centroid misalignment, half separation) in units of σ.

  sld_operators / qfi_matrix       closed forms on the second-order two-source state
  cfi_matrix                       Σ_y ∂p∂p/p with Richardson central differences
  small_sep_coefficient            C(θ) = lim F_εε/ε² = Σ_y p_y''(0)²/p_y(0)
  min_resolvable_separation        ε solving ε·√(n·F_εε) = 1
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.analysis.search import bisect_root
from src.config import numerics
from src.errors import SingularityError, ValidityDomainError
from src.logger import event, get_logger
from src.measurements.povm import (
    BUCKET,
    Measurement,
    Povm,
    Representation,
    build_povm,
    outcome_distribution,
)
from src.optics.psf import Hypothesis, PsfKind, Scenario
from src.optics.qubit_model import (
    SIGMA_X,
    StateConvention,
    eigendecompose_two_source,
    width_factor,
)

logger = get_logger(__name__)

FISHER_SYM_TOL = 1e-10
FISHER_PSD_TOL = 1e-9

# Closed form for Sinc ROTADE as published alongside the aperture analysis:
# ε_min ≈ θ^(3/2) / (n^(1/4)·√(5√27)). The qubit model itself yields 108^(1/4).
SINC_ROTADE_PUBLISHED_CONSTANT = math.sqrt(5.0 * math.sqrt(27.0))


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class FisherMatrix:
    """2x2 information matrix in parameter order (θ, ε)."""

    m: np.ndarray
    excluded: Tuple[str, ...] = ()
    divergent: bool = False

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (2, 2):
            raise ValidityDomainError(f"Fisher matrix must be 2x2, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > FISHER_SYM_TOL * scale:
            raise ValidityDomainError("Fisher matrix is not symmetric")
        if np.linalg.eigvalsh(m)[0] < -FISHER_PSD_TOL * scale:
            raise ValidityDomainError("Fisher matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def theta_theta(self) -> float:
        return float(self.m[0, 0])

    @property
    def eps_eps(self) -> float:
        return float(self.m[1, 1])

    @property
    def off_diagonal(self) -> float:
        return float(self.m[0, 1])

    def cramer_rao_bound(self) -> np.ndarray:
        return np.linalg.inv(self.m)


@dataclass(frozen=True)
class SldPair:
    """SLDs in the {ψ1, ψ2} eigenbasis; `basis` holds ψ1, ψ2 as columns."""

    l_theta: np.ndarray
    l_eps: np.ndarray
    basis: np.ndarray = field(repr=False)

    def in_computational_basis(self) -> Tuple[np.ndarray, np.ndarray]:
        u = self.basis
        return u @ self.l_theta @ u.T, u @ self.l_eps @ u.T


# -------------------------------------------------------------------
# Quantum side
# -------------------------------------------------------------------

def _require_separation(eps: float):
    if eps == 0.0:
        raise SingularityError("separation SLD is singular at eps = 0; use the eps -> 0+ limit")
    if eps < 0.0:
        raise ValidityDomainError(f"separation must be positive, got eps={eps}")


def sld_operators(theta: float, eps: float, kind=PsfKind.GAUSSIAN, sinc_convention: str = "paper") -> SldPair:
    """
    L_θ = 2k(1 - 2k²ε²)σx,  L_ε = diag(2/ε, 2k²ε/(k²ε² - 1)),  both in the eigenbasis.
    Gaussian (k = 1/2): L_θ = (1 - ε²/2)σx, L_ε = diag(2/ε, 2ε/(ε² - 4)).
    """
    _require_separation(eps)
    eig = eigendecompose_two_source(theta, eps, kind, sinc_convention)
    k = width_factor(kind, sinc_convention)
    l_theta = 2.0 * k * (1.0 - 2.0 * k * k * eps * eps) * SIGMA_X
    l_eps = np.diag([2.0 / eps, 2.0 * k * k * eps / (k * k * eps * eps - 1.0)])
    return SldPair(l_theta=l_theta, l_eps=l_eps, basis=np.column_stack([eig.psi1, eig.psi2]))


def qfi_matrix(theta: float, eps: float, kind=PsfKind.GAUSSIAN, order: str = "second",
               sinc_convention: str = "paper") -> FisherMatrix:
    """
    order="second": the closed bound, diag(4k²(1-4k²ε²), 4k²(1+k²ε²)); for the
                    Gaussian its inverse is diag(1/(1-ε²), 1/(1+ε²/4)).
    order="exact":  Tr(ρ{L_i, L_j})/2 on the second-order state, which the closed
                    bound expands to O(ε²): diag(4k²(1-2k²ε²)², 4k²/(1-k²ε²)).
                    Use it wherever a CFI of the same qubit states is compared.
    """
    k = width_factor(kind, sinc_convention)
    if order == "second":
        if eps < 0:
            raise ValidityDomainError(f"separation must be >= 0, got eps={eps}")
        k2 = k * k
        return FisherMatrix(np.diag([4 * k2 * (1 - 4 * k2 * eps * eps), 4 * k2 * (1 + k2 * eps * eps)]))
    if order != "exact":
        raise ValidityDomainError(f"unknown QFI order '{order}'")

    sld = sld_operators(theta, eps, kind, sinc_convention)
    eig = eigendecompose_two_source(theta, eps, kind, sinc_convention)
    rho = np.diag([eig.mu1, eig.mu2])
    ops = (sld.l_theta, sld.l_eps)
    m = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            m[i, j] = 0.5 * np.trace(rho @ (ops[i] @ ops[j] + ops[j] @ ops[i]))
    return FisherMatrix(m)


def full_model_separation_qfi(kind=PsfKind.GAUSSIAN) -> float:
    """Separation QFI of two incoherent equal sources, 4σ²∫|Ψ'|² (1 for the Gaussian)."""
    k = width_factor(kind, "derived")
    return 4.0 * k * k


def weak_commutation_check(theta: float, eps: float, kind=PsfKind.GAUSSIAN, sinc_convention: str = "paper") -> float:
    """Tr(ρ[L_θ, L_ε]) in the computational basis; joint attainability needs it to vanish."""
    sld = sld_operators(theta, eps, kind, sinc_convention)
    l_theta, l_eps = sld.in_computational_basis()
    eig = eigendecompose_two_source(theta, eps, kind, sinc_convention)
    rho = eig.reconstruct()
    return float(np.trace(rho @ (l_theta @ l_eps - l_eps @ l_theta)))


# -------------------------------------------------------------------
# Classical side
# -------------------------------------------------------------------

def _two_source_probs(povm: Povm, scenario: Scenario, theta: float, eps: float, representation,
                      convention) -> np.ndarray:
    moved = scenario.with_params(theta=theta, eps=eps)
    return outcome_distribution(povm, moved, Hypothesis.H2, representation, convention).probs


def _richardson_gradient(prob_fn, x: float, h: float) -> np.ndarray:
    def central(step):
        return (prob_fn(x + step) - prob_fn(x - step)) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def cfi_matrix(povm: Povm, scenario: Scenario, representation=Representation.FULL_MODEL,
               include_bucket: bool = True, convention=StateConvention.SECOND_ORDER,
               step: Optional[float] = None) -> FisherMatrix:
    """
    Classical Fisher matrix of the two-source outcome distribution in (θ, ε), θ being the
    centroid misalignment. Outcomes with p below the probability floor are excluded and
    reported; a nonzero derivative there marks the matrix divergent.
    With include_bucket=False only detected outcomes contribute.
    """
    h = numerics("fd_step") if step is None else step
    floor = numerics("probability_floor")
    theta, eps = scenario.thetac, scenario.eps

    dist = outcome_distribution(povm, scenario, Hypothesis.H2, representation, convention)
    p, labels = dist.probs, dist.labels
    grad_theta = _richardson_gradient(
        lambda t: _two_source_probs(povm, scenario, t, eps, representation, convention), theta, h)
    grad_eps = _richardson_gradient(
        lambda e: _two_source_probs(povm, scenario, theta, e, representation, convention), eps, h)

    m = np.zeros((2, 2))
    excluded, divergent = [], False
    for i, label in enumerate(labels):
        if label == BUCKET and not include_bucket:
            continue
        if p[i] < floor:
            excluded.append(label)
            if max(abs(grad_theta[i]), abs(grad_eps[i])) > math.sqrt(floor):
                divergent = True
            continue
        g = np.array([grad_theta[i], grad_eps[i]])
        m += np.outer(g, g) / p[i]

    if excluded:
        event(logger, "cfi_excluded_outcomes", povm=povm.name, theta=theta, eps=eps,
              excluded=excluded, divergent=divergent)
        if divergent:
            logger.warning("CFI of %s at theta=%g eps=%g: outcomes %s have p~0 with nonzero slope",
                           povm.name, theta, eps, excluded)
    return FisherMatrix(m, excluded=tuple(excluded), divergent=divergent)


def _prepare(measurement, theta: float, kind, representation, sinc_convention: str,
             rotade_convention: Optional[str]):
    scenario = Scenario.from_dimensionless(theta, theta, 0.0, kind, sinc_convention=sinc_convention)
    angle_convention = rotade_convention or sinc_convention
    povm = build_povm(measurement, theta=theta, kind=kind, sinc_convention=angle_convention)
    return scenario, povm


def separation_cfi(measurement, theta: float, eps: float, kind=PsfKind.GAUSSIAN,
                   representation=Representation.FULL_MODEL, convention=StateConvention.EXACT,
                   sinc_convention: str = "paper", include_bucket: bool = True,
                   rotade_convention: Optional[str] = None) -> float:
    """F_εε of a named measurement tuned (for ROTADE) to the known misalignment θ."""
    scenario, povm = _prepare(measurement, theta, kind, representation, sinc_convention, rotade_convention)
    return cfi_matrix(povm, scenario.with_params(eps=eps), representation, include_bucket, convention).eps_eps


def small_sep_coefficient(measurement, theta: float, kind=PsfKind.GAUSSIAN,
                          representation=Representation.FULL_MODEL, convention=StateConvention.EXACT,
                          sinc_convention: str = "paper", rotade_convention: Optional[str] = None) -> float:
    """
    C(θ) = lim_{ε→0} F_εε/ε² = Σ_y p_y''(0)²/p_y(0), with p'' from second differences
    2(p(h) - p(0))/h² Richardson-extrapolated over the configured ε ladder.
    An outcome with p(0) = 0 but p'' ≠ 0 makes C infinite (F_εε stays finite as ε → 0).
    """
    if not 0.0 < theta <= 0.5:
        raise ValidityDomainError(f"small-separation coefficient needs theta in (0, 0.5], got {theta}")
    scenario, povm = _prepare(measurement, theta, kind, representation, sinc_convention, rotade_convention)

    def probs(e):
        return _two_source_probs(povm, scenario, theta, e, representation, convention)

    p0 = probs(0.0)
    ladder = sorted(numerics("small_sep_eps"), reverse=True)
    second = [2.0 * (probs(h) - p0) / (h * h) for h in ladder]
    # D(h) = p'' + a h² + b h⁴ for a ladder halving h
    first_pass = [(4.0 * second[i + 1] - second[i]) / 3.0 for i in range(len(second) - 1)]
    p2 = (16.0 * first_pass[-1] - first_pass[0]) / 15.0 if len(first_pass) > 1 else first_pass[0]

    def coefficient(curv):
        total = 0.0
        for p_y, c_y in zip(p0, curv):
            if p_y > 0.0:
                total += c_y * c_y / p_y
            elif abs(c_y) > 1e-8:
                return math.inf
        return total

    value = coefficient(p2)
    check = coefficient(first_pass[-1])
    if math.isinf(value):
        logger.warning("C(theta=%g) for %s is infinite: an outcome is dark at eps=0", theta, povm.name)
    elif abs(check - value) > 1e-3 * abs(value):
        logger.warning("C(theta=%g) for %s: Richardson estimates disagree (%.6g vs %.6g)",
                       theta, povm.name, check, value)
        event(logger, "small_sep_not_converged", measurement=povm.name, theta=theta, value=value, check=check)
    logger.debug("small_sep_coefficient %s theta=%g kind=%s -> %.10g", povm.name, theta, PsfKind(kind).value, value)
    return value


# -------------------------------------------------------------------
# Minimal resolvable separation
# -------------------------------------------------------------------

def min_resolvable_separation(measurement, theta: float, n: int, kind=PsfKind.GAUSSIAN,
                              method: str = "exact", representation=Representation.FULL_MODEL,
                              convention=StateConvention.EXACT, sinc_convention: str = "paper",
                              rotade_convention: Optional[str] = None) -> float:
    """
    Smallest ε with ε·√(n·F_εε(ε)) = 1, by bisection on (0, 1].

    method="series" uses the small-separation model F_εε = C(θ)ε², giving (nC)^(-1/4);
    method="exact" uses the finite-difference F_εε of the chosen representation.
    """
    if n < 1:
        raise ValidityDomainError(f"photon number must be >= 1, got {n}")
    if not 0.0 <= theta <= 0.5:
        raise ValidityDomainError(f"theta must lie in [0, 0.5], got {theta}")
    lo = 1e-4

    if method == "series":
        c = small_sep_coefficient(measurement, theta, kind, representation, convention,
                                  sinc_convention, rotade_convention)
        if math.isinf(c):
            raise ValidityDomainError("series model undefined for an infinite small-separation coefficient")
        root = bisect_root(lambda e: e * math.sqrt(n * c) * e - 1.0, 0.0, 1.0, label="eps_min(series)")
    elif method == "exact":
        def snr_gap(e):
            f = separation_cfi(measurement, theta, e, kind, representation, convention, sinc_convention,
                               rotade_convention=rotade_convention)
            return e * math.sqrt(n * f) - 1.0

        root = bisect_root(snr_gap, lo, 1.0, label="eps_min(exact)")
    else:
        raise ValidityDomainError(f"unknown eps_min method '{method}'")

    event(logger, "eps_min", measurement=Measurement(measurement).value, theta=theta, n=n,
          kind=PsfKind(kind).value, method=method, eps_min=root)
    return root


def asymptotic_min_separation(measurement, theta: float, n: int, kind=PsfKind.GAUSSIAN,
                              sinc_convention: str = "paper") -> float:
    """
    Small-misalignment closed forms from 1/C(θ) at leading order:
      ROTADE           1/C = k²θ⁶/36    (Gaussian: θ⁶/144)
      SPADE01, B-SPADE 1/C = θ²/(4k²)   (Gaussian: θ²)
    """
    k = width_factor(kind, sinc_convention)
    m = Measurement(measurement)
    if m is Measurement.ROTADE:
        inv_c = k * k * theta ** 6 / 36.0
    elif m in (Measurement.SPADE01, Measurement.BSPADE):
        inv_c = theta * theta / (4.0 * k * k)
    else:
        raise ValidityDomainError(f"no closed form for measurement '{m.value}'")
    return (inv_c / n) ** 0.25


def published_sinc_rotade_min_separation(theta: float, n: int) -> float:
    return theta ** 1.5 / (n ** 0.25 * SINC_ROTADE_PUBLISHED_CONSTANT)


def fisher_summary(measurement, theta: float, eps: float, kind=PsfKind.GAUSSIAN,
                   representation=Representation.FULL_MODEL, convention=StateConvention.SECOND_ORDER,
                   sinc_convention: str = "paper", include_bucket: bool = True) -> Dict[str, float]:
    """One sweep row: CFI entries of the measurement next to the quantum references."""
    scenario, povm = _prepare(measurement, theta, kind, representation, sinc_convention, None)
    f = cfi_matrix(povm, scenario.with_params(eps=eps), representation, include_bucket, convention)
    qfi = qfi_matrix(theta, eps, kind, "exact", sinc_convention)
    return {
        "cfi_theta_theta": f.theta_theta,
        "cfi_eps_eps": f.eps_eps,
        "cfi_theta_eps": f.off_diagonal,
        "qfi_theta_theta": qfi.theta_theta,
        "qfi_eps_eps": qfi.eps_eps,
        "qfi_full_model_eps_eps": full_model_separation_qfi(kind),
        "excluded": ";".join(f.excluded),
        "divergent": f.divergent,
    }
