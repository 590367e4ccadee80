# src/optics/psf.py
"""
Point-spread functions, demultiplexer modes and overlap integrals.

Two routes compute every overlap ⟨Φn(xR)|Ψ(z)⟩:
  - mode_overlap: adaptive quadrature (position space for Gaussian integrands,
    Fourier domain for the Sinc aperture). This is the reference route.
  - mode_amplitudes: closed forms (displaced-Gaussian / spherical Bessel) plus the
    untruncated residual mass, used by every probability evaluation.

Mode-space operators act on span{Φ0..ΦM}; an effect additionally carries a scalar
`tail` weight describing how it acts on the orthogonal complement (1 for the bucket,
0 for projectors inside the monitored modes).
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

import numpy as np
from scipy import integrate, special

from src.config import numerics
from src.errors import (
    IncompatibleRepresentationError,
    NegativeProbabilityError,
    QuadratureError,
    UnsupportedOrderError,
    ValidityDomainError,
)
from src.logger import get_logger

logger = get_logger(__name__)


# -------------------------------------------------------------------
# Enumerations
# -------------------------------------------------------------------

class PsfKind(str, Enum):
    GAUSSIAN = "gaussian"
    SINC = "sinc"


class BasisKind(str, Enum):
    HERMITE_GAUSS = "hermite_gauss"
    DERIVATIVE_PAIR = "derivative_pair"


class Hypothesis(str, Enum):
    H1 = "H1"  # one source at x0
    H2 = "H2"  # two sources around xc


# -------------------------------------------------------------------
# Domain types
# -------------------------------------------------------------------

@dataclass(frozen=True)
class PsfModel:
    kind: PsfKind = PsfKind.GAUSSIAN
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PsfKind(self.kind))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValidityDomainError(f"PSF width must be positive and finite, got sigma={self.sigma}")


@dataclass(frozen=True)
class Scenario:
    """
    Physical configuration. `separation` is d: sources sit at
    x1 = xc - 2(1-w)d and x2 = xc + 2wd (full separation 2d, intensity-weighted
    centroid xc, source 1 carrying weight w).
    """

    psf: PsfModel
    separation: float = 0.0
    weight: float = 0.5
    x_ref: float = 0.0
    x_single: float = 0.0
    x_centroid: float = 0.0
    sinc_convention: str = "paper"

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValidityDomainError(f"intensity weight must lie in [0, 1], got w={self.weight}")
        for name in ("separation", "x_ref", "x_single", "x_centroid"):
            if not math.isfinite(getattr(self, name)):
                raise ValidityDomainError(f"{name} must be finite")
        if self.sinc_convention not in ("paper", "derived"):
            raise ValidityDomainError(f"unknown sinc convention '{self.sinc_convention}'")

    @classmethod
    def from_dimensionless(cls, theta0: float, thetac: float, eps: float, kind="gaussian",
                           sigma: float = 1.0, weight: float = 0.5, x_ref: float = 0.0,
                           sinc_convention: str = "paper") -> "Scenario":
        psf = PsfModel(PsfKind(kind), sigma)
        return cls(psf=psf, separation=eps * sigma, weight=weight, x_ref=x_ref,
                   x_single=x_ref + theta0 * sigma, x_centroid=x_ref + thetac * sigma,
                   sinc_convention=sinc_convention)

    @property
    def theta0(self) -> float:
        return (self.x_single - self.x_ref) / self.psf.sigma

    @property
    def thetac(self) -> float:
        return (self.x_centroid - self.x_ref) / self.psf.sigma

    @property
    def eps(self) -> float:
        return self.separation / self.psf.sigma

    def source_positions(self) -> Tuple[float, float]:
        d, w = self.separation, self.weight
        return self.x_centroid - 2.0 * (1.0 - w) * d, self.x_centroid + 2.0 * w * d

    def with_params(self, theta: float = None, eps: float = None) -> "Scenario":
        """Copy with θ (applied to both x0 and xc) and/or ε replaced."""
        sigma = self.psf.sigma
        kw = {}
        if theta is not None:
            kw["x_single"] = kw["x_centroid"] = self.x_ref + theta * sigma
        if eps is not None:
            kw["separation"] = eps * sigma
        return replace(self, **kw)


@dataclass(frozen=True)
class ModeBasis:
    kind: BasisKind = BasisKind.DERIVATIVE_PAIR
    x_ref: float = 0.0
    max_index: int = 20

    def __post_init__(self):
        object.__setattr__(self, "kind", BasisKind(self.kind))
        if self.max_index < 1:
            raise ValidityDomainError(f"max_index must be >= 1, got {self.max_index}")

    @property
    def dim(self) -> int:
        return self.max_index + 1


# -------------------------------------------------------------------
# PSF amplitudes
# -------------------------------------------------------------------

def psf_amplitude(model: PsfModel, x, z: float = 0.0):
    """Real amplitude Ψ(x - z); vectorised over x."""
    u = np.asarray(x, dtype=float) - z
    s = model.sigma
    if model.kind is PsfKind.GAUSSIAN:
        return (2.0 * math.pi * s * s) ** -0.25 * np.exp(-u * u / (4.0 * s * s))
    return s ** -0.5 * np.sinc(u / s)


def psf_norm(model: PsfModel) -> float:
    """∫|Ψ|² by quadrature; Sinc via Plancherel on its compact aperture."""
    tol = numerics("quad_abs_tol")
    if model.kind is PsfKind.GAUSSIAN:
        w = numerics("gaussian_window_sigmas") * model.sigma
        val, err = integrate.quad(lambda x: psf_amplitude(model, x) ** 2, -w, w,
                                  epsabs=tol, epsrel=numerics("quad_rel_tol"), points=[0.0])
    else:
        cutoff = math.pi / model.sigma
        spectral = model.sigma / (2.0 * math.pi)
        val, err = integrate.quad(lambda k: spectral, -cutoff, cutoff, epsabs=tol)
    logger.trace("psf_norm kind=%s sigma=%s -> %.15g (err %.2g)", model.kind.value, model.sigma, val, err)
    return val


# -------------------------------------------------------------------
# Hermite-Gauss modes
# -------------------------------------------------------------------

def hermite_poly(n: int, alpha):
    """Physicists' Hermite polynomial by H_{k+1} = 2αH_k - 2kH_{k-1}."""
    max_order = numerics("hermite_max_order")
    if n < 0:
        raise ValidityDomainError(f"Hermite order must be >= 0, got {n}")
    if n > max_order:
        raise UnsupportedOrderError(f"Hermite order {n} exceeds supported maximum {max_order}")
    alpha = np.asarray(alpha, dtype=float)
    h_prev, h = np.ones_like(alpha), 2.0 * alpha
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, n):
        h_prev, h = h, 2.0 * alpha * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hg_mode_amplitude(n: int, x_ref: float, sigma: float, x):
    """
    Φn(x) = (2πσ²)^(-1/4) (2ⁿn!)^(-1/2) Hn(u) exp(-u²/2), u = (x - xR)/(√2σ).
    Evaluated through the normalised Hermite-function recurrence so high orders stay finite.
    """
    if n > numerics("hermite_max_order"):
        raise UnsupportedOrderError(f"mode order {n} exceeds supported maximum")
    u = (np.asarray(x, dtype=float) - x_ref) / (math.sqrt(2.0) * sigma)
    f_prev = (2.0 * math.pi * sigma * sigma) ** -0.25 * np.exp(-u * u / 2.0)
    if n == 0:
        return f_prev
    f = math.sqrt(2.0) * u * f_prev
    for k in range(1, n):
        f_prev, f = f, math.sqrt(2.0 / (k + 1)) * u * f - math.sqrt(k / (k + 1)) * f_prev
    return f


def _mode_sign(basis: ModeBasis, n: int) -> float:
    # derivative-pair modes follow |1> ∝ +Ψ', i.e. (-1)^n relative to Hermite-Gauss
    return (-1.0) ** n if basis.kind is BasisKind.DERIVATIVE_PAIR else 1.0


# -------------------------------------------------------------------
# Quadrature overlaps (reference route)
# -------------------------------------------------------------------

def _checked_quad(func, a, b, label, **kw):
    tol = numerics("quad_abs_tol")
    val, err = integrate.quad(func, a, b, epsabs=tol, epsrel=numerics("quad_rel_tol"),
                              limit=numerics("quad_limit"), **kw)
    if err > numerics("quad_fail_tol"):
        raise QuadratureError(f"{label}: quadrature error estimate {err:.3g} above tolerance", err)
    return val


def _sinc_legendre_overlap(n: int, a: float) -> float:
    """Fourier-domain overlap of the n-th aperture Legendre mode with a sinc displaced by a = πδ/σ."""
    def leg(t):
        return special.eval_legendre(n, t)

    if n % 2 == 0:
        integral = _checked_quad(lambda t: leg(t) * math.cos(a * t), -1.0, 1.0, f"sinc overlap n={n}")
        phase = (-1.0) ** (n // 2)
    else:
        integral = _checked_quad(lambda t: leg(t) * math.sin(a * t), -1.0, 1.0, f"sinc overlap n={n}")
        phase = (-1.0) ** ((n + 1) // 2)
    return phase * math.sqrt(2 * n + 1) / 2.0 * integral


def mode_overlap(basis: ModeBasis, n: int, model: PsfModel, z: float) -> float:
    """⟨Φn(xR)|Ψ(z)⟩ by adaptive quadrature."""
    if not math.isfinite(z - basis.x_ref):
        raise ValidityDomainError("displacement must be finite")
    if n < 0 or n > basis.max_index:
        raise ValidityDomainError(f"mode index {n} outside basis 0..{basis.max_index}")
    s = model.sigma

    if model.kind is PsfKind.SINC and basis.kind is BasisKind.DERIVATIVE_PAIR:
        val = _sinc_legendre_overlap(n, math.pi * (z - basis.x_ref) / s)
    else:
        win = numerics("gaussian_window_sigmas") * s
        if model.kind is PsfKind.GAUSSIAN:
            lo, hi = min(basis.x_ref, z) - win, max(basis.x_ref, z) + win
        else:
            # Hermite-Gauss envelope bounds the integrand
            lo, hi = basis.x_ref - win, basis.x_ref + win
        pts = sorted(p for p in {basis.x_ref, z} if lo < p < hi)
        val = _checked_quad(
            lambda x: hg_mode_amplitude(n, basis.x_ref, s, x) * psf_amplitude(model, x, z),
            lo, hi, f"mode overlap n={n}", points=pts,
        ) * _mode_sign(basis, n)

    logger.trace("mode_overlap basis=%s n=%d kind=%s z=%.6g -> %.15g",
                 basis.kind.value, n, model.kind.value, z, val)
    return float(val)


# -------------------------------------------------------------------
# Closed-form amplitudes (working route)
# -------------------------------------------------------------------

def _sinc_tail(first: int, a: float) -> float:
    extra = max(60, int(2 * abs(a)) + 40)
    orders = np.arange(first, first + extra)
    return float(np.sum((2 * orders + 1) * special.spherical_jn(orders, a) ** 2))


def mode_amplitudes(basis: ModeBasis, model: PsfModel, z: float) -> Tuple[np.ndarray, float]:
    """
    Returns (amplitudes c_0..c_M, residual) where residual = Σ_{n>M} |c_n|²
    is the untruncated mass falling outside the basis.
    """
    m = basis.max_index
    s = model.sigma
    delta = z - basis.x_ref

    if model.kind is PsfKind.GAUSSIAN:
        alpha = delta / (2.0 * s)
        q = alpha * alpha
        amps = np.empty(m + 1)
        amps[0] = math.exp(-q / 2.0)
        for n in range(1, m + 1):
            amps[n] = amps[n - 1] * alpha / math.sqrt(n)
        if basis.kind is BasisKind.DERIVATIVE_PAIR:
            amps *= (-1.0) ** np.arange(m + 1)
        residual = float(special.gammainc(m + 1, q)) if q > 0 else 0.0
        return amps, residual

    if basis.kind is BasisKind.DERIVATIVE_PAIR:
        a = math.pi * delta / s
        orders = np.arange(m + 1)
        amps = (-1.0) ** orders * np.sqrt(2 * orders + 1) * special.spherical_jn(orders, a)
        return amps, _sinc_tail(m + 1, a)

    # Sinc light on Hermite-Gauss modes has no closed form
    amps = np.array([mode_overlap(basis, n, model, z) for n in range(m + 1)])
    return amps, max(0.0, 1.0 - float(amps @ amps))


# -------------------------------------------------------------------
# Mode-space states and Born rule
# -------------------------------------------------------------------

def mode_density_matrix(scenario: Scenario, hypothesis, basis: ModeBasis) -> Tuple[np.ndarray, float]:
    """Truncated density matrix of H1 (source at x0) or H2 (weighted pair) plus its residual mass."""
    hyp = Hypothesis(hypothesis)
    model = scenario.psf
    if hyp is Hypothesis.H1:
        c, r = mode_amplitudes(basis, model, scenario.x_single)
        return np.outer(c, c), r
    x1, x2 = scenario.source_positions()
    c1, r1 = mode_amplitudes(basis, model, x1)
    c2, r2 = mode_amplitudes(basis, model, x2)
    w = scenario.weight
    return w * np.outer(c1, c1) + (1.0 - w) * np.outer(c2, c2), w * r1 + (1.0 - w) * r2


def povm_outcome_probability(effect: np.ndarray, scenario: Scenario, hypothesis,
                             basis_kind=BasisKind.DERIVATIVE_PAIR, tail: float = 0.0,
                             x_ref: float = None) -> float:
    """
    Tr(E ρ) for a mode-space effect. `tail` is the effect's weight on modes beyond the
    truncation; the bucket and identity carry tail=1.
    """
    effect = np.asarray(effect, dtype=float)
    if effect.ndim != 2 or effect.shape[0] != effect.shape[1] or effect.shape[0] < 2:
        raise IncompatibleRepresentationError(f"effect must be a square mode-space matrix, got {effect.shape}")
    basis = ModeBasis(basis_kind, scenario.x_ref if x_ref is None else x_ref, effect.shape[0] - 1)
    rho, residual = mode_density_matrix(scenario, hypothesis, basis)
    return born_probability(effect, rho, tail, residual)


def born_probability(effect: np.ndarray, rho: np.ndarray, tail: float = 0.0, residual: float = 0.0) -> float:
    """Tr(E ρ) + tail · residual, clipped to [0, 1] after the negativity check."""
    p = float(np.sum(effect * rho)) + tail * residual
    if p < -numerics("negativity_tol"):
        raise NegativeProbabilityError(f"Born probability {p:.3g} < 0: effect matrix is not PSD")
    return min(max(p, 0.0), 1.0)
