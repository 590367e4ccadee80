# src/selftest.py
"""
Structural invariant suite behind `python -m src.main selftest`.

Each check returns one row: name, worst observed value, tolerance, passed.
"""
import time
from typing import Any, Callable, Dict, List

import numpy as np
import pandas as pd

from src.analysis.estimation import cfi_matrix, sld_operators, weak_commutation_check
from src.logger import get_logger, timing
from src.measurements.povm import (
    Measurement,
    PovmSpace,
    Representation,
    build_povm,
    helstrom_povm,
    rotade_povm,
)
from src.optics.psf import BasisKind, Hypothesis, ModeBasis, PsfKind, Scenario, mode_density_matrix
from src.optics.qubit_model import StateConvention, gamma_matrix, qubit_state, second_order_matrix, width_factor
from src.simulate.montecarlo import RunConfig, empirical_error_rate

logger = get_logger(__name__)

THETAS = (-0.5, -0.2, 0.0, 0.1, 0.3, 0.5)
EPSILONS = (0.05, 0.2, 0.4)
KINDS = (PsfKind.GAUSSIAN, PsfKind.SINC)


def _row(name: str, value: float, tolerance: float) -> Dict[str, Any]:
    return {"check": name, "value": float(value), "tolerance": tolerance, "passed": bool(value <= tolerance)}


def check_povm_completeness() -> Dict[str, Any]:
    worst = 0.0
    for space in (PovmSpace.MODE, PovmSpace.QUBIT):
        for m in (Measurement.ROTADE, Measurement.SPADE01, Measurement.BSPADE, Measurement.SPADE):
            povm = build_povm(m, theta=0.2, space=space, max_index=3)
            total = sum(e.matrix for e in povm.effects)
            worst = max(worst, float(np.max(np.abs(total - np.eye(povm.dim)))))
            for e in povm.effects:
                worst = max(worst, -float(np.linalg.eigvalsh(e.matrix)[0]))
    return _row("povm_completeness_positivity", worst, 1e-10)


def check_density_matrices() -> Dict[str, Any]:
    worst = 0.0
    for kind in KINDS:
        for theta in THETAS:
            for eps in EPSILONS:
                for conv in StateConvention:
                    m = qubit_state(Hypothesis.H2, theta, eps, kind, conv).matrix
                    worst = max(worst, abs(np.trace(m) - 1.0), float(np.max(np.abs(m - m.T))),
                                -float(np.linalg.eigvalsh(m)[0]))
                scenario = Scenario.from_dimensionless(theta, theta, eps, kind)
                for basis_kind in BasisKind:
                    rho, residual = mode_density_matrix(scenario, Hypothesis.H2, ModeBasis(basis_kind, 0.0))
                    worst = max(worst, abs(np.trace(rho) + residual - 1.0))
    return _row("density_matrix_invariants", worst, 1e-8)


def check_sld_equation(h: float = 1e-5) -> Dict[str, Any]:
    """dρ/dp against (Lρ + ρL)/2 for both parameters of the second-order state."""
    worst = 0.0
    for kind in KINDS:
        k = width_factor(kind)
        for theta in THETAS:
            for eps in EPSILONS:
                rho = second_order_matrix(theta, eps, k)
                l_theta, l_eps = sld_operators(theta, eps, kind).in_computational_basis()
                d_theta = (second_order_matrix(theta + h, eps, k) - second_order_matrix(theta - h, eps, k)) / (2 * h)
                d_eps = (second_order_matrix(theta, eps + h, k) - second_order_matrix(theta, eps - h, k)) / (2 * h)
                for d, op in ((d_theta, l_theta), (d_eps, l_eps)):
                    worst = max(worst, float(np.max(np.abs(d - 0.5 * (op @ rho + rho @ op)))))
    return _row("sld_defining_equation", worst, 1e-6)


def check_weak_commutation() -> Dict[str, Any]:
    worst = max(abs(weak_commutation_check(t, e, kind)) for kind in KINDS for t in THETAS for e in EPSILONS)
    return _row("weak_commutation", worst, 1e-10)


def check_helstrom_rotade() -> Dict[str, Any]:
    """Aligned hypotheses: Helstrom projectors coincide with the ROTADE pair."""
    worst = 0.0
    for kind in KINDS:
        for theta in THETAS:
            for eps in EPSILONS:
                hel = helstrom_povm(gamma_matrix(theta, theta, eps, kind))
                rot = rotade_povm(theta, kind, PovmSpace.QUBIT)
                worst = max(worst,
                            float(np.max(np.abs(hel.effect("helstrom:+").matrix - rot.effect("rot:1").matrix))),
                            float(np.max(np.abs(hel.effect("helstrom:-").matrix - rot.effect("rot:2").matrix))))
    return _row("helstrom_equals_rotade", worst, 1e-10)


def check_sigma_rescaling() -> Dict[str, Any]:
    worst = 0.0
    for kind in KINDS:
        povm = rotade_povm(0.2, kind, sinc_convention="derived")
        ref = cfi_matrix(povm, Scenario.from_dimensionless(0.2, 0.2, 0.3, kind, sigma=1.0)).m
        for sigma in (0.5, 2.5):
            other = cfi_matrix(povm, Scenario.from_dimensionless(0.2, 0.2, 0.3, kind, sigma=sigma)).m
            worst = max(worst, float(np.max(np.abs(other - ref)) / np.max(np.abs(ref))))
    return _row("sigma_rescaling_invariance", worst, 1e-8)


def check_seeded_reproducibility() -> Dict[str, Any]:
    scenario = Scenario.from_dimensionless(0.1, 0.1, 0.3)
    base = dict(scenario=scenario, povm=rotade_povm(0.1, sinc_convention="derived"), n_photons=5,
                n_trials=300, seed=7, representation=Representation.FULL_MODEL)
    a = empirical_error_rate(RunConfig(**base))
    b = empirical_error_rate(RunConfig(**base))
    c = empirical_error_rate(RunConfig(**base, chunk_size=64))
    same = np.array_equal(a.estimates, b.estimates) and np.array_equal(a.estimates, c.estimates)
    return _row("seeded_reproducibility", 0.0 if same else 1.0, 0.0)


CHECKS: List[Callable[[], Dict[str, Any]]] = [
    check_povm_completeness,
    check_density_matrices,
    check_sld_equation,
    check_weak_commutation,
    check_helstrom_rotade,
    check_sigma_rescaling,
    check_seeded_reproducibility,
]


def run_selftest() -> pd.DataFrame:
    t0 = time.time()
    rows = []
    for check in CHECKS:
        try:
            row = check()
        except Exception as e:
            logger.exception("Self-test %s raised", check.__name__)
            row = {"check": check.__name__, "value": float("nan"), "tolerance": float("nan"),
                   "passed": False, "error": str(e)}
        level = logger.info if row["passed"] else logger.error
        level("%s %s (value=%.3g, tol=%.3g)", "✅" if row["passed"] else "❌", row["check"],
              row["value"], row["tolerance"])
        rows.append(row)
    timing(logger, "selftest", t0)
    return pd.DataFrame(rows)
