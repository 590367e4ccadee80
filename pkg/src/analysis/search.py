# src/analysis/search.py
"""
One-dimensional searches shared by the analysis modules.
"""

import math
from typing import Any, Callable, Dict

from scipy import optimize

from src.config import numerics
from src.errors import ConvergenceError, NoRootError
from src.logger import get_logger

logger = get_logger(__name__)

PHI_RATIO = 2.0 / (1.0 + math.sqrt(5.0))


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = None,
                   max_iter: int = None) -> Dict[str, Any]:
    """
    Minimise a unimodal f on [lo, hi]. Both endpoints are evaluated as well, so
    minima pinned to the boundary are returned exactly.

    Returns dict(argmin, minimum, iterations, converged).
    """
    tol = numerics("golden_tol") if tol is None else tol
    max_iter = numerics("golden_max_iter") if max_iter is None else max_iter
    a, b = lo, hi
    x1 = b - PHI_RATIO * (b - a)
    x2 = a + PHI_RATIO * (b - a)
    f1, f2 = f(x1), f(x2)
    f_lo, f_hi = f(lo), f(hi)

    iteration = 0
    while iteration < max_iter and abs(b - a) > tol:
        if f2 > f1:
            b, x2, f2 = x2, x1, f1
            x1 = b - PHI_RATIO * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + PHI_RATIO * (b - a)
            f2 = f(x2)
        iteration += 1

    x_mid, f_mid = (x1, f1) if f1 <= f2 else (x2, f2)
    candidates = [(f_mid, x_mid), (f_lo, lo), (f_hi, hi)]
    minimum, argmin = min(candidates, key=lambda c: c[0])
    converged = abs(b - a) <= tol and not (math.isnan(f1) or math.isnan(f2))
    logger.trace("golden_section [%g, %g] -> argmin=%.12g min=%.15g iters=%d", lo, hi, argmin, minimum, iteration)
    return dict(argmin=argmin, minimum=minimum, iterations=iteration, converged=converged)


def bisect_root(g: Callable[[float], float], lo: float, hi: float, tol: float = None,
                label: str = "root") -> float:
    """Root of g on [lo, hi] by bisection; NoRootError when g does not change sign."""
    tol = numerics("bisection_tol") if tol is None else tol
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if (g_lo > 0) == (g_hi > 0):
        raise NoRootError(f"{label}: no sign change on [{lo:g}, {hi:g}] (g={g_lo:.4g}, {g_hi:.4g})")
    root, info = optimize.bisect(g, lo, hi, xtol=tol, maxiter=numerics("bisection_max_iter"),
                                 full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError(f"{label}: bisection did not converge ({info.flag})")
    return float(root)
