from src.analysis.discrimination import (
    ChernoffResult,
    ErrorRates,
    chernoff_curves,
    chernoff_exponent_classical,
    chernoff_exponent_quantum,
    error_probabilities,
    exact_error_probability,
    helstrom_error,
    intrinsic_error,
    intrinsic_error_breakdown,
)
from src.analysis.estimation import (
    FisherMatrix,
    SldPair,
    cfi_matrix,
    min_resolvable_separation,
    qfi_matrix,
    sld_operators,
    small_sep_coefficient,
    weak_commutation_check,
)
from src.analysis.search import bisect_root, golden_section
