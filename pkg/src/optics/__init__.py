from src.optics.psf import (
    BasisKind,
    Hypothesis,
    ModeBasis,
    PsfKind,
    PsfModel,
    born_probability,
    Scenario,
    hermite_poly,
    hg_mode_amplitude,
    mode_amplitudes,
    mode_density_matrix,
    mode_overlap,
    povm_outcome_probability,
    psf_amplitude,
    psf_norm,
)
from src.optics.qubit_model import (
    HelstromGamma,
    QubitEigen,
    QubitState,
    StateConvention,
    bloch_vector,
    eigendecompose_two_source,
    gamma_matrix,
    qubit_state,
    width_factor,
)
