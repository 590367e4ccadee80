from src.measurements.povm import (
    BUCKET,
    Effect,
    Measurement,
    OutcomeDistribution,
    Povm,
    PovmSpace,
    Representation,
    bspade_povm,
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
