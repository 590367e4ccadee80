from src.simulate.montecarlo import (
    LikelihoodTable,
    MleEstimate,
    RunConfig,
    TrialSummary,
    build_likelihood_table,
    decide_hypothesis,
    empirical_error_rate,
    empirical_estimator_variance,
    exact_reference_error,
    mle_separation,
    run_chunks,
    sample_outcomes,
    trial_rng,
)
