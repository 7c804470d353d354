from .chain import (
    absorption_cdf,
    censored_transition_matrix,
    distribution_of_absorption,
    expected_absorption,
    expected_conditioned_gap,
    expected_final_excursion,
    expected_last_visit,
    expected_visits_to_top,
    first_return_law,
    lattice_ks_to_exponential,
    never_return_probability,
    state_distribution,
)
from .pgf import (
    capped_sum_distribution,
    capped_sum_rows,
    extinction_gap,
    extinction_probability,
    mean,
    pgf_derivative,
    pgf_eval,
    pgf_iterate,
    q_alpha_closed_form,
    variance,
)
from .stats import (
    GeometricFit,
    GofResult,
    StreamMoments,
    chi_square_gof,
    exponential_cdf,
    geometric_fit,
    ks_statistic,
    pool_categories,
    stream_moments,
)

__all__ = [
    "GeometricFit",
    "GofResult",
    "StreamMoments",
    "absorption_cdf",
    "capped_sum_distribution",
    "capped_sum_rows",
    "censored_transition_matrix",
    "chi_square_gof",
    "distribution_of_absorption",
    "expected_absorption",
    "expected_conditioned_gap",
    "expected_final_excursion",
    "expected_last_visit",
    "expected_visits_to_top",
    "exponential_cdf",
    "extinction_gap",
    "extinction_probability",
    "first_return_law",
    "geometric_fit",
    "ks_statistic",
    "lattice_ks_to_exponential",
    "mean",
    "never_return_probability",
    "pgf_derivative",
    "pgf_eval",
    "pgf_iterate",
    "pool_categories",
    "q_alpha_closed_form",
    "state_distribution",
    "stream_moments",
    "variance",
]
