from .censored import (
    BatchEstimate,
    CensoredSimConfig,
    CensoredSimulator,
    PathRecord,
    batch_estimate,
    batch_with_survival_times,
    default_horizon,
    estimate_step_down,
    make_stepper,
    passage_gaps,
    sample_survival_times,
    sample_u_rescaled,
    simulate_path,
    walk_censored,
)
from .galton_watson import estimate_extinction, simulate_galton_watson
from .selection import (
    ParticleConfiguration,
    SelectionSimConfig,
    SelectionSimulator,
    SpeedEstimate,
    bernoulli_speed_asymptote,
    branch,
    first_frontier_extinction,
    frontier_counts,
    frontier_series,
    renewal_speed,
    select,
    simulate_renewal_front,
    simulate_speed,
    speed_bracket,
)

__all__ = [
    "BatchEstimate",
    "CensoredSimConfig",
    "CensoredSimulator",
    "ParticleConfiguration",
    "PathRecord",
    "SelectionSimConfig",
    "SelectionSimulator",
    "SpeedEstimate",
    "batch_estimate",
    "batch_with_survival_times",
    "bernoulli_speed_asymptote",
    "branch",
    "default_horizon",
    "estimate_extinction",
    "estimate_step_down",
    "first_frontier_extinction",
    "frontier_counts",
    "frontier_series",
    "make_stepper",
    "passage_gaps",
    "renewal_speed",
    "sample_survival_times",
    "sample_u_rescaled",
    "select",
    "simulate_galton_watson",
    "simulate_path",
    "simulate_renewal_front",
    "simulate_speed",
    "speed_bracket",
    "walk_censored",
]
