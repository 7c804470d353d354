from .censored_chain import (
    CensoredChain,
    ChainReport,
    KsDistance,
    build_chain,
    chain_report,
    distribution_of_U,
    exact_ks_to_exponential,
    expected_absorption,
    expected_final_excursion,
    expected_last_visit,
    never_return_probability,
)

__all__ = [
    "CensoredChain",
    "ChainReport",
    "KsDistance",
    "build_chain",
    "chain_report",
    "distribution_of_U",
    "exact_ks_to_exponential",
    "expected_absorption",
    "expected_final_excursion",
    "expected_last_visit",
    "never_return_probability",
]
