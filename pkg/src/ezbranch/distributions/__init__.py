from .alias import AliasTable, DrawBuffer
from .offspring import (
    OffspringDistribution,
    PairedOffspring,
    bernoulli_pairing,
    binomial2,
    binomial_marginal,
    from_pmf,
    minimal_stay,
    paired_from_pmf,
    sample,
)

__all__ = [
    "AliasTable",
    "DrawBuffer",
    "OffspringDistribution",
    "PairedOffspring",
    "bernoulli_pairing",
    "binomial2",
    "binomial_marginal",
    "from_pmf",
    "minimal_stay",
    "paired_from_pmf",
    "sample",
]
