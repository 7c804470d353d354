import math

import numpy as np

from ezbranch.distributions import OffspringDistribution
from ezbranch.errors import OutOfRange
from ezbranch.utils.parallel import ordered_map, replica_chunks
from ezbranch.utils.streams import replica_generator

DEFAULT_EXPLODE_AT = 10_000


def _next_generation(offspring: OffspringDistribution, z: int, rng: np.random.Generator) -> int:
    # Counts of each offspring value among z i.i.d. copies.
    counts = rng.multinomial(z, offspring.pmf)
    return int(np.dot(counts, np.arange(offspring.pmf.size)))


def simulate_galton_watson(
    offspring: OffspringDistribution,
    ancestors: int,
    generations: int,
    rng: np.random.Generator,
    explode_at: int | None = DEFAULT_EXPLODE_AT,
) -> list[int]:
    r"""Population sizes :math:`Z_0 = a, Z_1, \dots` of the uncensored process.

    Stops early at extinction or once the population reaches ``explode_at``,
    beyond which the extinction probability :math:`q^{Z}` is negligible.

    Parameters
    ----------
    offspring : OffspringDistribution
        Offspring law.
    ancestors : int
        Initial population ``a >= 1``.
    generations : int
        Maximum number of generations.
    rng : np.random.Generator
        Random stream.
    explode_at : int, optional
        Population treated as surviving forever; ``None`` disables it.

    Returns
    -------
    list[int]
    """
    if ancestors < 1:
        raise OutOfRange(f"Need at least one ancestor, got {ancestors}.")

    sizes = [ancestors]
    z = ancestors
    for _ in range(generations):
        if z == 0 or (explode_at is not None and z >= explode_at):
            break
        z = _next_generation(offspring, z, rng)
        sizes.append(z)
    return sizes


def _extinction_chunk(
    chunk: range,
    offspring: OffspringDistribution,
    ancestors: int,
    generations: int,
    explode_at: int | None,
    seed: int,
) -> int:
    return sum(
        simulate_galton_watson(
            offspring, ancestors, generations, replica_generator(seed, r), explode_at
        )[-1]
        == 0
        for r in chunk
    )


def estimate_extinction(
    offspring: OffspringDistribution,
    ancestors: int,
    runs: int,
    seed: int = 0,
    generations: int = 1_000,
    explode_at: int | None = DEFAULT_EXPLODE_AT,
    workers: int = 1,
) -> tuple[float, float]:
    r"""Empirical probability that :math:`Z^a` dies out, with binomial standard error.

    Agrees with :math:`q^a` up to the negligible mass of late extinctions.
    """
    if runs < 1:
        raise OutOfRange(f"Number of runs must be positive, got {runs}.")

    dead = sum(
        ordered_map(
            _extinction_chunk,
            replica_chunks(runs),
            offspring,
            ancestors,
            generations,
            explode_at,
            seed,
            workers=workers,
        )
    )
    p = dead / runs
    return p, math.sqrt(p * (1.0 - p) / runs)
