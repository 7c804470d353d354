import numpy as np


def replica_generator(seed: int, replica: int) -> np.random.Generator:
    r"""Independent random stream for one replica.

    The stream only depends on ``(seed, replica)``, never on which worker
    ends up running the replica, which is what makes batch results
    independent of the worker count.

    Parameters
    ----------
    seed : int
        Root seed of the batch.
    replica : int
        Zero-based replica index.

    Returns
    -------
    np.random.Generator
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replica,)))


def root_generator(seed: int) -> np.random.Generator:
    r"""Random stream for single-trajectory simulations."""

    return np.random.default_rng(np.random.SeedSequence(seed))
