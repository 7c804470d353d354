import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ezbranch.distributions import DrawBuffer, OffspringDistribution
from ezbranch.errors import AllTruncated, LevelTooSmall, NotSupercritical, OutOfRange
from ezbranch.functional.stats import StreamMoments, geometric_fit
from ezbranch.utils.logger import get_logger
from ezbranch.utils.parallel import ordered_map, replica_chunks
from ezbranch.utils.streams import replica_generator

_logger = get_logger(__name__)

HORIZON_FACTOR = 100
MAX_BATCH_STEPS = 1_000_000_000
FALLBACK_HORIZON = 1_000_000


@dataclass
class CensoredSimConfig:
    r"""Configuration of a batch of censored Galton-Watson replicas.

    Parameters
    ----------
    n : int
        Censoring level, ``n >= 2``.
    runs : int, default to 10000
        Number of independent replicas.
    seed : int, default to 0
        Root seed; replica ``i`` uses the stream derived from ``(seed, i)``.
    horizon : int, optional
        Maximum number of steps per replica. Defaults to
        :math:`100 (1/q)^N`, reduced so that ``runs * horizon <= 1e9``.
    workers : int, default to 1
        Worker processes. Results do not depend on it.
    store_trajectory : bool, default to False
        Keep the visited states in every ``PathRecord``.
    record_draws : bool, default to False
        Keep the offspring draws consumed at every step (disables the
        binomial fast path).
    """

    n: int
    runs: int = 10_000
    seed: int = 0
    horizon: int | None = None
    workers: int = 1
    store_trajectory: bool = False
    record_draws: bool = False


@dataclass
class PathRecord:
    r"""One trajectory of the censored process started at ``X_0 = N``.

    Parameters
    ----------
    n : int
        Censoring level.
    u : int, optional
        Survival time; ``None`` when the path was still alive at the horizon.
    steps : int
        Number of observed steps.
    v : int
        Last observed time at level N.
    passages : list[int]
        Times ``0 = A_0 < A_1 < ...`` of the visits to N.
    trajectory : list[int], optional
        States ``X_0, ..., X_steps`` when stored.
    draws : list[list[int]], optional
        Offspring values consumed by each step when recorded.
    """

    n: int
    u: int | None
    steps: int
    v: int
    passages: list[int]
    trajectory: list[int] | None = None
    draws: list[list[int]] | None = field(default=None, repr=False)

    @property
    def alive(self) -> bool:
        return self.u is None

    @property
    def t(self) -> int:
        r"""Number of returns to N."""

        return len(self.passages) - 1


@dataclass(frozen=True)
class BatchEstimate:
    r"""Sample means and 95% half-widths of :math:`U`, :math:`V` and :math:`T`.

    Means are taken over absorbed replicas; ``truncated`` counts the replicas
    that reached the horizon alive. ``mean_u_over_v1`` and ``mean_v1_over_t1``
    are the sample means of :math:`U/(V+1)` and :math:`(V+1)/(T+1)`; both
    tend to 1 as N grows for a supercritical law.
    """

    n: int
    runs: int
    mean_u: float
    ci_u: float
    mean_v: float
    ci_v: float
    mean_t: float
    ci_t: float
    t_geometric_p_hat: float
    p_hat_stderr: float
    truncated: int = 0
    mean_u_over_v1: float = math.nan
    mean_v1_over_t1: float = math.nan


def default_horizon(offspring: OffspringDistribution, n: int, runs: int = 1) -> int:
    r"""Default horizon :math:`100 (1/q)^N`, keeping ``runs * horizon <= 1e9``."""

    # Compared in log space: (1/q)^N overflows a float for long-lived laws.
    cap = MAX_BATCH_STEPS / max(runs, 1)
    if offspring.is_supercritical:
        q = offspring.extinction_probability
        log_horizon = math.log(HORIZON_FACTOR) - n * math.log(q)
    else:
        log_horizon = math.log(FALLBACK_HORIZON)
    horizon = cap if log_horizon >= math.log(cap) else math.exp(log_horizon)
    return max(1, int(math.ceil(horizon)))


def _generic_stepper(
    offspring: OffspringDistribution,
    n: int,
    rng: np.random.Generator,
    draws: list[list[int]] | None,
) -> Callable[[int], int]:
    buf = DrawBuffer(offspring.alias, rng, values=offspring.support)

    def step(m: int) -> int:
        s = 0
        used = [] if draws is not None else None
        for _ in range(m):
            x = buf.next()
            s += x
            if used is not None:
                used.append(x)
            if s >= n:
                break
        if draws is not None:
            draws.append(used)
        return min(s, n)

    return step


def _binomial_stepper(alpha: float, n: int, rng: np.random.Generator) -> Callable[[int], int]:
    # Sum of m i.i.d. Binomial(2, alpha) is Binomial(2m, alpha).
    def step(m: int) -> int:
        return min(int(rng.binomial(2 * m, alpha)), n)

    return step


def make_stepper(
    offspring: OffspringDistribution,
    n: int,
    rng: np.random.Generator,
    draws: list[list[int]] | None = None,
) -> Callable[[int], int]:
    r"""One censored transition ``m -> min(n, X_1 + ... + X_m)`` bound to ``rng``.

    Binomial(2, alpha) laws use a single binomial draw per step unless the
    individual draws are recorded.
    """
    if offspring.binomial_alpha is not None and draws is None:
        return _binomial_stepper(offspring.binomial_alpha, n, rng)
    return _generic_stepper(offspring, n, rng, draws)


def walk_censored(
    step: Callable[[int], int],
    n: int,
    horizon: int,
    trajectory: list[int] | None = None,
    passages: list[int] | None = None,
) -> tuple[int | None, int, int, int]:
    r"""Run the censored chain from N; returns ``(u, steps, v, t)``."""

    x = n
    k = 0
    v = 0
    t = 0
    while x > 0 and k < horizon:
        x = step(x)
        k += 1
        if trajectory is not None:
            trajectory.append(x)
        if x == n:
            v = k
            t += 1
            if passages is not None:
                passages.append(k)
    return (k if x == 0 else None), k, v, t


def _check_level(n: int, horizon: int | None = None) -> None:
    if n < 2:
        raise LevelTooSmall(f"Censoring level must be at least 2, got {n}.")
    if horizon is not None and horizon < 1:
        raise OutOfRange(f"Horizon must be positive, got {horizon}.")


def check_runs(runs: int) -> None:
    if runs < 1:
        raise OutOfRange(f"Number of runs must be positive, got {runs}.")


def simulate_path(
    offspring: OffspringDistribution,
    n: int,
    horizon: int,
    rng: np.random.Generator,
    store_trajectory: bool = True,
    record_draws: bool = False,
) -> PathRecord:
    r"""Simulate one censored trajectory started at ``X_0 = N``.

    Every step draws i.i.d. offspring values for the current population and
    stops drawing as soon as the running sum reaches N, since only
    :math:`\min(N, \sum)` matters. Paths still alive after ``horizon`` steps
    are returned with ``u = None``; ``v`` and ``passages`` then describe the
    observed prefix.

    Parameters
    ----------
    offspring : OffspringDistribution
        Offspring law.
    n : int
        Censoring level, ``n >= 2``.
    horizon : int
        Maximum number of steps.
    rng : np.random.Generator
        Random stream.
    store_trajectory : bool, default to True
        Keep the visited states.
    record_draws : bool, default to False
        Keep the offspring values consumed at each step.

    Returns
    -------
    PathRecord
    """
    _check_level(n, horizon)

    draws: list[list[int]] | None = [] if record_draws else None
    trajectory = [n] if store_trajectory else None
    passages = [0]
    step = make_stepper(offspring, n, rng, draws)
    u, steps, v, _ = walk_censored(step, n, horizon, trajectory, passages)
    return PathRecord(
        n=n, u=u, steps=steps, v=v, passages=passages, trajectory=trajectory, draws=draws
    )


def passage_gaps(record: PathRecord) -> np.ndarray:
    r"""Raw gaps :math:`A_{k+1} - A_k` between successive visits to N."""

    return np.diff(np.asarray(record.passages, dtype=np.int64))


def _simulate_chunk(
    chunk: range, offspring: OffspringDistribution, n: int, horizon: int, seed: int
) -> list[tuple[int | None, int, int]]:
    out = []
    for replica in chunk:
        step = make_stepper(offspring, n, replica_generator(seed, replica))
        u, steps, v, t = walk_censored(step, n, horizon)
        out.append((u, v, t))
    return out


def _simulate_replicas(
    offspring: OffspringDistribution, n: int, runs: int, horizon: int, seed: int, workers: int
) -> list[tuple[int | None, int, int]]:
    chunks = replica_chunks(runs)
    results = ordered_map(_simulate_chunk, chunks, offspring, n, horizon, seed, workers=workers)
    return [r for chunk in results for r in chunk]


def batch_estimate(
    offspring: OffspringDistribution,
    n: int,
    runs: int,
    horizon: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> BatchEstimate:
    r"""Estimate :math:`E[U_N]`, :math:`E[V_N]`, :math:`E[T]` and :math:`q_N` by simulation.

    Replica ``i`` uses the stream derived from ``(seed, i)`` and the
    reduction runs in replica order, so the result depends on
    ``(seed, runs)`` only, never on ``workers``.

    Returns
    -------
    BatchEstimate

    Raises
    ------
    AllTruncated
        When every replica reached the horizon alive.
    """
    estimate, _ = batch_with_survival_times(offspring, n, runs, horizon, seed, workers)
    return estimate


def batch_with_survival_times(
    offspring: OffspringDistribution,
    n: int,
    runs: int,
    horizon: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> tuple[BatchEstimate, np.ndarray]:
    r"""Same as ``batch_estimate``, also returning the absorbed survival times.

    The survival times come from the same replicas, in replica order.
    """
    _check_level(n, horizon)
    check_runs(runs)
    if horizon is None:
        horizon = default_horizon(offspring, n, runs)

    return _summarize(_simulate_replicas(offspring, n, runs, horizon, seed, workers), n, horizon)


def _summarize(
    records: list[tuple[int | None, int, int]], n: int, horizon: int
) -> tuple[BatchEstimate, np.ndarray]:
    runs = len(records)
    _logger.debug("batch N=%d runs=%d horizon=%d", n, runs, horizon)
    acc_u, acc_v, acc_t = StreamMoments(), StreamMoments(), StreamMoments()
    acc_uv, acc_vt = StreamMoments(), StreamMoments()
    returns = []
    survival = []
    truncated = 0
    for u, v, t in records:
        if u is None:
            truncated += 1
            continue
        acc_u.push(u)
        acc_v.push(v)
        acc_t.push(t)
        acc_uv.push(u / (v + 1))
        acc_vt.push((v + 1) / (t + 1))
        returns.append(t)
        survival.append(u)

    if truncated == runs:
        raise AllTruncated(f"All {runs} replicas were alive at horizon {horizon}.")
    if truncated:
        _logger.warning(
            "N=%d: %d of %d replicas truncated at horizon %d", n, truncated, runs, horizon
        )

    fit = geometric_fit(returns)
    estimate = BatchEstimate(
        n=n,
        runs=runs,
        mean_u=acc_u.mean,
        ci_u=acc_u.ci95,
        mean_v=acc_v.mean,
        ci_v=acc_v.ci95,
        mean_t=acc_t.mean,
        ci_t=acc_t.ci95,
        t_geometric_p_hat=fit.p_hat,
        p_hat_stderr=fit.stderr,
        truncated=truncated,
        mean_u_over_v1=acc_uv.mean,
        mean_v1_over_t1=acc_vt.mean,
    )
    return estimate, np.asarray(survival, dtype=np.float64)


def sample_survival_times(
    offspring: OffspringDistribution,
    n: int,
    runs: int,
    seed: int = 0,
    horizon: int | None = None,
    workers: int = 1,
) -> np.ndarray:
    r"""Survival times of absorbed replicas, in replica order."""

    _check_level(n, horizon)
    check_runs(runs)
    if horizon is None:
        horizon = default_horizon(offspring, n, runs)

    records = _simulate_replicas(offspring, n, runs, horizon, seed, workers)
    u = np.asarray([r[0] for r in records if r[0] is not None], dtype=np.float64)
    if u.size < runs:
        _logger.warning("N=%d: dropped %d truncated replicas", n, runs - u.size)
    if u.size == 0:
        raise AllTruncated(f"All {runs} replicas were alive at horizon {horizon}.")
    return u


def sample_u_rescaled(
    offspring: OffspringDistribution,
    n: int,
    runs: int,
    seed: int = 0,
    horizon: int | None = None,
    workers: int = 1,
) -> np.ndarray:
    r"""Rescaled survival times :math:`U_N q^N`, asymptotically Exp(1)."""

    if not offspring.is_supercritical:
        raise NotSupercritical(
            f"Rescaling by q^N needs a supercritical law, mean is {offspring.mean!r}."
        )
    q = offspring.extinction_probability
    return sample_survival_times(offspring, n, runs, seed, horizon, workers) * q**n


def _step_down_chunk(
    chunk: range, offspring: OffspringDistribution, n: int, seed: int
) -> list[bool]:
    return [
        make_stepper(offspring, n, replica_generator(seed, replica))(n) < n
        for replica in chunk
    ]


def estimate_step_down(
    offspring: OffspringDistribution, n: int, runs: int, seed: int = 0, workers: int = 1
) -> tuple[float, float]:
    r"""Empirical :math:`P(X_1 < N \mid X_0 = N)` with its binomial standard error."""

    _check_level(n)
    check_runs(runs)
    results = ordered_map(
        _step_down_chunk, replica_chunks(runs), offspring, n, seed, workers=workers
    )
    hits = sum(sum(chunk) for chunk in results)
    p = hits / runs
    return p, math.sqrt(p * (1.0 - p) / runs)


class CensoredSimulator:
    r"""Batch simulator of the censored process driven by a ``CensoredSimConfig``.

    Parameters
    ----------
    offspring : OffspringDistribution
        Offspring law.
    config : CensoredSimConfig
        Batch configuration. See ``CensoredSimConfig`` for more details.
    """

    def __init__(self, offspring: OffspringDistribution, config: CensoredSimConfig) -> None:
        _check_level(config.n, config.horizon)
        self.offspring = offspring
        self.config = config

    @property
    def horizon(self) -> int:
        if self.config.horizon is not None:
            return self.config.horizon
        return default_horizon(self.offspring, self.config.n, self.config.runs)

    def path(self, replica: int = 0) -> PathRecord:
        return simulate_path(
            self.offspring,
            self.config.n,
            self.horizon,
            replica_generator(self.config.seed, replica),
            store_trajectory=self.config.store_trajectory,
            record_draws=self.config.record_draws,
        )

    def batch(self) -> BatchEstimate:
        c = self.config
        return batch_estimate(self.offspring, c.n, c.runs, self.horizon, c.seed, c.workers)

    def rescaled_survival_times(self) -> np.ndarray:
        c = self.config
        return sample_u_rescaled(self.offspring, c.n, c.runs, c.seed, self.horizon, c.workers)
