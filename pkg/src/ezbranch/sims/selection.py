from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from einops import rearrange, reduce

from ezbranch.chains import build_chain
from ezbranch.distributions import DrawBuffer, OffspringDistribution, PairedOffspring
from ezbranch.errors import (
    LevelTooSmall,
    NotSupercritical,
    OutOfRange,
    SingularSystem,
    TooFewChildren,
)
from ezbranch.functional.pgf import q_alpha_closed_form
from ezbranch.sims.censored import check_runs, default_horizon, make_stepper, walk_censored
from ezbranch.utils.logger import get_logger
from ezbranch.utils.parallel import ordered_map, replica_chunks
from ezbranch.utils.streams import replica_generator, root_generator

_logger = get_logger(__name__)

RenewalIntervalKind = Literal["V_plus_1", "U"]


@dataclass
class SelectionSimConfig:
    r"""Configuration of a single long branching-selection run.

    Parameters
    ----------
    n : int
        Number of particles kept after each selection.
    steps : int
        Number of time steps ``K``, at least 10.
    seed : int, default to 0
        Seed of the random stream.
    burn_in_fraction : float, default to 0.1
        Fraction of the run discarded before measuring the slope.
    segments : int, default to 10
        Number of segments for the batch-means error bar.
    record_front : bool, default to False
        Keep ``max Y_k`` and ``Y_k(k)`` for every ``k``.
    """

    n: int
    steps: int
    seed: int = 0
    burn_in_fraction: float = 0.1
    segments: int = 10
    record_front: bool = False


@dataclass
class ParticleConfiguration:
    r"""Finite point measure of particles on the integers.

    Parameters
    ----------
    counts : dict[int, int]
        Position to positive particle count. Supports may be gapped.
    """

    counts: dict[int, int] = field(default_factory=dict)

    @classmethod
    def delta(cls, n: int, position: int = 0) -> "ParticleConfiguration":
        return cls({position: n})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def max_position(self) -> int:
        return max(self.counts)

    @property
    def min_position(self) -> int:
        return min(self.counts)

    def count_at(self, position: int) -> int:
        return self.counts.get(position, 0)

    def within_front(self) -> bool:
        r"""Whether all particles sit on ``{max - 1, max}``."""

        return self.min_position >= self.max_position - 1


class _Brancher:
    r"""Branching step bound to one random stream.

    The Bernoulli model samples the total number of right-movers at a site
    as Binomial(2c, alpha); other laws draw one joint pair per particle.
    """

    def __init__(self, law: PairedOffspring, rng: np.random.Generator) -> None:
        self.alpha = law.alpha
        self.rng = rng
        self.buf = DrawBuffer(law.alias, rng, values=law.pairs) if law.alpha is None else None

    def __call__(self, config: ParticleConfiguration) -> ParticleConfiguration:
        children: dict[int, int] = {}
        for pos, c in config.counts.items():
            if self.buf is None:
                right = int(self.rng.binomial(2 * c, self.alpha))
                stay = 2 * c - right
            else:
                right = stay = 0
                for _ in range(c):
                    x, y = self.buf.next()
                    right += x
                    stay += y
            if right:
                children[pos + 1] = children.get(pos + 1, 0) + right
            if stay:
                children[pos] = children.get(pos, 0) + stay
        return ParticleConfiguration(children)


def branch(
    config: ParticleConfiguration, law: PairedOffspring, rng: np.random.Generator
) -> ParticleConfiguration:
    r"""Replace every particle at ``l`` by ``x`` children at ``l + 1`` and ``x'`` at ``l``.

    The children total is unrestricted and at least ``config.total`` since
    ``x + x' >= 1``.
    """
    if config.total < 1:
        raise TooFewChildren("Cannot branch an empty configuration.")
    return _Brancher(law, rng)(config)


def select(children: ParticleConfiguration, n: int) -> ParticleConfiguration:
    r"""Keep the ``n`` rightmost particles.

    Positions are scanned from the right; whole sites are kept until the
    budget runs out and the cutoff site keeps a partial count (particles on
    one site are exchangeable).

    Raises
    ------
    TooFewChildren
        When fewer than ``n`` children are available.
    """
    if children.total < n:
        raise TooFewChildren(f"Need at least {n} children to select from, got {children.total}.")

    kept: dict[int, int] = {}
    budget = n
    for pos in sorted(children.counts, reverse=True):
        take = min(children.counts[pos], budget)
        kept[pos] = take
        budget -= take
        if budget == 0:
            break
    return ParticleConfiguration(kept)


def _check_particles(n: int) -> None:
    if n < 1:
        raise OutOfRange(f"Number of particles must be positive, got {n}.")


@dataclass
class SpeedEstimate:
    r"""Front speed estimate of a branching-selection run or a renewal front.

    Parameters
    ----------
    n : int
        Number of particles (censoring level of the associated chain).
    steps : int
        Number of simulated steps ``K``.
    v_hat : float
        Slope of the front over ``[K0, K]`` with ``K0 = floor(K / 10)``.
    v_err : float
        Batch-means standard error over the post burn-in segments.
    bracket_low, bracket_high : float, optional
        Exact bounds :math:`1 - 1/(E[V_N]+1)` and :math:`1 - 1/E[U_N]`
        when the offspring law is supercritical.
    support_violations : int
        Steps after which some particle was left of ``max - 1``.
    max_y : np.ndarray, optional
        ``max Y_k`` for ``k = 0..K``.
    frontier : np.ndarray, optional
        ``Y_k(k)`` for ``k = 0..K``.
    """

    n: int
    steps: int
    v_hat: float
    v_err: float
    bracket_low: float | None = None
    bracket_high: float | None = None
    support_violations: int = 0
    max_y: np.ndarray | None = field(default=None, repr=False)
    frontier: np.ndarray | None = field(default=None, repr=False)

    @property
    def front_gap(self) -> np.ndarray | None:
        r"""Series ``k - max Y_k``."""

        if self.max_y is None:
            return None
        return np.arange(self.max_y.size) - self.max_y

    def to_report(self) -> dict:
        return {
            "n": self.n,
            "k": self.steps,
            "v_hat": self.v_hat,
            "v_err": self.v_err,
            "bracket_low": self.bracket_low,
            "bracket_high": self.bracket_high,
        }


def _slope_and_error(front: np.ndarray, burn_in: int, segments: int) -> tuple[float, float]:
    r"""Slope of ``front`` after ``burn_in`` and its batch-means standard error."""

    K = front.size - 1
    v_hat = float(front[K] - front[burn_in]) / (K - burn_in)

    increments = np.diff(front[burn_in:]).astype(np.float64)
    length = increments.size // segments
    if segments < 2 or length == 0:
        return v_hat, float("nan")
    seg = rearrange(increments[: length * segments], "(s l) -> s l", s=segments)
    means = reduce(seg, "s l -> s", "mean")
    return v_hat, float(means.std(ddof=1) / np.sqrt(segments))


def speed_bracket(offspring: OffspringDistribution, n: int) -> tuple[float, float]:
    r"""Exact speed bounds :math:`(1 - 1/(E[V_N]+1),\ 1 - 1/E[U_N])`.

    Raises
    ------
    NotSupercritical
        When the offspring mean is not above one or there is no mass at 0.
    """
    if not offspring.is_supercritical:
        raise NotSupercritical(
            f"Speed bracket needs a supercritical law, mean is {offspring.mean!r}."
        )
    if n < 2:
        raise LevelTooSmall(f"Censoring level must be at least 2, got {n}.")

    chain = build_chain(offspring, n)
    u_n = float(chain.expected_absorption[-1])
    low = 1.0 - 1.0 / min(chain.expected_last_visit + 1.0, u_n)
    high = 1.0 - 1.0 / u_n
    return low, high


def _maybe_bracket(offspring: OffspringDistribution, n: int) -> tuple[float | None, float | None]:
    if n < 2 or not offspring.is_supercritical:
        return None, None
    try:
        return speed_bracket(offspring, n)
    except SingularSystem as e:
        _logger.warning("no exact bracket at N=%d: %s", n, e)
        return None, None


def bernoulli_speed_asymptote(alpha: float, n: int) -> float:
    r"""Leading-order speed :math:`1 - q_\alpha^N` of the Bernoulli model."""

    return 1.0 - q_alpha_closed_form(alpha) ** n


def simulate_speed(
    law: PairedOffspring,
    n: int,
    steps: int,
    seed: int = 0,
    burn_in_fraction: float = 0.1,
    segments: int = 10,
    record_front: bool = False,
) -> SpeedEstimate:
    r"""Run the N-particle branching-selection system from ``N * delta_0``.

    Parameters
    ----------
    law : PairedOffspring
        Joint law of (children to the right, children in place).
    n : int
        Number of particles.
    steps : int
        Number of steps ``K >= 10``.
    seed : int, default to 0
        Seed of the random stream.
    burn_in_fraction : float, default to 0.1
        Discarded fraction; ``K0 = floor(K * burn_in_fraction)``.
    segments : int, default to 10
        Segments of the batch-means error bar.
    record_front : bool, default to False
        Keep ``max Y_k`` and ``Y_k(k)`` series in the estimate.

    Returns
    -------
    SpeedEstimate
    """
    _check_particles(n)
    if steps < 10:
        raise OutOfRange(f"Need at least 10 steps, got {steps}.")

    step = _Brancher(law, root_generator(seed))
    config = ParticleConfiguration.delta(n)
    max_y = np.zeros(steps + 1, dtype=np.int64)
    frontier = np.zeros(steps + 1, dtype=np.int64) if record_front else None
    if frontier is not None:
        frontier[0] = n

    violations = 0
    for k in range(1, steps + 1):
        config = select(step(config), n)
        max_y[k] = config.max_position
        if frontier is not None:
            frontier[k] = config.count_at(k)
        if not config.within_front():
            violations += 1

    if violations:
        _logger.info("N=%d: %d steps with particles left of max-1", n, violations)

    burn_in = int(steps * burn_in_fraction)
    v_hat, v_err = _slope_and_error(max_y, burn_in, segments)
    low, high = _maybe_bracket(law.marginal_x, n)
    return SpeedEstimate(
        n=n,
        steps=steps,
        v_hat=v_hat,
        v_err=v_err,
        bracket_low=low,
        bracket_high=high,
        support_violations=violations,
        max_y=max_y if record_front else None,
        frontier=frontier,
    )


class SelectionSimulator:
    r"""Branching-selection simulator driven by a ``SelectionSimConfig``."""

    def __init__(self, law: PairedOffspring, config: SelectionSimConfig) -> None:
        _check_particles(config.n)
        self.law = law
        self.config = config

    def run(self) -> SpeedEstimate:
        c = self.config
        return simulate_speed(
            self.law, c.n, c.steps, c.seed, c.burn_in_fraction, c.segments, c.record_front
        )


def frontier_series(
    law: PairedOffspring, n: int, k_max: int, rng: np.random.Generator
) -> np.ndarray:
    r"""Counts ``Y_k(k)`` at the rightmost reachable site for ``k = 0..k_max``."""

    step = _Brancher(law, rng)
    config = ParticleConfiguration.delta(n)
    out = np.zeros(k_max + 1, dtype=np.int64)
    out[0] = n
    for k in range(1, k_max + 1):
        config = select(step(config), n)
        out[k] = config.count_at(k)
    return out


def _frontier_chunk(
    chunk: range, law: PairedOffspring, n: int, k_max: int, seed: int
) -> list[np.ndarray]:
    return [frontier_series(law, n, k_max, replica_generator(seed, r)) for r in chunk]


def frontier_counts(
    law: PairedOffspring, n: int, k_max: int, runs: int, seed: int = 0, workers: int = 1
) -> np.ndarray:
    r"""Empirical distribution tables of ``Y_k(k)`` over independent runs.

    Returns
    -------
    np.ndarray
        Histogram with shape (k_max + 1, n + 1); row ``k`` counts the runs
        with ``Y_k(k) = j`` in column ``j``.
    """
    _check_particles(n)
    if k_max < 1:
        raise OutOfRange(f"k_max must be at least 1, got {k_max}.")
    check_runs(runs)

    chunks = ordered_map(
        _frontier_chunk, replica_chunks(runs), law, n, k_max, seed, workers=workers
    )
    series = np.stack([s for chunk in chunks for s in chunk])
    onehot = series[..., None] == np.arange(n + 1)
    return reduce(onehot.astype(np.int64), "r k j -> k j", "sum")


def first_frontier_extinction(
    law: PairedOffspring, n: int, max_steps: int, seed: int = 0
) -> int | None:
    r"""First time ``U^1`` with no particle at the rightmost reachable site.

    Returns ``None`` when the frontier survives ``max_steps`` steps.
    """
    step = _Brancher(law, root_generator(seed))
    config = ParticleConfiguration.delta(n)
    for k in range(1, max_steps + 1):
        config = select(step(config), n)
        if config.count_at(k) == 0:
            return k
    return None


def renewal_speed(
    intervals: np.ndarray, steps: int, burn_in_fraction: float = 0.1, segments: int = 10
) -> tuple[float, float]:
    r"""Speed of the front ``k - I_k`` driven by i.i.d. renewal intervals.

    ``I_k`` counts the renewal epochs :math:`\Gamma^i \leq k`, ``i >= 1``;
    the intervals must cover ``steps``.
    """
    epochs = np.cumsum(np.asarray(intervals, dtype=np.int64))
    if epochs.size == 0 or epochs[-1] <= steps:
        covered = epochs[-1] if epochs.size else 0
        raise OutOfRange(f"Renewal intervals cover {covered} < {steps} steps.")

    burn_in = int(steps * burn_in_fraction)
    length = (steps - burn_in) // max(segments, 1)
    if segments >= 2 and length > 0:
        marks = burn_in + length * np.arange(segments + 1)
    else:
        marks = np.asarray([burn_in, steps])
    marks = np.unique(np.concatenate([marks, [steps]]))
    front = marks - np.searchsorted(epochs, marks, side="right")

    v_hat = float(front[-1] - front[0]) / (steps - burn_in)
    seg_speeds = np.diff(front[: segments + 1]) / np.diff(marks[: segments + 1])
    if segments < 2 or seg_speeds.size < 2:
        return v_hat, float("nan")
    return v_hat, float(seg_speeds.std(ddof=1) / np.sqrt(seg_speeds.size))


def _draw_intervals(
    kind: RenewalIntervalKind,
    offspring: OffspringDistribution,
    n: int,
    steps: int,
    horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    stepper: Callable[[int], int] = make_stepper(offspring, n, rng)
    out: list[int] = []
    covered = 0
    while covered <= steps:
        u, observed, v, _ = walk_censored(stepper, n, horizon)
        if u is None:
            _logger.warning("renewal interval truncated at horizon %d", horizon)
        interval = v + 1 if kind == "V_plus_1" else (observed if u is None else u)
        out.append(interval)
        covered += interval
    return np.asarray(out, dtype=np.int64)


def simulate_renewal_front(
    interval_law: RenewalIntervalKind,
    offspring: OffspringDistribution,
    n: int,
    steps: int,
    seed: int = 0,
    horizon: int | None = None,
    segments: int = 10,
) -> SpeedEstimate:
    r"""Front speed of the dominated (``"V_plus_1"``) or dominating (``"U"``) restart process.

    The process restarts with all particles on one site at every renewal
    and loses one unit of front position there. Renewal intervals are i.i.d.
    copies of :math:`V_N + 1` (dominated process) or :math:`U_N` (dominating
    process) drawn from the censored chain, so by the renewal theorem the
    speed tends to :math:`1 - 1/(E[V_N]+1)` or :math:`1 - 1/E[U_N]`.

    Parameters
    ----------
    interval_law : Literal["V_plus_1", "U"]
        Which renewal intervals to draw.
    offspring : OffspringDistribution
        Supercritical offspring law.
    n : int
        Censoring level, ``n >= 2``.
    steps : int
        Time horizon ``K`` of the front.
    seed : int, default to 0
        Seed of the random stream.
    horizon : int, optional
        Step limit of each censored path.
    segments : int, default to 10
        Segments of the batch-means error bar.

    Returns
    -------
    SpeedEstimate
    """
    if interval_law not in ("V_plus_1", "U"):
        raise OutOfRange(f"Unknown renewal interval law {interval_law!r}.")
    if not offspring.is_supercritical:
        raise NotSupercritical(
            f"Renewal front needs a supercritical law, mean is {offspring.mean!r}."
        )
    if n < 2:
        raise LevelTooSmall(f"Censoring level must be at least 2, got {n}.")
    if steps < 10:
        raise OutOfRange(f"Need at least 10 steps, got {steps}.")
    if horizon is None:
        horizon = default_horizon(offspring, n)

    intervals = _draw_intervals(interval_law, offspring, n, steps, horizon, root_generator(seed))
    v_hat, v_err = renewal_speed(intervals, steps, segments=segments)
    low, high = speed_bracket(offspring, n)
    return SpeedEstimate(
        n=n, steps=steps, v_hat=v_hat, v_err=v_err, bracket_low=low, bracket_high=high
    )
