import functools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from ezbranch.distributions.alias import AliasTable
from ezbranch.errors import NegativeMass, NotNormalized, OutOfRange, PmfFormatError, ZeroAtOrigin
from ezbranch.functional import pgf as F

NORMALIZATION_TOL = 1e-9

PmfTable = Mapping[int, float] | Iterable[tuple[int, float]]
PairTable = Mapping[tuple[int, int], float] | Iterable[tuple[tuple[int, int], float]]


def _items(table) -> list:
    return list(table.items()) if isinstance(table, Mapping) else list(table)


def _normalized(probs: np.ndarray) -> np.ndarray:
    if (probs < 0.0).any():
        raise NegativeMass(f"Probabilities must be non-negative, got {probs[probs < 0].tolist()}.")
    total = float(probs.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"Probabilities sum to {total!r}, not 1 within {NORMALIZATION_TOL}.")
    return probs / total


@dataclass(frozen=True, eq=False)
class OffspringDistribution:
    r"""Finite-support law of the number of children of one particle.

    Use ``from_pmf`` (or ``binomial2``) rather than the constructor; they
    validate and renormalize the table.

    Parameters
    ----------
    pmf : np.ndarray
        Read-only dense pmf, ``pmf[k]`` is the probability of ``k`` children.
        The last entry is positive.
    binomial_alpha : float, optional
        Set when the law is Binomial(2, alpha); simulators use it to sample
        sums of i.i.d. copies directly.
    """

    pmf: np.ndarray
    binomial_alpha: float | None = None

    @property
    def max_value(self) -> int:
        return int(self.pmf.size - 1)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.pmf > 0.0)

    @property
    def mean(self) -> float:
        return F.mean(self.pmf)

    @property
    def variance(self) -> float:
        return F.variance(self.pmf)

    @property
    def is_supercritical(self) -> bool:
        return self.pmf[0] > 0.0 and self.mean > 1.0 + F.SUPERCRITICAL_TOL

    @functools.cached_property
    def alias(self) -> AliasTable:
        return AliasTable.build(self.pmf[self.support])

    def table(self) -> dict[int, float]:
        return {int(k): float(self.pmf[k]) for k in self.support}

    def pgf(self, s: float) -> float:
        return F.pgf_eval(self.pmf, s)

    def pgf_iterate(self, K: int) -> float:
        return F.pgf_iterate(self.pmf, K)

    @functools.cached_property
    def extinction_probability(self) -> float:
        return F.extinction_probability(self.pmf)

    def capped_sum(self, m: int, cap: int) -> np.ndarray:
        return F.capped_sum_distribution(self.pmf, m, cap)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        r"""Draw offspring counts; a single ``int`` when ``size`` is None."""

        values = self.support[self.alias.sample(rng, size)]
        return int(values) if size is None else values

    def __repr__(self) -> str:
        return f"OffspringDistribution({self.table()})"


def _build_offspring(
    items: list[tuple[int, float]], require_zero: bool = True, binomial_alpha: float | None = None
) -> OffspringDistribution:
    if not items:
        raise NotNormalized("Empty pmf table.")

    values = [int(k) for k, _ in items]
    if len(set(values)) != len(values):
        raise PmfFormatError(f"Values must be distinct, got {sorted(values)}.")
    if min(values) < 0:
        raise OutOfRange(f"Offspring values must be non-negative, got {min(values)}.")

    probs = _normalized(np.asarray([float(p) for _, p in items], dtype=np.float64))
    pmf = np.zeros(max(values) + 1, dtype=np.float64)
    pmf[values] = probs
    nz = np.flatnonzero(pmf > 0.0)
    pmf = pmf[: nz[-1] + 1].copy()

    if require_zero and pmf[0] <= 0.0:
        raise ZeroAtOrigin("Offspring law must put positive mass at 0.")

    pmf.setflags(write=False)
    return OffspringDistribution(pmf=pmf, binomial_alpha=binomial_alpha)


def from_pmf(table: PmfTable) -> OffspringDistribution:
    r"""Build a validated offspring distribution.

    Parameters
    ----------
    table : Mapping[int, float] | Iterable[tuple[int, float]]
        Distinct non-negative values with their probabilities. The
        probabilities must sum to one within 1e-9 and are then renormalized.

    Returns
    -------
    OffspringDistribution

    Raises
    ------
    NotNormalized, ZeroAtOrigin, NegativeMass
    """
    return _build_offspring(_items(table))


@dataclass(frozen=True, eq=False)
class PairedOffspring:
    r"""Joint law of (children one step right, children in place).

    Every support pair satisfies ``x + x' >= 1``, so each particle leaves at
    least one child at its own position or to its right.

    Parameters
    ----------
    pairs : np.ndarray
        Support pairs with shape (K, 2).
    probs : np.ndarray
        Probabilities with shape (K,).
    marginal_x : OffspringDistribution
        Law of the first coordinate. It may have no mass at 0 (e.g. the
        deterministic shift), in which case exact computations reject it.
    alpha : float, optional
        Set for the Bernoulli model built by ``binomial2``.
    """

    pairs: np.ndarray
    probs: np.ndarray
    marginal_x: OffspringDistribution
    alpha: float | None = None

    @functools.cached_property
    def alias(self) -> AliasTable:
        return AliasTable.build(self.probs)

    def table(self) -> dict[tuple[int, int], float]:
        return {(int(x), int(y)): float(p) for (x, y), p in zip(self.pairs, self.probs)}

    def sample(self, rng: np.random.Generator, size: int | None = None):
        r"""Draw ``(x, x')`` pairs; a tuple when ``size`` is None."""

        idx = self.alias.sample(rng, size)
        if size is None:
            x, y = self.pairs[int(idx)]
            return int(x), int(y)
        return self.pairs[idx]

    def __repr__(self) -> str:
        return f"PairedOffspring({self.table()})"


def paired_from_pmf(
    table: PairTable, alpha: float | None = None, marginal_alpha: float | None = None
) -> PairedOffspring:
    r"""Build a validated joint law from ``{(x, x'): p}``.

    Raises
    ------
    NotNormalized, NegativeMass, OutOfRange
        ``OutOfRange`` when a pair has negative entries or ``x + x' = 0``.
    """
    items = [((int(x), int(y)), float(p)) for (x, y), p in _items(table)]
    if not items:
        raise NotNormalized("Empty joint pmf table.")

    keys = [k for k, _ in items]
    if len(set(keys)) != len(keys):
        raise PmfFormatError("Pairs must be distinct.")
    for x, y in keys:
        if x < 0 or y < 0:
            raise OutOfRange(f"Pair entries must be non-negative, got {(x, y)}.")

    probs = _normalized(np.asarray([p for _, p in items], dtype=np.float64))
    keep = probs > 0.0
    pairs = np.asarray(keys, dtype=np.int64)[keep]
    probs = probs[keep]
    if (pairs.sum(axis=1) < 1).any():
        raise OutOfRange("Every pair must satisfy x + x' >= 1.")

    marginal: dict[int, float] = {}
    for (x, _), p in zip(pairs.tolist(), probs.tolist()):
        marginal[x] = marginal.get(x, 0.0) + p

    pairs.setflags(write=False)
    probs.setflags(write=False)
    return PairedOffspring(
        pairs=pairs,
        probs=probs,
        marginal_x=_build_offspring(
            list(marginal.items()),
            require_zero=False,
            binomial_alpha=alpha if marginal_alpha is None else marginal_alpha,
        ),
        alpha=alpha,
    )


def binomial2(alpha: float) -> PairedOffspring:
    r"""Bernoulli branching-selection law.

    Each particle is duplicated and each copy independently moves one step
    right with probability ``alpha``: ``x ~ Binomial(2, alpha)``, ``x' = 2 - x``.

    Parameters
    ----------
    alpha : float
        Step probability in :math:`(0, 1)`.

    Returns
    -------
    PairedOffspring
    """
    if not 0.0 < alpha < 1.0:
        raise OutOfRange(f"alpha must lie in (0, 1), got {alpha}.")

    b = 1.0 - alpha
    return paired_from_pmf(
        {(0, 2): b * b, (1, 1): 2.0 * alpha * b, (2, 0): alpha * alpha}, alpha=alpha
    )


bernoulli_pairing = binomial2


def minimal_stay(x: OffspringDistribution) -> PairedOffspring:
    r"""Pair an offspring law with ``x' = 1{x = 0}``.

    A particle stays put only when it has no child to the right, the least
    in-place offspring compatible with ``x + x' >= 1``.
    """
    return paired_from_pmf(
        {(int(k), int(k == 0)): float(x.pmf[k]) for k in x.support},
        marginal_alpha=x.binomial_alpha,
    )


def sample(
    d: OffspringDistribution | PairedOffspring, rng: np.random.Generator
) -> int | tuple[int, int]:
    r"""Draw one value (or one pair) from ``d``."""

    return d.sample(rng)


def binomial_marginal(alpha: float) -> OffspringDistribution:
    r"""Binomial(2, alpha) offspring law; requires ``alpha < 1`` for mass at 0."""

    return binomial2(alpha).marginal_x

