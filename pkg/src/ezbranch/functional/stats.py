import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import special

from ezbranch.errors import (
    EmptySample,
    NotNormalized,
    TooFewCategories,
    TooFewSamples,
    UnderpooledExpectation,
)

Z_95 = 1.96
MIN_EXPECTED_COUNT = 5.0


@dataclass(frozen=True)
class GofResult:
    r"""Outcome of a goodness-of-fit test.

    Parameters
    ----------
    statistic : float
        Test statistic, non-negative.
    p_value : float
        Asymptotic p-value in :math:`[0, 1]`.
    n : int
        Sample size.
    dof : int, optional
        Degrees of freedom (chi-square only).
    """

    statistic: float
    p_value: float
    n: int
    dof: int | None = None


@dataclass(frozen=True)
class GeometricFit:
    p_hat: float
    stderr: float
    n: int


def ks_statistic(samples: Sequence[float] | np.ndarray, cdf: Callable) -> GofResult:
    r"""One-sample Kolmogorov-Smirnov test against a continuous distribution.

    :math:`D_n = \sup_x |F_n(x) - F(x)|` is evaluated in one pass over the
    sorted sample, comparing ``F`` with the empirical distribution function
    on both sides of every jump. The p-value is the asymptotic Kolmogorov
    series :math:`2\sum_{j\geq1}(-1)^{j-1} e^{-2j^2 n D^2}`.

    Parameters
    ----------
    samples : Sequence[float]
        Finite sample values.
    cdf : Callable
        Vectorized distribution function.

    Returns
    -------
    GofResult
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise EmptySample("KS statistic needs at least one sample.")
    if not np.isfinite(x).all():
        raise EmptySample("KS statistic needs finite samples.")

    f = np.asarray(cdf(x), dtype=np.float64)
    i = np.arange(1, n + 1)
    d = float(max((i / n - f).max(), (f - (i - 1) / n).max()))
    p = float(np.clip(special.kolmogorov(math.sqrt(n) * d), 0.0, 1.0))
    return GofResult(statistic=d, p_value=p, n=n)


def exponential_cdf(x: np.ndarray) -> np.ndarray:
    r"""Distribution function of Exp(1)."""

    return -np.expm1(-np.maximum(x, 0.0))


def geometric_fit(samples: Iterable[int]) -> GeometricFit:
    r"""Maximum likelihood fit of a geometric law on :math:`\{0, 1, 2, \dots\}`.

    :math:`\hat p = n / (n + \sum x)` with delta-method standard error
    :math:`\hat p \sqrt{(1 - \hat p) / n}`.
    """
    x = np.asarray(list(samples), dtype=np.int64)
    if x.size == 0:
        raise EmptySample("Geometric fit needs at least one sample.")

    n = int(x.size)
    p_hat = n / (n + int(x.sum()))
    return GeometricFit(p_hat=p_hat, stderr=p_hat * math.sqrt((1.0 - p_hat) / n), n=n)


def pool_categories(
    observed: np.ndarray, expected: np.ndarray, min_expected: float = MIN_EXPECTED_COUNT
) -> tuple[np.ndarray, np.ndarray]:
    r"""Merge adjacent categories from the tail inward until each expected count
    reaches ``min_expected``.

    A remainder at the head that stays below the threshold is merged into the
    nearest pooled bin.
    """
    obs_bins: list[float] = []
    exp_bins: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed[::-1], expected[::-1]):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0

    if acc_e > 0.0 or acc_o > 0.0:
        if exp_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    return np.asarray(obs_bins[::-1]), np.asarray(exp_bins[::-1])


def chi_square_gof(
    observed: Sequence[int] | np.ndarray,
    expected_probs: Sequence[float] | np.ndarray,
    pool: bool = True,
    min_expected: float = MIN_EXPECTED_COUNT,
) -> GofResult:
    r"""Pearson chi-square goodness-of-fit test.

    Parameters
    ----------
    observed : Sequence[int]
        Observed counts per category.
    expected_probs : Sequence[float]
        Null probabilities per category, summing to one.
    pool : bool, default to True
        Pool sparse categories from the tail inward. When ``False``, any
        expected count below ``min_expected`` raises ``UnderpooledExpectation``.
    min_expected : float, default to 5
        Minimum expected count per category.

    Returns
    -------
    GofResult
        Statistic :math:`\sum (O - E)^2 / E`, ``dof = categories - 1`` and the
        upper tail :math:`Q(dof/2, x/2)` of the regularized incomplete gamma.
    """
    obs = np.asarray(observed, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    if obs.shape != probs.shape:
        raise TooFewCategories(
            f"Observed and expected have different shapes: {obs.shape} vs {probs.shape}."
        )
    if abs(probs.sum() - 1.0) > 1e-9:
        raise NotNormalized(f"Expected probabilities sum to {probs.sum()!r}, not 1.")

    n = float(obs.sum())
    if n <= 0:
        raise EmptySample("Chi-square test needs at least one observation.")
    exp = probs * n

    if pool:
        obs, exp = pool_categories(obs, exp, min_expected)
    elif (exp < min_expected).any():
        raise UnderpooledExpectation(
            f"Expected counts below {min_expected}: {exp[exp < min_expected].tolist()}."
        )

    if obs.size < 2:
        raise TooFewCategories(
            f"Chi-square test needs at least 2 categories, got {obs.size}."
        )

    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = int(obs.size - 1)
    p = float(np.clip(special.gammaincc(dof / 2.0, stat / 2.0), 0.0, 1.0))
    return GofResult(statistic=stat, p_value=p, n=int(n), dof=dof)


@dataclass
class StreamMoments:
    r"""Single-pass mean and variance accumulator (Welford), mergeable.

    Merging uses the pairwise update of Chan, Golub and LeVeque, so
    ``a.merge(b)`` equals the moments of the concatenated streams up to
    rounding. Reductions are always done in a fixed order by the callers.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def extend(self, values: Iterable[float]) -> "StreamMoments":
        for x in values:
            self.push(float(x))
        return self

    def merge(self, other: "StreamMoments") -> "StreamMoments":
        if other.count == 0:
            return StreamMoments(self.count, self.mean, self.m2)
        if self.count == 0:
            return StreamMoments(other.count, other.mean, other.m2)

        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / count
        return StreamMoments(count, mean, m2)

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise TooFewSamples(f"Sample variance needs at least 2 values, got {self.count}.")
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return math.inf
        return math.sqrt(self.variance / self.count)

    @property
    def ci95(self) -> float:
        r"""Half-width :math:`1.96 s / \sqrt{n}`; infinite below two samples."""

        return Z_95 * self.stderr


def stream_moments(values: Iterable[float]) -> tuple[float, float, float]:
    r"""Mean, sample variance and 95% half-width of a stream of values."""

    acc = StreamMoments().extend(values)
    return acc.mean, acc.variance, acc.ci95
