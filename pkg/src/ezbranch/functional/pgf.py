import math

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

from ezbranch.errors import NotSupercritical, OutOfRange
from ezbranch.utils.logger import get_logger

_logger = get_logger(__name__)

BISECT_UPPER_EPS = 1e-9
BISECT_XTOL = 1e-13
NEWTON_POLISH_STEPS = 2
SUPERCRITICAL_TOL = 1e-12


def mean(pmf: np.ndarray) -> float:
    r"""Exact mean of a pmf given as a dense array indexed by value."""

    return float(np.dot(np.arange(pmf.shape[-1]), pmf))


def variance(pmf: np.ndarray) -> float:
    r"""Exact variance of a pmf given as a dense array indexed by value."""

    k = np.arange(pmf.shape[-1])
    m = np.dot(k, pmf)
    return float(np.dot((k - m) ** 2, pmf))


def pgf_eval(pmf: np.ndarray, s: float) -> float:
    r"""Evaluate the probability generating function :math:`f(s) = \sum_k p_k s^k`.

    Parameters
    ----------
    pmf : np.ndarray
        Dense pmf, ``pmf[k]`` is the probability of value ``k``.
    s : float
        Evaluation point in :math:`[0, 1]`.

    Returns
    -------
    float
        :math:`f(s) \in [p_0, 1]`; exactly ``1.0`` at ``s = 1``.
    """
    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"pgf argument must lie in [0, 1], got {s}.")
    if s == 1.0:
        return 1.0
    return float(P.polyval(s, pmf))


def pgf_derivative(pmf: np.ndarray, s: float) -> float:
    r"""Evaluate :math:`f'(s)` on :math:`[0, 1]`; :math:`f'(1)` is the mean."""

    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"pgf argument must lie in [0, 1], got {s}.")
    if pmf.shape[-1] < 2:
        return 0.0
    return float(P.polyval(s, P.polyder(pmf)))


def pgf_iterate(pmf: np.ndarray, K: int) -> float:
    r"""Compute :math:`f_K(0)`, the K-fold composition of the pgf at zero.

    :math:`f_K` is also the generating function of the K-th generation of the
    Galton-Watson process started from one ancestor, so :math:`f_K(0)` is the
    probability that the process is extinct by generation ``K``. The sequence
    is nondecreasing in ``K`` and converges to the extinction probability.

    Parameters
    ----------
    pmf : np.ndarray
        Dense offspring pmf.
    K : int
        Number of compositions, ``K >= 0``.

    Returns
    -------
    float
    """
    if K < 0:
        raise OutOfRange(f"Number of iterates must be non-negative, got {K}.")

    x = 0.0
    for _ in range(K):
        x = float(P.polyval(x, pmf))
    return x


def _check_supercritical(pmf: np.ndarray) -> None:
    m = mean(pmf)
    if m <= 1.0 + SUPERCRITICAL_TOL:
        raise NotSupercritical(
            f"Offspring mean must be strictly greater than 1, got {m!r}."
        )
    if pmf[0] <= 0.0:
        raise NotSupercritical("Offspring law has no mass at 0; extinction is impossible.")


def extinction_probability(pmf: np.ndarray) -> float:
    r"""Solve :math:`f(q) = q` for the extinction probability :math:`q \in (0, 1)`.

    ``g(x) = f(x) - x`` is positive at 0 (it equals :math:`p_0`) and negative
    just below 1 for a supercritical law, and convex, so it has exactly one
    root in between. The root is bracketed by bisection on
    :math:`[0, 1 - 10^{-9}]` down to :math:`10^{-13}` and then polished with
    two Newton steps using the analytic derivative.

    Parameters
    ----------
    pmf : np.ndarray
        Dense offspring pmf with mean strictly above one.

    Returns
    -------
    float
        Extinction probability with fixed-point residual below :math:`10^{-12}`.
    """
    _check_supercritical(pmf)

    def g(x: float) -> float:
        return float(P.polyval(x, pmf)) - x

    hi = 1.0 - BISECT_UPPER_EPS
    if g(hi) >= 0.0:
        raise NotSupercritical(
            "Extinction probability is numerically indistinguishable from 1; "
            f"offspring mean {mean(pmf)!r} is too close to critical."
        )

    q = optimize.bisect(g, 0.0, hi, xtol=BISECT_XTOL)
    dpmf = P.polyder(pmf)
    for _ in range(NEWTON_POLISH_STEPS):
        slope = float(P.polyval(q, dpmf)) - 1.0
        if slope == 0.0:
            break
        step = q - g(q) / slope
        if 0.0 < step < 1.0:
            q = step

    _logger.debug("extinction probability %.15g, residual %.3g", q, abs(g(q)))
    return float(q)


def extinction_gap(pmf: np.ndarray, K: int) -> float:
    r"""Compute :math:`q - f_K(0)`, the probability of dying after generation K.

    Equivalently the probability that the process eventually dies while
    :math:`Z_K > 0`. Nonnegative and geometrically decaying in ``K`` for
    supercritical laws.
    """
    q = extinction_probability(pmf)
    return max(q - pgf_iterate(pmf, K), 0.0)


def q_alpha_closed_form(alpha: float) -> float:
    r"""Extinction probability of the Binomial(2, alpha) offspring law.

    .. math::

        q_\alpha = \frac{1 - 2\alpha(1-\alpha) - \sqrt{1 - 4\alpha(1-\alpha)}}{2\alpha^2}

    Parameters
    ----------
    alpha : float
        Success probability in :math:`(1/2, 1)`.

    Returns
    -------
    float
    """
    if not 0.5 < alpha < 1.0:
        raise OutOfRange(f"alpha must lie in (1/2, 1), got {alpha}.")

    b = alpha * (1.0 - alpha)
    return (1.0 - 2.0 * b - math.sqrt(1.0 - 4.0 * b)) / (2.0 * alpha**2)


def lump_at_cap(pmf: np.ndarray, cap: int) -> np.ndarray:
    r"""Fold all mass at values ``>= cap`` into the bucket ``cap``.

    Returns an array of length ``cap + 1`` (zero padded when the support is
    shorter).
    """
    out = np.zeros(cap + 1, dtype=np.float64)
    head = min(pmf.shape[-1], cap)
    out[:head] = pmf[:head]
    out[cap] += pmf[cap:].sum()
    return out


def capped_sum_distribution(pmf: np.ndarray, m: int, cap: int) -> np.ndarray:
    r"""Exact law of :math:`\min(cap, X_1 + \dots + X_m)` for i.i.d. :math:`X_i`.

    Because summands are non-negative,
    :math:`\min(c, \sum x_i) = \min(c, \sum \min(x_i, c))`, so every factor and
    every partial convolution can be lumped at ``cap`` without changing the
    result.

    Parameters
    ----------
    pmf : np.ndarray
        Dense pmf of a single summand.
    m : int
        Number of summands, ``m >= 0``.
    cap : int
        Censoring level, ``cap >= 1``.

    Returns
    -------
    np.ndarray
        Array of length ``cap + 1``; the last bucket carries
        :math:`P(\text{sum} \geq cap)`.
    """
    if m < 0:
        raise OutOfRange(f"Number of summands must be non-negative, got {m}.")
    if cap < 1:
        raise OutOfRange(f"Cap must be at least 1, got {cap}.")

    base = lump_at_cap(pmf, cap)
    if m == 0:
        out = np.zeros(cap + 1, dtype=np.float64)
        out[0] = 1.0
        return out

    out = base
    for _ in range(m - 1):
        out = lump_at_cap(np.convolve(out, base), cap)
    return out


def capped_sum_rows(pmf: np.ndarray, cap: int) -> np.ndarray:
    r"""Stack ``capped_sum_distribution(pmf, m, cap)`` for ``m = 0, ..., cap``.

    Row ``m`` is obtained from row ``m - 1`` by a single lumped convolution,
    which yields the whole censored transition table in ``cap`` convolutions.

    Returns
    -------
    np.ndarray
        Array of shape ``(cap + 1, cap + 1)``.
    """
    if cap < 1:
        raise OutOfRange(f"Cap must be at least 1, got {cap}.")

    base = lump_at_cap(pmf, cap)
    rows = np.zeros((cap + 1, cap + 1), dtype=np.float64)
    rows[0, 0] = 1.0
    for m in range(1, cap + 1):
        rows[m] = lump_at_cap(np.convolve(rows[m - 1], base), cap)
    return rows
