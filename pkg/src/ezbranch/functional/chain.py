import math
from dataclasses import dataclass

import numpy as np
import torch

from ezbranch.errors import HardCap, LevelTooSmall, OutOfRange, SingularSystem, ZeroAtOrigin
from ezbranch.functional.pgf import capped_sum_rows
from ezbranch.utils.logger import get_logger

_logger = get_logger(__name__)

DEFAULT_TAIL_EPS = 1e-10
HORIZON_CAP = 100_000_000
CDF_BLOCK = 1024


def censored_transition_matrix(pmf: np.ndarray, n: int) -> torch.Tensor:
    r"""Transition matrix of the Galton-Watson process censored at level ``n``.

    State ``m`` moves to :math:`\min(n, X_1 + \dots + X_m)`; state 0 is
    absorbing. Unreachable states (e.g. odd states for even-valued offspring)
    are kept.

    Parameters
    ----------
    pmf : np.ndarray
        Dense offspring pmf with positive mass at zero.
    n : int
        Censoring level, ``n >= 2``.

    Returns
    -------
    torch.Tensor
        Row-stochastic ``float64`` tensor with shape (n + 1, n + 1).
    """
    if n < 2:
        raise LevelTooSmall(f"Censoring level must be at least 2, got {n}.")
    if pmf[0] <= 0.0:
        raise ZeroAtOrigin("Offspring law must put positive mass at 0.")

    return torch.from_numpy(capped_sum_rows(pmf, n))


def _transient_block(P: torch.Tensor) -> torch.Tensor:
    return P[1:, 1:]


def _lu_factor(A: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    r"""Dense LU factorization with partial pivoting."""

    n = A.shape[0]
    LU, pivots, info = torch.linalg.lu_factor_ex(A)
    if int(info) != 0:
        raise SingularSystem(
            f"Transient system of size {n} is singular (LU pivot {int(info)} is zero); "
            "the offspring law probably has no mass at 0."
        )
    return LU, pivots


def _solve(A: torch.Tensor, b: torch.Tensor, adjoint: bool = False) -> torch.Tensor:
    LU, pivots = _lu_factor(A)
    x = torch.linalg.lu_solve(LU, pivots, b.reshape(-1, 1), adjoint=adjoint).reshape(-1)
    if not torch.isfinite(x).all():
        raise SingularSystem("Linear solve produced non-finite values.")
    return x


def _fundamental_system(P: torch.Tensor) -> torch.Tensor:
    M = _transient_block(P)
    return torch.eye(M.shape[0], dtype=M.dtype) - M


@dataclass(frozen=True)
class _InteriorSolution:
    r"""Solves against ``I - B``, ``B`` the block of states strictly between 0 and N.

    Parameters
    ----------
    k : torch.Tensor
        Expected time to hit :math:`\{0, N\}` from ``0 < j < N``.
    w : torch.Tensor
        Probability of hitting N before 0.
    h : torch.Tensor
        Probability of hitting 0 before N.
    g : torch.Tensor
        Solution of :math:`(I - B) g = h`.
    """

    k: torch.Tensor
    w: torch.Tensor
    h: torch.Tensor
    g: torch.Tensor


def _interior_solution(P: torch.Tensor) -> _InteriorSolution:
    # Every interior state reaches 0 with positive probability, so I - B is nonsingular.
    n = P.shape[0] - 1
    A = torch.eye(n - 1, dtype=P.dtype) - P[1:n, 1:n]
    LU, pivots = _lu_factor(A)
    rhs = torch.stack([torch.ones(n - 1, dtype=P.dtype), P[1:n, n], P[1:n, 0]], dim=1)
    x = torch.linalg.lu_solve(LU, pivots, rhs)
    g = torch.linalg.lu_solve(LU, pivots, x[:, 2:3])
    if not (torch.isfinite(x).all() and torch.isfinite(g).all()):
        raise SingularSystem("Linear solve produced non-finite values.")
    return _InteriorSolution(k=x[:, 0], w=x[:, 1], h=x[:, 2], g=g[:, 0])


def _never_return(P: torch.Tensor, sol: _InteriorSolution) -> float:
    n = P.shape[0] - 1
    q_n = float(P[n, 0] + torch.dot(P[n, 1:n], sol.h))
    if q_n <= 0.0:
        raise SingularSystem(f"Never-return probability underflowed to {q_n!r} at N={n}.")
    return q_n


def expected_absorption(P: torch.Tensor) -> torch.Tensor:
    r"""Expected absorption times :math:`E[U_m]` for start states ``m = 1..N``.

    The path from N splits into i.i.d. cycles that end at the first hit of
    :math:`\{0, N\}`; there are :math:`1/q_N` of them on average, so

    .. math::

        E[U_N] = \frac{1 + \sum_{0<j<N} P(N, j) k_j}{q_N}, \qquad
        E[U_j] = k_j + w_j E[U_N],

    with ``k`` and ``w`` solved on the interior block only.

    Parameters
    ----------
    P : torch.Tensor
        Censored transition matrix with shape (N + 1, N + 1).

    Returns
    -------
    torch.Tensor
        Vector with shape (N,); the last entry is :math:`E[U_N]`.
    """
    n = P.shape[0] - 1
    sol = _interior_solution(P)
    u_top = (1.0 + float(torch.dot(P[n, 1:n], sol.k))) / _never_return(P, sol)
    if not math.isfinite(u_top):
        raise SingularSystem(f"Expected absorption time overflows at N={n}.")
    top = torch.tensor([u_top], dtype=P.dtype)
    return torch.cat([sol.k + sol.w * u_top, top])


def never_return_probability(P: torch.Tensor) -> float:
    r"""Probability :math:`q_N` that the chain started at N never hits N again.

    With ``h_j`` the probability of reaching 0 before N from ``0 < j < N``,

    .. math::

        h_j = P(j, 0) + \sum_{0<i<N} P(j, i) h_i, \qquad
        q_N = P(N, 0) + \sum_{0<j<N} P(N, j) h_j.
    """
    return _never_return(P, _interior_solution(P))


def expected_visits_to_top(P: torch.Tensor) -> float:
    r"""Expected number of visits to N started from N, :math:`F_{N,N}`.

    ``F`` is the fundamental matrix :math:`(I - M)^{-1}`; the identity
    :math:`q_N F_{N,N} = 1` ties this to ``never_return_probability``.
    """
    A = _fundamental_system(P)
    e = torch.zeros(A.shape[0], dtype=A.dtype)
    e[-1] = 1.0
    return float(_solve(A, e)[-1])


def expected_final_excursion(P: torch.Tensor, q_n: float | None = None) -> float:
    r"""Expected length :math:`E[U_N - V_N]` of the excursion after the last visit to N.

    With ``h`` the probabilities of reaching 0 before N and
    :math:`(I - B) g = h`, the restricted first moment of the absorption time is

    .. math::

        E_N[\tau_0; \tau_0 < \tau_N^+] = P(N, 0) + \sum_{0<j<N} P(N, j) (h_j + g_j),

    and dividing by :math:`q_N` conditions on never coming back. The result
    is at least 1.
    """
    n = P.shape[0] - 1
    sol = _interior_solution(P)
    if q_n is None:
        q_n = _never_return(P, sol)

    restricted = float(P[n, 0] + torch.dot(P[n, 1:n], sol.h + sol.g))
    return max(restricted / q_n, 1.0)


def expected_last_visit(P: torch.Tensor, q_n: float | None = None) -> float:
    r"""Expected last visit time :math:`E[V_N]` to level N.

    Uses :math:`E[V_N] = E[U_N] - E[U_N - V_N]`, so :math:`E[U_N] \geq E[V_N] + 1`
    survives rounding.

    Parameters
    ----------
    P : torch.Tensor
        Censored transition matrix.
    q_n : float, optional
        Never-return probability if already known.

    Returns
    -------
    float
    """
    u_n = float(expected_absorption(P)[-1])
    return u_n - expected_final_excursion(P, q_n)


def state_distribution(P: torch.Tensor, k: int) -> np.ndarray:
    r"""Law of :math:`X_k^N` started from :math:`X_0^N = N`."""

    if k < 0:
        raise OutOfRange(f"Time index must be non-negative, got {k}.")
    start = torch.zeros(P.shape[0], dtype=P.dtype)
    start[-1] = 1.0
    return (start @ torch.linalg.matrix_power(P, k)).numpy()


def absorption_cdf(
    P: torch.Tensor,
    tail_eps: float = DEFAULT_TAIL_EPS,
    horizon_cap: int = HORIZON_CAP,
    block: int = CDF_BLOCK,
) -> np.ndarray:
    r"""Distribution function :math:`k \mapsto P(U_N \leq k)` up to the tail.

    The row distribution started at N is pushed forward ``block`` steps at a
    time: the columns :math:`P^j e_0` for ``j = 1..block`` are precomputed so
    that one product yields the absorbed mass at every step of the block.

    Parameters
    ----------
    P : torch.Tensor
        Censored transition matrix.
    tail_eps : float, default to 1e-10
        Iteration stops at the first ``k`` with :math:`P(U_N > k) < tail\_eps`.
    horizon_cap : int, default to 1e8
        Maximum number of steps before raising ``HardCap``.
    block : int, default to 1024
        Number of steps per block product.

    Returns
    -------
    np.ndarray
        Values :math:`P(U_N \leq k)` for ``k = 0, ..., K``.
    """
    if not 0.0 < tail_eps < 1.0:
        raise OutOfRange(f"tail_eps must lie in (0, 1), got {tail_eps}.")

    size = P.shape[0]
    cols = torch.empty((size, block), dtype=P.dtype)
    col = P[:, 0].clone()
    for j in range(block):
        cols[:, j] = col
        col = P @ col
    P_block = torch.linalg.matrix_power(P, block)

    pi = torch.zeros(size, dtype=P.dtype)
    pi[-1] = 1.0
    chunks = [np.zeros(1)]
    steps = 0
    while True:
        cdf = (pi @ cols).numpy()
        hit = np.flatnonzero(1.0 - cdf < tail_eps)
        if hit.size:
            chunks.append(cdf[: hit[0] + 1])
            break
        chunks.append(cdf)
        steps += block
        if steps >= horizon_cap:
            raise HardCap(
                f"P(U > {steps}) is still {1.0 - cdf[-1]:.3g} >= {tail_eps:g}; "
                "the chain is too long-lived for exact iteration."
            )
        pi = pi @ P_block

    out = np.concatenate(chunks)
    _logger.debug("absorption law truncated at k=%d (tail %.3g)", out.size - 1, 1.0 - out[-1])
    return np.minimum(np.maximum.accumulate(out), 1.0)


def distribution_of_absorption(
    P: torch.Tensor, tail_eps: float = DEFAULT_TAIL_EPS
) -> np.ndarray:
    r"""Point masses :math:`P(U_N = k)` for ``k = 0, ..., K``.

    The returned masses sum to at least ``1 - tail_eps``; ``P(U_N = 0) = 0``.
    """
    return np.diff(absorption_cdf(P, tail_eps), prepend=0.0)


def lattice_ks_to_exponential(cdf: np.ndarray, h: float) -> float:
    r"""Kolmogorov distance between a lattice law on ``h * {0, 1, ...}`` and Exp(1).

    The lattice law has distribution function ``cdf[k]`` at ``k * h``. The
    supremum is attained at a jump, so both one-sided limits are compared
    at every ``k * h``; beyond the last jump the distance is bounded by the
    larger of the two remaining tails.

    Parameters
    ----------
    cdf : np.ndarray
        Values of the lattice distribution function at ``k = 0, ..., K``.
    h : float
        Lattice step, e.g. :math:`q^N`.

    Returns
    -------
    float
    """
    k = np.arange(cdf.size)
    target = -np.expm1(-k * h)
    left = np.concatenate([[0.0], cdf[:-1]])
    core = max(np.abs(cdf - target).max(), np.abs(left - target).max())
    tail = max(1.0 - cdf[-1], float(np.exp(-(cdf.size - 1) * h)))
    return float(max(core, tail))


def first_return_law(P: torch.Tensor, tail_eps: float = DEFAULT_TAIL_EPS) -> np.ndarray:
    r"""Defective law :math:`P(A_1 = k)` of the first return time to N.

    Entry ``k`` is the probability of the first return at time ``k``
    (entry 0 is zero). The masses sum to :math:`1 - q_N` up to ``tail_eps``.
    """
    n = P.shape[0] - 1
    B = P[1:n, 1:n]
    r = P[1:n, n]
    out = [0.0, float(P[n, n])]
    nu = P[n, 1:n].clone()
    steps = 1
    while float(nu.sum()) >= tail_eps:
        out.append(float(nu @ r))
        nu = nu @ B
        steps += 1
        if steps >= HORIZON_CAP:
            raise HardCap("First return law did not converge within the horizon cap.")
    return np.asarray(out)


def expected_conditioned_gap(P: torch.Tensor, q_n: float | None = None) -> float:
    r"""Compute :math:`E[A_1 - 1 \mid A_1 < \infty]` exactly.

    With ``B`` the block of states strictly between 0 and N, ``s`` the exits
    from N into them and ``r`` their entries into N,

    .. math::

        E[A_1; A_1 < \infty] = P(N, N) + s \left[(I-B)^{-2} + (I-B)^{-1}\right] r.
    """
    if q_n is None:
        q_n = never_return_probability(P)

    n = P.shape[0] - 1
    B = P[1:n, 1:n]
    A = torch.eye(n - 1, dtype=P.dtype) - B
    w = _solve(A, P[1:n, n].clone())
    ww = _solve(A, w)
    s = P[n, 1:n]
    if q_n >= 1.0:
        return float("nan")
    first_moment = float(P[n, n] + torch.dot(s, ww) + torch.dot(s, w))
    return first_moment / (1.0 - q_n) - 1.0
