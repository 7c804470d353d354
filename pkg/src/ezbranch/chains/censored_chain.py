import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch

from ezbranch.distributions import OffspringDistribution
from ezbranch.errors import HardCap, LevelTooSmall, NotSupercritical, ZeroAtOrigin
from ezbranch.functional import chain as C
from ezbranch.utils.logger import get_logger

_logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class KsDistance:
    r"""Exact Kolmogorov distance with the bound on its truncation error."""

    statistic: float
    uncertainty: float


@dataclass(frozen=True, eq=False)
class CensoredChain:
    r"""Exact finite Markov chain of the Galton-Watson process censored at N.

    Parameters
    ----------
    n : int
        Censoring level ``N >= 2``.
    offspring : OffspringDistribution
        Offspring law with positive mass at 0.
    P : torch.Tensor
        Row-stochastic transition matrix over states ``0..N``, ``float64``.
    """

    n: int
    offspring: OffspringDistribution
    P: torch.Tensor

    @property
    def M(self) -> torch.Tensor:
        r"""Restriction of ``P`` to the transient states ``1..N``."""

        return self.P[1:, 1:]

    @functools.cached_property
    def expected_absorption(self) -> np.ndarray:
        r"""Vector of :math:`E[U_m]` for ``m = 1..N``."""

        return C.expected_absorption(self.P).numpy()

    @functools.cached_property
    def never_return_probability(self) -> float:
        return C.never_return_probability(self.P)

    @functools.cached_property
    def expected_final_excursion(self) -> float:
        r""":math:`E[U_N - V_N]`, the mean time from the last visit to N until extinction."""

        return C.expected_final_excursion(self.P, self.never_return_probability)

    @functools.cached_property
    def expected_last_visit(self) -> float:
        return float(self.expected_absorption[-1]) - self.expected_final_excursion

    @property
    def expected_visits_to_top(self) -> float:
        return C.expected_visits_to_top(self.P)

    @property
    def step_down_probability(self) -> float:
        r""":math:`P(X_1 < N \mid X_0 = N)`, an upper bound of :math:`q_N`."""

        return float(1.0 - self.P[self.n, self.n])

    @functools.cached_property
    def expected_conditioned_gap(self) -> float:
        return C.expected_conditioned_gap(self.P, self.never_return_probability)

    def state_distribution(self, k: int) -> np.ndarray:
        return C.state_distribution(self.P, k)

    def distribution_of_U(self, tail_eps: float = C.DEFAULT_TAIL_EPS) -> np.ndarray:
        return C.distribution_of_absorption(self.P, tail_eps)

    def return_time_law(self, tail_eps: float = C.DEFAULT_TAIL_EPS) -> np.ndarray:
        return C.first_return_law(self.P, tail_eps)

    def ks_to_exponential(
        self, q: float | None = None, tail_eps: float = C.DEFAULT_TAIL_EPS
    ) -> KsDistance:
        r"""Exact Kolmogorov distance between :math:`U_N q^N` and Exp(1).

        Parameters
        ----------
        q : float, optional
            Extinction probability of the uncensored process; computed from
            the offspring law when omitted.
        tail_eps : float, default to 1e-10
            Truncation of the law of :math:`U_N`.

        Returns
        -------
        KsDistance
        """
        if not self.offspring.is_supercritical:
            raise NotSupercritical(
                f"KS to Exp(1) needs a supercritical law, mean is {self.offspring.mean!r}."
            )
        if q is None:
            q = self.offspring.extinction_probability

        # The tail of U_N decays like exp(-k / E[U_N]).
        needed = float(self.expected_absorption[-1]) * (math.log(1.0 / tail_eps) + 1.0)
        if needed > C.HORIZON_CAP:
            raise HardCap(
                f"Exact law of U_N at N={self.n} needs about {needed:.3g} steps, "
                f"more than the cap {C.HORIZON_CAP}."
            )
        cdf = C.absorption_cdf(self.P, tail_eps)
        d = C.lattice_ks_to_exponential(cdf, q**self.n)
        return KsDistance(statistic=d, uncertainty=tail_eps)


def build_chain(offspring: OffspringDistribution, n: int) -> CensoredChain:
    r"""Build the censored chain with rows ``min(n, X_1 + ... + X_m)``.

    Raises
    ------
    LevelTooSmall
        When ``n < 2``.
    ZeroAtOrigin
        When the offspring law has no mass at 0.
    """
    if n < 2:
        raise LevelTooSmall(f"Censoring level must be at least 2, got {n}.")
    if offspring.pmf[0] <= 0.0:
        raise ZeroAtOrigin("Offspring law must put positive mass at 0.")

    P = C.censored_transition_matrix(offspring.pmf, n)
    _logger.debug("built censored chain with %d states", n + 1)
    return CensoredChain(n=n, offspring=offspring, P=P)


@dataclass(frozen=True)
class ChainReport:
    r"""Exact summary of one censored chain.

    Field names are the JSON/CSV contract.

    Parameters
    ----------
    n : int
        Censoring level.
    q : float
        Extinction probability of the uncensored process.
    q_n : float
        Never-return probability.
    expected_u : list[float]
        :math:`E[U_m]` for ``m = 1..N``.
    expected_v : float
        :math:`E[V_N]`.
    ratio_mean : float
        :math:`E[U_N] q^N`.
    ratio_qn : float
        :math:`q_N / q^N`.
    ks_to_exp : float, optional
        Exact Kolmogorov distance of :math:`U_N q^N` to Exp(1); ``None`` when
        the exact iteration is out of reach.
    ks_uncertainty : float, optional
        Truncation error bound of ``ks_to_exp``.
    """

    n: int
    q: float
    q_n: float
    expected_u: list[float]
    expected_v: float
    ratio_mean: float
    ratio_qn: float
    ks_to_exp: float | None = None
    ks_uncertainty: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def chain_report(
    chain: CensoredChain,
    q: float | None = None,
    tail_eps: float = C.DEFAULT_TAIL_EPS,
    with_ks: bool = True,
) -> ChainReport:
    r"""Collect the exact quantities of ``chain`` into a ``ChainReport``.

    ``q`` defaults to the extinction probability of the offspring law. The KS
    fields stay ``None`` when the exact law of :math:`U_N` would need more
    than ``HORIZON_CAP`` iterations.
    """
    if q is None:
        q = chain.offspring.extinction_probability
    q_pow = q**chain.n
    u = chain.expected_absorption
    q_n = chain.never_return_probability

    ks = None
    if with_ks:
        try:
            ks = chain.ks_to_exponential(q, tail_eps)
        except HardCap as e:
            _logger.warning("skipping exact KS at N=%d: %s", chain.n, e)

    return ChainReport(
        n=chain.n,
        q=q,
        q_n=q_n,
        expected_u=[float(x) for x in u],
        expected_v=chain.expected_last_visit,
        ratio_mean=float(u[-1]) * q_pow,
        ratio_qn=q_n / q_pow if q_pow > 0.0 else math.inf,
        ks_to_exp=None if ks is None else ks.statistic,
        ks_uncertainty=None if ks is None else ks.uncertainty,
    )


def expected_absorption(chain: CensoredChain) -> np.ndarray:
    return chain.expected_absorption


def never_return_probability(chain: CensoredChain) -> float:
    return chain.never_return_probability


def expected_last_visit(chain: CensoredChain) -> float:
    return chain.expected_last_visit


def distribution_of_U(chain: CensoredChain, tail_eps: float = C.DEFAULT_TAIL_EPS) -> np.ndarray:
    return chain.distribution_of_U(tail_eps)


def exact_ks_to_exponential(
    chain: CensoredChain, q: float | None = None, tail_eps: float = C.DEFAULT_TAIL_EPS
) -> KsDistance:
    return chain.ks_to_exponential(q, tail_eps)


def expected_final_excursion(chain: CensoredChain) -> float:
    return chain.expected_final_excursion
