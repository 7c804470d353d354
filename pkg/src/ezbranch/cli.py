import argparse
import pathlib
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from ezbranch.chains import build_chain, chain_report
from ezbranch.distributions import (
    OffspringDistribution,
    PairedOffspring,
    bernoulli_pairing,
    binomial_marginal,
    minimal_stay,
)
from ezbranch.errors import ModelAssumptionError, OutOfRange
from ezbranch.functional import exponential_cdf, ks_statistic, q_alpha_closed_form
from ezbranch.functional.chain import DEFAULT_TAIL_EPS
from ezbranch.interfaces import (
    BATCH_HEADER,
    CHAIN_HEADER,
    KS_HEADER,
    SPEED_HEADER,
    TH1_HEADER,
    TH2_HEADER,
    encode_csv,
    encode_json,
    encode_trajectory,
    read_paired_pmf,
    read_pmf,
)
from ezbranch.sims import batch_with_survival_times, simulate_speed
from ezbranch.utils.debug import time_exec
from ezbranch.utils.logger import configure_logging, get_logger

_logger = get_logger(__name__)

DEFAULT_SEED = 0
DEFAULT_RUNS = 10_000
DEFAULT_STEPS = 100_000
AGREEMENT_TOL = 1e-10

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2


@dataclass
class RunConfig:
    r"""Everything a command depends on; output is a pure function of it.

    Parameters
    ----------
    command : str
        One of ``q``, ``exact``, ``sim-censored``, ``sim-selection``,
        ``verify``.
    binomial2 : float, optional
        Success probability of the Binomial(2, alpha) offspring law.
    pmf : str, optional
        Path of a ``k p_k`` offspring pmf file.
    pair_pmf : str, optional
        Path of a ``x x' p`` joint law file.
    pair : str, optional
        ``minimal-stay`` or ``bernoulli``. Defaults to ``bernoulli`` with
        ``--binomial2`` and to ``minimal-stay`` otherwise.
    n_list : list[int]
        Censoring levels / particle numbers, in output order.
    runs : int, default to 10000
        Replicas per level of ``sim-censored``.
    steps : int, default to 100000
        Steps ``K`` of every selection run.
    seed : int, default to 0
        Root seed of every random stream.
    horizon : int, optional
        Step limit of censored paths.
    output : str, optional
        Output path; standard output when omitted.
    fmt : str, default to "csv"
        ``csv`` or ``json``.
    workers : int, default to 1
        Worker processes for replica batches. Output does not depend on it.
    tail_eps : float, default to 1e-10
        Truncation of exact laws.
    which : str, optional
        ``th1`` or ``th2`` for ``verify``.
    trajectory : str, optional
        Path of the ``k,max_y,frontier_count`` dump of ``sim-selection``.
    """

    command: str
    binomial2: float | None = None
    pmf: str | None = None
    pair_pmf: str | None = None
    pair: str | None = None
    n_list: list[int] = field(default_factory=list)
    runs: int = DEFAULT_RUNS
    steps: int = DEFAULT_STEPS
    seed: int = DEFAULT_SEED
    horizon: int | None = None
    output: str | None = None
    fmt: str = "csv"
    workers: int = 1
    tail_eps: float = DEFAULT_TAIL_EPS
    which: str | None = None
    trajectory: str | None = None

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        n_list = getattr(ns, "n_list", None)
        if n_list is None and getattr(ns, "n", None) is not None:
            n_list = [ns.n]
        return cls(
            command=ns.command,
            binomial2=ns.binomial2,
            pmf=ns.pmf,
            pair_pmf=ns.pair_pmf,
            pair=getattr(ns, "pair", None),
            n_list=list(n_list or []),
            runs=getattr(ns, "runs", DEFAULT_RUNS),
            steps=getattr(ns, "steps", DEFAULT_STEPS),
            seed=getattr(ns, "seed", DEFAULT_SEED),
            horizon=getattr(ns, "horizon", None),
            output=ns.output,
            fmt=ns.format,
            workers=getattr(ns, "workers", 1),
            tail_eps=getattr(ns, "tail_eps", DEFAULT_TAIL_EPS),
            which=getattr(ns, "which", None),
            trajectory=getattr(ns, "trajectory", None),
        )


def _offspring(config: RunConfig) -> OffspringDistribution:
    if config.binomial2 is not None:
        return binomial_marginal(config.binomial2)
    if config.pmf is not None:
        return read_pmf(config.pmf)
    return read_paired_pmf(config.pair_pmf).marginal_x


def _pairing(config: RunConfig) -> PairedOffspring:
    if config.pair_pmf is not None:
        if config.pair is not None:
            raise OutOfRange("--pair cannot be combined with --pair-pmf.")
        return read_paired_pmf(config.pair_pmf)

    pair = config.pair or ("bernoulli" if config.binomial2 is not None else "minimal-stay")
    if pair == "bernoulli":
        if config.binomial2 is None:
            raise OutOfRange("--pair bernoulli needs --binomial2.")
        return bernoulli_pairing(config.binomial2)
    return minimal_stay(_offspring(config))


def _render(config: RunConfig, header: Sequence[str], rows: list[dict]) -> str:
    if config.fmt == "json":
        return encode_json(rows)
    return encode_csv(header, ([row[h] for h in header] for row in rows))


@time_exec()
def cmd_q(config: RunConfig) -> str:
    r"""Extinction probability, with the closed form for ``--binomial2``."""

    q = _offspring(config).extinction_probability
    row: dict = {"q": q}
    if config.binomial2 is not None:
        q_alpha = q_alpha_closed_form(config.binomial2)
        row.update(q_alpha=q_alpha, agree=abs(q - q_alpha) < AGREEMENT_TOL)

    if config.fmt == "json":
        return encode_json(row)
    return encode_csv(list(row), [list(row.values())])


@time_exec()
def cmd_exact(config: RunConfig) -> str:
    r"""One ``ChainReport`` per level; the CSV ``expected_u`` column is :math:`E[U_N]`."""

    offspring = _offspring(config)
    reports = [
        chain_report(build_chain(offspring, n), tail_eps=config.tail_eps).to_dict()
        for n in config.n_list
    ]
    if config.fmt == "json":
        return encode_json(reports)
    rows = [{**r, "expected_u": r["expected_u"][-1]} for r in reports]
    return _render(config, CHAIN_HEADER, rows)


@time_exec()
def cmd_sim_censored(config: RunConfig) -> str:
    r"""Batch estimates and the KS distance of :math:`U_N q^N` to Exp(1) per level."""

    offspring = _offspring(config)
    q = offspring.extinction_probability if offspring.is_supercritical else None

    batches, ks = [], []
    for n in config.n_list:
        est, u = batch_with_survival_times(
            offspring, n, config.runs, config.horizon, config.seed, config.workers
        )
        batches.append(
            {
                "n": n,
                "runs": est.runs,
                "mean_u": est.mean_u,
                "ci_u": est.ci_u,
                "mean_v": est.mean_v,
                "ci_v": est.ci_v,
                "mean_t": est.mean_t,
                "ci_t": est.ci_t,
                "p_hat": est.t_geometric_p_hat,
                "truncated": est.truncated,
                "mean_u_over_v1": est.mean_u_over_v1,
                "mean_v1_over_t1": est.mean_v1_over_t1,
            }
        )
        row = {"n": n, "runs": int(u.size), "ks_d": None, "ks_p": None}
        # q**n underflows to 0 for long-lived laws at large N
        if q is not None and q**n > 0.0:
            gof = ks_statistic(u * q**n, exponential_cdf)
            row.update(ks_d=gof.statistic, ks_p=gof.p_value)
        ks.append(row)

    if config.fmt == "json":
        return encode_json({"batches": batches, "ks": ks})
    return _render(config, BATCH_HEADER, batches) + "\n" + _render(config, KS_HEADER, ks)


@time_exec()
def cmd_sim_selection(config: RunConfig) -> str:
    r"""Front speed of the N-particle system with the exact bracket per level."""

    law = _pairing(config)
    if config.trajectory is not None and len(config.n_list) != 1:
        raise OutOfRange("--trajectory needs a single --n.")

    rows = []
    for n in config.n_list:
        est = simulate_speed(
            law, n, config.steps, config.seed, record_front=config.trajectory is not None
        )
        if config.trajectory is not None:
            pathlib.Path(config.trajectory).write_text(encode_trajectory(est.max_y, est.frontier))
        rows.append(est.to_report())
    return _render(config, SPEED_HEADER, rows)


def _verify_th1(config: RunConfig) -> str:
    offspring = _offspring(config)
    q = offspring.extinction_probability
    rows = []
    for n in config.n_list:
        report = chain_report(build_chain(offspring, n), q, config.tail_eps)
        rows.append(
            {
                "n": n,
                "q_pow_n": q**n,
                "ratio_mean": report.ratio_mean,
                "ratio_qn": report.ratio_qn,
                "ks_to_exp": report.ks_to_exp,
            }
        )
    return _render(config, TH1_HEADER, rows)


def _verify_th2(config: RunConfig) -> str:
    law = _pairing(config)
    q = law.marginal_x.extinction_probability
    rows = []
    for n in config.n_list:
        est = simulate_speed(law, n, config.steps, config.seed)
        one_minus_v = 1.0 - est.v_hat
        q_pow = q**n
        rows.append(
            {
                "n": n,
                "one_minus_v": one_minus_v,
                "ratio": one_minus_v / q_pow if q_pow > 0.0 else None,
                # gaps 1/E[U_N] and 1/(E[V_N]+1)
                "bracket_low": None if est.bracket_high is None else 1.0 - est.bracket_high,
                "bracket_high": None if est.bracket_low is None else 1.0 - est.bracket_low,
                "v_err": est.v_err,
            }
        )
    return _render(config, TH2_HEADER, rows)


@time_exec()
def cmd_verify(config: RunConfig) -> str:
    r"""Multi-level tables behind the two limit theorems, ready for plotting."""

    if config.which == "th1":
        return _verify_th1(config)
    return _verify_th2(config)


COMMANDS: dict[str, Callable[[RunConfig], str]] = {
    "q": cmd_q,
    "exact": cmd_exact,
    "sim-censored": cmd_sim_censored,
    "sim-selection": cmd_sim_selection,
    "verify": cmd_verify,
}


def _n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid n-list {text!r}") from e
    if not values:
        raise argparse.ArgumentTypeError("n-list must not be empty")
    return values


def _parent_parsers() -> dict[str, argparse.ArgumentParser]:
    source = argparse.ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--binomial2", type=float, metavar="ALPHA", help="Binomial(2, alpha) offspring"
    )
    group.add_argument("--pmf", metavar="PATH", help="offspring pmf file with 'k p_k' lines")
    group.add_argument("--pair-pmf", metavar="PATH", help="joint law file with 'x x_prime p' lines")
    source.add_argument("--format", choices=("csv", "json"), default="csv")
    source.add_argument("--output", metavar="PATH", help="write to PATH instead of stdout")

    levels = argparse.ArgumentParser(add_help=False)
    group = levels.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int, help="censoring level / number of particles")
    group.add_argument("--n-list", type=_n_list, help="comma-separated levels, e.g. 5,10,15")

    exact = argparse.ArgumentParser(add_help=False)
    exact.add_argument("--tail-eps", type=float, default=DEFAULT_TAIL_EPS)

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--seed", type=int, default=DEFAULT_SEED)
    mc.add_argument("--workers", type=int, default=1)

    pairing = argparse.ArgumentParser(add_help=False)
    pairing.add_argument("--pair", choices=("minimal-stay", "bernoulli"))
    pairing.add_argument("--steps", type=int, default=DEFAULT_STEPS)

    censored = argparse.ArgumentParser(add_help=False)
    censored.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    censored.add_argument("--horizon", type=int)

    return {
        "source": source,
        "levels": levels,
        "exact": exact,
        "mc": mc,
        "pairing": pairing,
        "censored": censored,
    }


def build_parser() -> argparse.ArgumentParser:
    p = _parent_parsers()
    parser = argparse.ArgumentParser(
        prog="ezbranch",
        description="Censored Galton-Watson processes and branching-selection particle systems.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
        type=str.upper,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("q", parents=[p["source"]], help="extinction probability")
    sub.add_parser(
        "exact", parents=[p["source"], p["levels"], p["exact"]], help="exact censored-chain report"
    )
    sub.add_parser(
        "sim-censored",
        parents=[p["source"], p["levels"], p["mc"], p["censored"]],
        help="Monte Carlo of the censored process",
    )
    selection = sub.add_parser(
        "sim-selection",
        parents=[p["source"], p["levels"], p["mc"], p["pairing"]],
        help="Monte Carlo of the branching-selection system",
    )
    selection.add_argument("--trajectory", metavar="PATH", help="dump k,max_y,frontier_count")

    verify = sub.add_parser(
        "verify",
        parents=[p["source"], p["levels"], p["exact"], p["mc"], p["pairing"]],
        help="multi-level tables for both limit theorems",
    )
    verify.add_argument("which", choices=("th1", "th2"))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    configure_logging(ns.log_level)
    config = RunConfig.from_namespace(ns)
    _logger.debug("run config: %s", config)

    try:
        text = COMMANDS[config.command](config)
    except (ModelAssumptionError, FileNotFoundError) as e:
        print(f"ezbranch: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:
        _logger.exception("%s failed", config.command)
        print(f"ezbranch: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL

    if config.output is None:
        sys.stdout.write(text)
    else:
        pathlib.Path(config.output).write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
