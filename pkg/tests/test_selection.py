import numpy as np
import pytest

from ezbranch.chains import build_chain
from ezbranch.distributions import binomial2, minimal_stay, paired_from_pmf
from ezbranch.errors import NotSupercritical, OutOfRange, TooFewChildren
from ezbranch.functional import chi_square_gof
from ezbranch.sims import (
    ParticleConfiguration,
    SelectionSimConfig,
    SelectionSimulator,
    bernoulli_speed_asymptote,
    branch,
    first_frontier_extinction,
    frontier_counts,
    frontier_series,
    renewal_speed,
    select,
    simulate_renewal_front,
    simulate_speed,
    speed_bracket,
)
from ezbranch.utils.streams import root_generator

SHIFT = paired_from_pmf({(1, 0): 1.0})


def test_select_keeps_rightmost():
    kept = select(ParticleConfiguration({3: 2, 2: 5, 1: 4}), 4)
    assert kept.counts == {3: 2, 2: 2}
    assert kept.total == 4
    with pytest.raises(TooFewChildren):
        select(ParticleConfiguration({0: 3}), 4)


def test_branch_deterministic_shift():
    children = branch(ParticleConfiguration.delta(3), SHIFT, root_generator(0))
    assert children.counts == {1: 3}
    with pytest.raises(TooFewChildren):
        branch(ParticleConfiguration(), SHIFT, root_generator(0))


def test_branch_never_loses_particles(two_point):
    law = minimal_stay(two_point)
    config = ParticleConfiguration({0: 3, 1: 2})
    rng = root_generator(4)
    for _ in range(20):
        children = branch(config, law, rng)
        assert children.total >= config.total
        assert children.max_position <= config.max_position + 1
        assert children.min_position >= config.min_position


def test_shift_moves_at_unit_speed():
    est = simulate_speed(SHIFT, 4, 100)
    assert est.v_hat == 1.0
    assert est.bracket_low is None
    assert est.bracket_high is None


def test_degenerate_bracket_at_two(two_point):
    low, high = speed_bracket(two_point, 2)
    assert low == pytest.approx(0.84)
    assert high == pytest.approx(0.84)


def test_speed_at_two_particles(two_point):
    est = simulate_speed(minimal_stay(two_point), 2, 200_000, seed=0)
    assert abs(est.v_hat - 0.84) < 0.01
    assert est.v_err > 0.0


def test_speed_inside_bracket(two_point):
    est = simulate_speed(minimal_stay(two_point), 3, 100_000, seed=1)
    slack = 4 * est.v_err + 0.003
    assert est.bracket_low - slack <= est.v_hat <= est.bracket_high + slack


@pytest.mark.slow
@pytest.mark.parametrize("n", [2, 5, 10])
def test_speed_bracket_long_run(two_point, n):
    est = simulate_speed(minimal_stay(two_point), n, 1_000_000, seed=0)
    gap = 1.0 - est.v_hat
    low_gap, high_gap = 1.0 - est.bracket_high, 1.0 - est.bracket_low
    assert low_gap - 3 * est.v_err <= gap <= high_gap + 3 * est.v_err


def test_speed_is_reproducible(two_point):
    law = minimal_stay(two_point)
    a = simulate_speed(law, 3, 2_000, seed=5)
    b = SelectionSimulator(law, SelectionSimConfig(n=3, steps=2_000, seed=5)).run()
    assert a.v_hat == b.v_hat
    assert a.v_err == b.v_err


def test_bernoulli_model_runs():
    est = simulate_speed(binomial2(0.75), 3, 5_000, seed=0, record_front=True)
    assert 0.0 < est.v_hat <= 1.0
    assert est.max_y.size == 5_001
    assert est.frontier[0] == 3
    assert (est.front_gap >= 0).all()
    assert est.to_report()["k"] == 5_000


def test_bernoulli_speed_asymptote():
    assert bernoulli_speed_asymptote(0.75, 2) == pytest.approx(1.0 - 1.0 / 81.0)


def test_speed_bracket_needs_supercritical(critical):
    with pytest.raises(NotSupercritical):
        speed_bracket(critical, 3)


def test_simulate_speed_needs_steps(two_point):
    with pytest.raises(OutOfRange):
        simulate_speed(minimal_stay(two_point), 3, 5)


def test_frontier_law_matches_chain(two_point):
    n, k = 3, 4
    hist = frontier_counts(minimal_stay(two_point), n, k, runs=3000, seed=0)
    assert hist.shape == (k + 1, n + 1)
    assert (hist.sum(axis=1) == 3000).all()
    assert hist[0, n] == 3000
    expected = build_chain(two_point, n).state_distribution(k)
    assert chi_square_gof(hist[k], expected).p_value > 1e-3


@pytest.mark.parametrize("n", [2, 3, 4])
def test_frontier_law_grid(two_point, n):
    k_max, runs = 6, 2_000
    hist = frontier_counts(minimal_stay(two_point), n, k_max, runs=runs, seed=n)
    chain = build_chain(two_point, n)
    for k in range(1, k_max + 1):
        assert chi_square_gof(hist[k], chain.state_distribution(k)).p_value > 1e-4


@pytest.mark.slow
def test_frontier_law_at_scale(two_point):
    n, k, runs = 3, 5, 100_000
    hist = frontier_counts(minimal_stay(two_point), n, k, runs=runs, seed=0)
    expected = build_chain(two_point, n).state_distribution(k)
    assert chi_square_gof(hist[k], expected).p_value > 1e-3


def test_frontier_counts_needs_runs(two_point):
    with pytest.raises(OutOfRange):
        frontier_counts(minimal_stay(two_point), 3, 4, runs=0)


def test_frontier_counts_independent_of_workers(two_point):
    law = minimal_stay(two_point)
    one = frontier_counts(law, 3, 4, runs=1100, seed=2, workers=1)
    many = frontier_counts(law, 3, 4, runs=1100, seed=2, workers=2)
    np.testing.assert_array_equal(one, many)


def test_first_frontier_extinction(two_point):
    k = first_frontier_extinction(minimal_stay(two_point), 2, 10_000, seed=0)
    assert k is not None and k >= 1
    assert first_frontier_extinction(SHIFT, 2, 50) is None


def test_renewal_speed_constant_intervals():
    v_hat, _ = renewal_speed(np.full(251, 4), 1000)
    assert v_hat == pytest.approx(0.75)
    with pytest.raises(OutOfRange):
        renewal_speed(np.full(10, 4), 1000)


@pytest.mark.parametrize("kind", ["V_plus_1", "U"])
def test_renewal_front_speed(two_point, kind):
    est = simulate_renewal_front(kind, two_point, 2, 100_000, seed=0)
    assert est.v_hat == pytest.approx(0.84, rel=0.02)
    assert est.bracket_low == pytest.approx(0.84)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["V_plus_1", "U"])
def test_renewal_front_speed_long_run(two_point, kind):
    est = simulate_renewal_front(kind, two_point, 2, 1_000_000, seed=0)
    assert est.v_hat == pytest.approx(0.84, rel=0.01)


def test_renewal_front_rejects_unknown_kind(two_point):
    with pytest.raises(OutOfRange):
        simulate_renewal_front("W", two_point, 2, 1000)


def test_front_moves_by_zero_or_one(two_point):
    est = simulate_speed(minimal_stay(two_point), 4, 3_000, seed=2, record_front=True)
    moves = np.diff(est.max_y)
    assert ((moves == 0) | (moves == 1)).all()


def test_frontier_stays_empty_once_extinct(two_point):
    law = minimal_stay(two_point)
    extinct = 0
    for seed in range(20):
        series = frontier_series(law, 3, 200, root_generator(seed))
        zeros = np.flatnonzero(series == 0)
        if zeros.size:
            extinct += 1
            assert (series[zeros[0] :] == 0).all()
    assert extinct > 0


@pytest.mark.slow
@pytest.mark.parametrize("n", [2, 5, 10])
def test_particle_speed_between_renewal_fronts(two_point, n):
    steps = 300_000
    lower = simulate_renewal_front("V_plus_1", two_point, n, steps, seed=0)
    upper = simulate_renewal_front("U", two_point, n, steps, seed=0)
    est = simulate_speed(minimal_stay(two_point), n, steps, seed=0)
    slack = 4 * (lower.v_err + upper.v_err + est.v_err) + 0.002
    assert lower.v_hat <= upper.v_hat + slack
    assert lower.v_hat - slack <= est.v_hat <= upper.v_hat + slack
