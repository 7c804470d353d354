import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ezbranch.distributions import (
    AliasTable,
    DrawBuffer,
    bernoulli_pairing,
    binomial2,
    binomial_marginal,
    from_pmf,
    minimal_stay,
    paired_from_pmf,
)
from ezbranch.errors import (
    NegativeMass,
    NotNormalized,
    NotSupercritical,
    OutOfRange,
    PmfFormatError,
    ZeroAtOrigin,
)
from ezbranch.functional import capped_sum_distribution, chi_square_gof, extinction_gap, q_alpha_closed_form
from ezbranch.sims import estimate_extinction, simulate_galton_watson
from ezbranch.utils.streams import root_generator


def test_two_point_moments_and_extinction(two_point):
    assert two_point.mean == pytest.approx(1.2)
    assert two_point.variance == pytest.approx(0.96)
    assert two_point.is_supercritical
    assert abs(two_point.extinction_probability - 2.0 / 3.0) < 1e-10


@pytest.mark.parametrize("alpha", [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95])
def test_closed_form_matches_solver(alpha):
    q = binomial_marginal(alpha).extinction_probability
    assert abs(q - q_alpha_closed_form(alpha)) < 1e-10


def test_binomial_075_is_one_ninth(binomial_075):
    assert abs(binomial_075.extinction_probability - 1.0 / 9.0) < 1e-10
    assert abs(q_alpha_closed_form(0.75) - 1.0 / 9.0) < 1e-10


def test_extinction_fixed_point_residual(binomial_075, two_point):
    for d in (binomial_075, two_point):
        q = d.extinction_probability
        assert abs(d.pgf(q) - q) < 1e-12


def test_critical_law_is_rejected(critical):
    assert not critical.is_supercritical
    with pytest.raises(NotSupercritical):
        _ = critical.extinction_probability


def test_closed_form_domain():
    with pytest.raises(OutOfRange):
        q_alpha_closed_form(0.5)
    with pytest.raises(OutOfRange):
        q_alpha_closed_form(1.0)


def test_pgf_endpoints(two_point):
    assert two_point.pgf(0.0) == pytest.approx(0.4)
    assert two_point.pgf(1.0) == 1.0
    with pytest.raises(OutOfRange):
        two_point.pgf(1.5)


def test_pgf_iterate_increases_to_q(two_point):
    values = [two_point.pgf_iterate(k) for k in range(0, 150)]
    assert values[0] == 0.0
    assert values[1] == pytest.approx(0.4)
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_extinction_gap_decays(two_point):
    gaps = [extinction_gap(two_point.pmf, k) for k in range(1, 80)]
    assert all(g >= 0.0 for g in gaps)
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


@pytest.mark.parametrize(
    "table, error",
    [
        ({0: 0.5, 1: 0.4}, NotNormalized),
        ({0: 1.2, 1: -0.2}, NegativeMass),
        ({1: 0.5, 2: 0.5}, ZeroAtOrigin),
        ([(0, 0.5), (0, 0.5)], PmfFormatError),
        ([(-1, 0.5), (0, 0.5)], OutOfRange),
        ({}, NotNormalized),
    ],
)
def test_from_pmf_rejects(table, error):
    with pytest.raises(error):
        from_pmf(table)


def test_from_pmf_renormalizes_within_tolerance():
    d = from_pmf({2: 0.6 + 5e-10, 0: 0.4})
    assert d.pmf.sum() == pytest.approx(1.0, abs=1e-15)
    assert d.table() == pytest.approx({0: 0.4, 2: 0.6})
    assert not d.pmf.flags.writeable


@given(st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=2, max_size=8))
def test_from_pmf_normalized(weights):
    w = np.asarray(weights)
    d = from_pmf({k: p for k, p in enumerate(w / w.sum())})
    assert d.pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert d.pmf[-1] > 0.0


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=4).filter(
        lambda w: w[0] > 0.0
    ),
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=1, max_value=6),
)
def test_capped_sum_matches_enumeration(weights, m, cap):
    pmf = np.asarray(weights) / sum(weights)
    expected = np.zeros(cap + 1)
    for xs in itertools.product(range(pmf.size), repeat=m):
        expected[min(cap, sum(xs))] += math.prod(pmf[x] for x in xs)
    np.testing.assert_allclose(capped_sum_distribution(pmf, m, cap), expected, atol=1e-12)


def test_binomial2_law():
    law = binomial2(0.75)
    assert law.alpha == 0.75
    assert law.table() == pytest.approx({(0, 2): 0.0625, (1, 1): 0.375, (2, 0): 0.5625})
    assert law.marginal_x.table() == pytest.approx({0: 0.0625, 1: 0.375, 2: 0.5625})
    assert law.marginal_x.binomial_alpha == 0.75
    assert bernoulli_pairing is binomial2
    with pytest.raises(OutOfRange):
        binomial2(1.0)


def test_minimal_stay(two_point, binomial_075):
    law = minimal_stay(two_point)
    assert law.table() == pytest.approx({(0, 1): 0.4, (2, 0): 0.6})
    assert law.alpha is None
    assert minimal_stay(binomial_075).marginal_x.binomial_alpha == 0.75


def test_paired_from_pmf():
    shift = paired_from_pmf({(1, 0): 1.0})
    assert shift.marginal_x.pmf.tolist() == [0.0, 1.0]
    assert not shift.marginal_x.is_supercritical
    with pytest.raises(OutOfRange):
        paired_from_pmf({(0, 0): 0.1, (1, 1): 0.9})
    with pytest.raises(NotNormalized):
        paired_from_pmf({(1, 0): 0.5})


def test_alias_sampling_matches_pmf():
    probs = np.asarray([0.1, 0.05, 0.5, 0.35])
    table = AliasTable.build(probs)
    draws = table.sample(root_generator(0), 20_000)
    counts = np.bincount(draws, minlength=probs.size)
    assert chi_square_gof(counts, probs).p_value > 1e-3


def test_draw_buffer_follows_the_stream(two_point):
    buf = DrawBuffer(two_point.alias, root_generator(3), values=two_point.support)
    first = [buf.next() for _ in range(64)]
    direct = two_point.support[two_point.alias.sample(root_generator(3), 64)]
    assert first == direct.tolist()
    assert set(first) <= {0, 2}


def test_sample_shapes(two_point):
    rng = root_generator(0)
    assert two_point.sample(rng) in (0, 2)
    assert two_point.sample(rng, 10).shape == (10,)
    x, y = minimal_stay(two_point).sample(rng)
    assert x + y >= 1


def test_galton_watson_stops_at_extinction(two_point):
    sizes = simulate_galton_watson(two_point, 1, 500, root_generator(1))
    assert sizes[0] == 1
    assert sizes[-1] == 0 or sizes[-1] >= 10_000 or len(sizes) == 501
    assert all(z > 0 for z in sizes[:-1])


def test_extinction_from_a_ancestors_is_q_power(two_point):
    p, se = estimate_extinction(two_point, 2, runs=4000, seed=0)
    assert abs(p - (2.0 / 3.0) ** 2) < 4 * se
