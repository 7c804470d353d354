import numpy as np
import pytest

from ezbranch.chains import build_chain, chain_report
from ezbranch.distributions import from_pmf, paired_from_pmf
from ezbranch.errors import HardCap, LevelTooSmall, NotSupercritical, ZeroAtOrigin
from ezbranch.sims import speed_bracket


def test_two_point_transition_matrix(two_point):
    P = build_chain(two_point, 2).P.numpy()
    np.testing.assert_allclose(P[0], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(P[1], [0.4, 0.0, 0.6])
    np.testing.assert_allclose(P[2], [0.16, 0.0, 0.84])


def test_two_point_hand_solved(two_point):
    chain = build_chain(two_point, 2)
    np.testing.assert_allclose(chain.expected_absorption, [4.75, 6.25], atol=1e-9)
    assert abs(chain.never_return_probability - 0.16) < 1e-9
    assert abs(chain.expected_last_visit - 5.25) < 1e-9
    assert chain.expected_conditioned_gap == pytest.approx(0.0, abs=1e-12)


def test_binomial_hand_solved(binomial_075):
    chain = build_chain(binomial_075, 2)
    assert abs(chain.expected_absorption[-1] - 1376.0 / 11.0) < 1e-9
    assert abs(chain.never_return_probability - 11.0 / 1280.0) < 1e-9


@pytest.mark.parametrize("law", ["two_point", "binomial_075"])
def test_visits_to_top_identity(law, request):
    d = request.getfixturevalue(law)
    for n in range(2, 51):
        chain = build_chain(d, n)
        assert abs(chain.never_return_probability * chain.expected_visits_to_top - 1.0) < 1e-8


@pytest.mark.parametrize("law, n", [("two_point", 5), ("two_point", 8), ("binomial_075", 4)])
def test_last_visit_renewal_identity(law, n, request):
    chain = build_chain(request.getfixturevalue(law), n)
    q_n = chain.never_return_probability
    expected_t = (1.0 - q_n) / q_n
    assert chain.expected_last_visit == pytest.approx(
        expected_t * (1.0 + chain.expected_conditioned_gap), rel=1e-8
    )


def test_step_down_bounds_never_return(two_point, binomial_075):
    for d in (two_point, binomial_075):
        for n in (2, 5, 9):
            chain = build_chain(d, n)
            assert chain.never_return_probability <= chain.step_down_probability + 1e-15


def test_state_distribution(two_point):
    chain = build_chain(two_point, 4)
    np.testing.assert_allclose(chain.state_distribution(0), [0, 0, 0, 0, 1.0])
    for k in (1, 5, 20):
        law = chain.state_distribution(k)
        assert law.sum() == pytest.approx(1.0, abs=1e-12)
        assert (law >= -1e-15).all()


def test_distribution_of_u(two_point):
    chain = build_chain(two_point, 2)
    pu = chain.distribution_of_U(1e-10)
    assert pu[0] == 0.0
    assert pu[1] == pytest.approx(0.16)
    assert pu[2] == pytest.approx(0.84 * 0.16)
    assert pu.sum() >= 1.0 - 1e-10
    mean = float((np.arange(pu.size) * pu).sum())
    assert mean == pytest.approx(6.25, rel=1e-7)


def test_distribution_of_u_mean_matches_solve(binomial_075):
    chain = build_chain(binomial_075, 3)
    pu = chain.distribution_of_U(1e-12)
    mean = float((np.arange(pu.size) * pu).sum())
    assert mean == pytest.approx(chain.expected_absorption[-1], rel=1e-6)


def test_return_time_law(two_point, binomial_075):
    for d, n in ((two_point, 2), (two_point, 6), (binomial_075, 3)):
        chain = build_chain(d, n)
        law = chain.return_time_law(1e-12)
        assert law[0] == 0.0
        assert law.sum() == pytest.approx(1.0 - chain.never_return_probability, abs=1e-9)


def test_exact_ks_decreases(two_point):
    d = [build_chain(two_point, n).ks_to_exponential().statistic for n in (5, 10, 15)]
    assert d[0] > d[1] > d[2]
    assert d[2] < 0.15


def test_ratios_approach_one(two_point):
    reports = [chain_report(build_chain(two_point, n), with_ks=False) for n in (10, 20, 30, 40)]
    mean_gap = [abs(r.ratio_mean - 1.0) for r in reports]
    qn_gap = [abs(r.ratio_qn - 1.0) for r in reports]
    assert all(b < a for a, b in zip(mean_gap, mean_gap[1:]))
    assert all(b < a for a, b in zip(qn_gap, qn_gap[1:]))
    assert mean_gap[-1] * 2 < mean_gap[0]
    assert qn_gap[-1] * 2 < qn_gap[0]


def test_report_skips_ks_beyond_cap(two_point):
    chain = build_chain(two_point, 40)
    with pytest.raises(HardCap):
        chain.ks_to_exponential()
    report = chain_report(chain)
    assert report.ks_to_exp is None
    assert report.ks_uncertainty is None
    assert report.expected_u[-1] == pytest.approx(float(chain.expected_absorption[-1]))


def test_report_fields(two_point):
    report = chain_report(build_chain(two_point, 2)).to_dict()
    assert list(report) == [
        "n",
        "q",
        "q_n",
        "expected_u",
        "expected_v",
        "ratio_mean",
        "ratio_qn",
        "ks_to_exp",
        "ks_uncertainty",
    ]
    assert report["expected_u"][-1] == pytest.approx(6.25)
    assert report["ratio_mean"] == pytest.approx(6.25 * 4.0 / 9.0)
    assert report["ks_to_exp"] is not None


def test_chain_rejects_bad_inputs(two_point, critical):
    with pytest.raises(LevelTooSmall):
        build_chain(two_point, 1)
    with pytest.raises(ZeroAtOrigin):
        build_chain(paired_from_pmf({(1, 0): 0.5, (2, 0): 0.5}).marginal_x, 3)
    with pytest.raises(NotSupercritical):
        build_chain(critical, 3).ks_to_exponential()


@pytest.mark.parametrize("n", [2, 17, 64, 200])
def test_rows_are_stochastic_up_to_200(two_point, binomial_075, n):
    for d in (two_point, binomial_075):
        P = build_chain(d, n).P.numpy()
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-12)
        assert (P >= 0.0).all()


def test_point_mass_at_zero():
    chain = build_chain(from_pmf({0: 1.0}), 2)
    np.testing.assert_allclose(chain.expected_absorption, [1.0, 1.0])
    assert chain.never_return_probability == 1.0
    assert chain.expected_last_visit == 0.0
    assert chain.expected_final_excursion == 1.0


@pytest.mark.parametrize("law", ["two_point", "binomial_075"])
def test_absorption_increases_with_start(law, request):
    d = request.getfixturevalue(law)
    for n in range(2, 41):
        u = build_chain(d, n).expected_absorption
        assert (np.diff(u) >= -1e-9 * u[-1]).all()


@pytest.mark.parametrize("law", ["two_point", "binomial_075"])
def test_last_visit_precedes_absorption(law, request):
    d = request.getfixturevalue(law)
    for n in range(2, 61):
        chain = build_chain(d, n)
        u_n = float(chain.expected_absorption[-1])
        assert np.isfinite(u_n) and u_n > 0.0
        assert u_n >= chain.expected_last_visit + 1.0
        assert chain.expected_last_visit >= 0.0
        if law == "two_point" and n == 2:
            assert chain.expected_final_excursion == pytest.approx(1.0, abs=1e-12)
        else:
            assert chain.expected_final_excursion > 1.0 + 1e-9

        low, high = speed_bracket(d, n)
        assert low <= high


def test_absorption_matches_fundamental_solve(two_point, binomial_075):
    for d, n in ((two_point, 12), (binomial_075, 6)):
        P = build_chain(d, n).P
        M = P[1:, 1:].numpy()
        direct = np.linalg.solve(np.eye(n) - M, np.ones(n))
        np.testing.assert_allclose(build_chain(d, n).expected_absorption, direct, rtol=1e-9)


def test_final_excursion_by_hand(two_point):
    # Conditioned not to climb back, the chain drops from 3 to 0 or to 2, and
    # leaves 2 for 0 with probability 0.52 per step.
    chain = build_chain(two_point, 3)
    via_two = 0.288 * 0.16 / 0.52
    q_n = 0.064 + via_two
    assert chain.never_return_probability == pytest.approx(q_n, rel=1e-12)
    expected = 1.0 + via_two / (0.52 * q_n)
    assert chain.expected_final_excursion == pytest.approx(expected, rel=1e-12)
