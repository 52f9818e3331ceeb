from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from context_tpp.game import I0, INEG, P
from context_tpp.saito import (
    FsParams, fs_utility, invest_neg_branch, oracle_equivalence, partworth_invest_neg,
    partworth_invest_zero, partworth_oracle, partworth_punish_derived,
    partworth_punish_printed, partworth_safe, punish_branch, punish_residual_expected,
    punish_residual_report, ranking_report, saito_value,
)

HALF = Fraction(1, 2)
PRM = FsParams(Fraction(3, 5), Fraction(1, 2), HALF)  # alpha + beta = 1.1


def test_fs_examples():
    assert fs_utility((90, 10, 50), PRM) == 50 - Fraction(3, 5) * 40 - HALF * 40
    prm = FsParams(1.0, 0.5)
    assert fs_utility((90, 10, 50), prm) == pytest.approx(50 - 40 - 20)


def test_saito_examples():
    prm = FsParams(0.8, 0.4, 0.5)
    assert fs_utility((90, 10, 50), prm) == pytest.approx(2.0)
    assert fs_utility((90, 10, 0), prm) == pytest.approx(-80.0)
    post = [(0.5, (90, 10, 100)), (0.5, (90, 10, 0))]
    assert saito_value((90, 10, 50), post, prm) == pytest.approx(-4.0)


def test_saito_mixes_ex_ante_and_ex_post():
    prm = FsParams(Fraction(2), Fraction(1, 2), Fraction(1, 4))
    ex_ante = (50, 50, 50)
    post = [(HALF, (50, 50, 100)), (HALF, (50, 50, 0))]
    ea = fs_utility(ex_ante, prm)
    ep = HALF * fs_utility(post[0][1], prm) + HALF * fs_utility(post[1][1], prm)
    assert saito_value(ex_ante, post, prm) == Fraction(1, 4) * ea + Fraction(3, 4) * ep


@pytest.mark.parametrize("dist", [[], [(HALF, (1, 1, 1))], [(0, (1, 1, 1)), (1, (1, 1, 1))]])
def test_saito_rejects_bad_distribution(dist):
    with pytest.raises(ValueError):
        saito_value((1, 1, 1), dist, PRM)


@pytest.mark.parametrize("kw", [dict(alpha=0.4, beta=0.5), dict(alpha=0.6, beta=0.3),
                                dict(alpha=0.8, beta=0.3, delta=1.5)])
def test_fs_params_validation(kw):
    with pytest.raises(ValueError):
        FsParams(**kw)


def test_printed_examples():
    prm = FsParams(1, Fraction(1, 2), HALF)
    # invest_zero(t=10, z=50): base 50 - 40*1.5 = -10, plus 1/2 * (-10) * 1.5
    assert partworth_invest_zero(10, 50, prm) == Fraction(-35, 2)
    prm2 = FsParams(Fraction(4, 5), Fraction(2, 5), HALF)
    assert partworth_invest_zero(10, 50, prm2) == -4
    assert partworth_invest_neg(40, 48, prm2) == Fraction(22, 5)


def test_printed_punishment_disagrees_off_branch1():
    prm = FsParams(Fraction(4, 5), Fraction(2, 5), HALF)
    assert punish_branch(10, 25) == 2
    assert partworth_punish_printed(10, 25, prm) == 40
    assert partworth_oracle("TP", P, 10, 25, 0, prm) == 15
    assert punish_branch(10, 40) == 3
    assert partworth_punish_printed(10, 40, prm) - partworth_oracle("TP", P, 10, 40, 0, prm) == \
        2 * 40 * (Fraction(4, 5) + Fraction(4, 5))


def test_branch_edges():
    assert [invest_neg_branch(40, z) for z in (9, 10, 19, 20, 39, 40)] == [1, 2, 2, 3, 3, 4]
    assert [punish_branch(10, p) for p in (19, 20, 39, 40)] == [1, 2, 2, 3]


def test_zero_arguments_rejected():
    with pytest.raises(ValueError):
        partworth_invest_zero(10, 0, PRM)
    with pytest.raises(ValueError):
        partworth_punish_printed(10, 0, PRM)
    with pytest.raises(ValueError):
        partworth_oracle("I", P, 10, 0, 5, PRM)
    with pytest.raises(ValueError):
        partworth_oracle("TP", I0, 10, 5, 0, PRM)


fs_params = st.builds(
    FsParams,
    alpha=st.fractions(Fraction(11, 20), 5, max_denominator=20),
    beta=st.fractions(Fraction(1, 2), Fraction(1, 2), max_denominator=2),
    delta=st.fractions(0, 1, max_denominator=8),
)
t_st = st.sampled_from([0, 10, 20, 30, 40, 50])
x_st = st.fractions(Fraction(1, 4), 50, max_denominator=4)


@given(t_st, x_st, fs_params)
def test_closed_forms_equal_oracle_exactly(t, x, prm):
    assert partworth_safe(t, prm) == partworth_oracle("S", P, t, 0, 0, prm)
    assert partworth_invest_zero(t, x, prm) == partworth_oracle("I", I0, t, 0, x, prm)
    assert partworth_invest_neg(t, x, prm) == partworth_oracle("I", INEG, t, 0, x, prm)
    assert partworth_punish_derived(t, x, prm) == partworth_oracle("TP", P, t, x, 0, prm)


@given(t_st, x_st, fs_params)
def test_residual_matches_analytic_form(t, x, prm):
    res = partworth_punish_printed(t, x, prm) - partworth_oracle("TP", P, t, x, 0, prm)
    assert res == punish_residual_expected(t, x, prm)


EPS = Fraction(1, 10**9)


@given(st.sampled_from([0, 10, 20, 30, 40]), fs_params)
def test_continuity_at_edges(t, prm):
    g = 50 - t
    for edge in (g, 2 * g, 4 * g):
        if edge > 50:
            continue
        assert abs(partworth_invest_neg(t, edge - EPS, prm) - partworth_invest_neg(t, edge, prm)) < 1e-6
    if g < 50:
        assert abs(partworth_invest_zero(t, g, prm) - partworth_invest_zero(t, g + EPS, prm)) < 1e-6
    for edge in (Fraction(g, 2), g):
        assert abs(partworth_punish_derived(t, edge - EPS, prm)
                   - partworth_punish_derived(t, edge, prm)) < 1e-6


def test_oracle_equivalence_float_grid():
    pts = [(t, x, a, 0.5, d) for t in (0, 20, 50) for x in (1, 17.5, 50)
           for a in (0.6, 2.0) for d in (0.0, 0.5, 1.0)]
    rep = oracle_equivalence(pts)
    assert rep["points"] == len(pts)
    assert max(rep["max_abs_error"].values()) < 1e-9


@pytest.mark.parametrize("delta", [0, 0.3, 1])
def test_ranking_reports_pass(delta):
    prm = FsParams(0.8, 0.4, delta)
    assert ranking_report(prm, lottery="zero").passed
    assert ranking_report(prm, lottery="negative").passed


def test_ranking_report_csv_header():
    rep = ranking_report(FsParams(0.8, 0.4, 0.5), t_grid=(10,), p_grid=(5,), z_grid=(5,))
    header = rep.to_csv().splitlines()[0]
    assert header == "t,p,z,alpha,beta,delta,w_tp_printed,w_tp_oracle,w_s,w_i,branch"
    assert '"lottery": "zero"' in rep.to_json()


def test_residual_report_nonempty():
    rows = punish_residual_report(FsParams(0.8, 0.4, 0.5))
    assert rows
    assert all(abs(r["residual"] - r["expected_residual"]) < 1e-9 for r in rows)
    assert {r["branch"] for r in rows} == {2, 3}


S84 = FsParams(Fraction(4, 5), Fraction(2, 5), HALF)


@given(fs_params, st.integers(0, 100))
def test_equal_split_is_worth_its_share(prm, x):
    assert fs_utility((x, x, x), prm) == x


@given(fs_params, st.tuples(*[st.integers(0, 150)] * 3), st.tuples(*[st.integers(0, 150)] * 3))
def test_delta_extremes(prm, a, b):
    post = [(HALF, a), (HALF, b)]
    ea = tuple(HALF * (u + v) for u, v in zip(a, b))
    one = FsParams(prm.alpha, prm.beta, 1)
    assert saito_value(ea, post, one) == fs_utility(ea, one)
    assert saito_value(a, [(1, a)], prm) == fs_utility(a, prm)


def test_safe_fixtures():
    assert partworth_safe(50, S84) == 50
    assert partworth_safe(10, S84) == 2
    assert partworth_safe(0, S84) == -10


@pytest.mark.parametrize("delta", [0, Fraction(1, 3), 1])
def test_invest_fixtures_any_delta(delta):
    prm = FsParams(S84.alpha, S84.beta, delta)
    assert partworth_invest_zero(10, 20, prm) == 2
    assert partworth_invest_neg(10, 20, prm) == -5
    assert partworth_safe(10, prm) - partworth_invest_neg(10, 20, prm) == Fraction(20, 4) * (1 + prm.alpha - prm.beta)


def test_punish_fixtures():
    assert partworth_punish_printed(10, 10, S84) == 12
    assert partworth_oracle("TP", P, 10, 10, 0, S84) == 12
    assert partworth_punish_printed(50, Fraction(1, 10**6), S84) == pytest.approx(50, abs=1e-5)


def test_oracle_fixtures():
    from context_tpp.game import PI0
    assert partworth_oracle("I", PI0, 10, 0, 50, S84) == -4
    assert partworth_oracle("S", INEG, 30, 0, 0, S84) == partworth_safe(30, S84)


def test_ordering_example():
    w_tp = partworth_oracle("TP", P, 10, 10, 0, S84)
    w_s = partworth_safe(10, S84)
    w_i = partworth_oracle("I", I0, 10, 0, 50, S84)
    assert w_tp > w_s > w_i


@given(st.sampled_from([0, 10, 20, 30, 40]), fs_params)
def test_punishment_term_positive_on_first_branch(t, prm):
    # -p(1 - 2 alpha - beta) > 0 whenever 2 alpha + beta > 1
    for p in (Fraction(1, 4), Fraction(50 - t, 2) - Fraction(1, 4)):
        if 0 < p < Fraction(50 - t, 2):
            assert partworth_punish_printed(t, p, prm) > partworth_safe(t, prm)


@given(st.sampled_from([0, 10, 20, 30, 40]), fs_params, st.fractions(0, 1))
def test_first_branches_ignore_delta(t, prm, frac):
    z = Fraction(50 - t) * frac * Fraction(99, 100) + Fraction(1, 100)
    vals_zero, vals_neg = set(), set()
    for d in (0, Fraction(1, 4), HALF, Fraction(3, 4), 1):
        p = FsParams(prm.alpha, prm.beta, d)
        vals_zero.add(partworth_invest_zero(t, z, p))
        if invest_neg_branch(t, z) == 1:
            vals_neg.add(partworth_invest_neg(t, z, p))
    assert len(vals_zero) == 1 and len(vals_neg) <= 1
