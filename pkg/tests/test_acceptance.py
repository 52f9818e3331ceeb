"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line (also repeated in
the terminal summary). Run just these with ``pytest tests/test_acceptance.py``.
"""
import itertools
import time
from fractions import Fraction

import numpy as np

from context_tpp.game import PI0, ThirdPartyAction, Outcome, realized_payoffs
from context_tpp.nccm import (
    CANONICAL, MODEL_TRANSFERS, NccmParams, assumption3_check, assumption3_crossing,
    random_assumption_draw, verify_proposition1, verify_proposition2,
)
from context_tpp.risk import classify_risk, crra_interval, ev_choices, lottery_ev_gap
from context_tpp.saito import (
    FsParams, oracle_equivalence, partworth_invest_neg, partworth_invest_zero,
    partworth_punish_derived, punish_residual_report, ranking_report,
)
from context_tpp.simulate import (
    AllocationRule, PopulationSpec, sample_population, simulate_dataset,
)
from context_tpp.stats import fisher_exact_2x2, summarize, wilcoxon_rank_sum


def test_criterion_01_assumption3_table(verdict):
    expected = {0.5: (119.77, 85.04), 0.4: (154.36, 85.04), 0.3: (202.61, 85.04),
                0.2: (271.17, 85.04), 0.1: (370.62, 85.04)}
    worst = 0.0
    for c, (lhs, rhs) in expected.items():
        r = assumption3_check(CANONICAL, NccmParams(c, c, 0.05))
        worst = max(worst, abs(r.lhs - lhs), abs(r.rhs - rhs))
    verdict(1, worst <= 0.02, f"max |error| {worst:.4f} (tol 0.02)")


def test_criterion_02_crossing(verdict):
    c = assumption3_crossing(CANONICAL, b=0.05)
    verdict(2, c is not None and abs(c - 0.6469) <= 5e-4, f"c* = {c:.5f} (target 0.6469 +- 0.0005)")


def test_criterion_03_proposition1_sweep(verdict):
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    cases = failures = 0
    for _ in range(1000):
        W, params = random_assumption_draw(rng)
        rep = verify_proposition1(W, params, MODEL_TRANSFERS)
        cases += len(rep.rows)
        failures += sum(not r.holds for r in rep.rows)
    elapsed = time.perf_counter() - start
    verdict(3, failures == 0 and elapsed < 10,
            f"{cases - failures}/{cases} cases hold, {elapsed:.2f} s (limit 10 s)")


def test_criterion_04_proposition2_sweep(verdict):
    rng = np.random.default_rng(7)
    asserted = failures = 0
    for _ in range(1000):
        W, params = random_assumption_draw(rng)
        for row in verify_proposition2(W, params).rows:
            if row.asserted:
                asserted += 1
                failures += not row.holds
    for c in np.linspace(0.05, 0.95, 19):
        for row in verify_proposition2(CANONICAL, NccmParams(c, c, 0.05)).rows:
            if row.asserted:
                asserted += 1
                failures += not row.holds
    row07, = verify_proposition2(CANONICAL, NccmParams(0.7, 0.7, 0.05), t_set=(0,)).rows
    reversed_07 = (not row07.asserted) and row07.lhs_prob < row07.rhs_prob
    verdict(4, failures == 0 and asserted > 0 and reversed_07,
            f"{asserted - failures}/{asserted} hold where the condition holds; c=0.7: "
            f"{row07.lhs_prob:.4f} vs {row07.rhs_prob:.4f} (reversed={reversed_07})")


def test_criterion_05_lottery_table(verdict):
    printed = [2680, 1910, 1140, 370, -400, -1170, -1940, -2710, -3480, -4250]
    gaps = [lottery_ev_gap(q) for q in range(1, 11)]
    k = classify_risk(ev_choices()).switch_point
    verdict(5, gaps == printed and k == 5, f"gaps match={gaps == printed}, EV switch point {k}")


def test_criterion_06_crra_interval(verdict):
    iv = crra_interval(5)
    shared = all(crra_interval(k).lo == crra_interval(k - 1).hi for k in range(2, 11))
    ok = abs(iv.lo + 0.15) <= 0.01 and abs(iv.hi - 0.15) <= 0.01 and shared
    verdict(6, ok, f"q5 interval ({iv.lo:.4f}, {iv.hi:.4f}), shared bounds={shared}")


def test_criterion_07_payoff_fixtures(verdict):
    cases = [
        ((0, 0), Outcome.NOT_APPLICABLE, (90, 10, 50)),
        ((0, 14), Outcome.WIN, (90, 10, 64)), ((0, 14), Outcome.LOSE, (90, 10, 36)),
        ((18, 0), Outcome.NOT_APPLICABLE, (36, 10, 32)),
        ((18, 14), Outcome.WIN, (36, 10, 46)), ((18, 14), Outcome.LOSE, (36, 10, 18)),
    ]
    bad = [(pz, o.value) for pz, o, want in cases
           if tuple(realized_payoffs(PI0, 10, ThirdPartyAction(*pz), o)) != want]
    verdict(7, not bad, f"{len(cases) - len(bad)}/{len(cases)} fixtures exact")


def _equivalence_grid():
    ts = (0, 10, 20, 30, 40, 50)
    xs = (1, 2.5, 5, 7.5, 10, 12.5, 15, 17.5, 20, 22.5, 25, 27.5, 30, 32.5, 35, 37.5, 40,
          42.5, 45, 47.5, 50)
    alphas = (0.8, 1.0, 1.5, 2.0, 3.0)
    betas = (0.3, 0.4, 0.5, 0.7)
    deltas = (0.0, 0.25, 0.5, 1.0)
    return list(itertools.product(ts, xs, alphas, betas, deltas))


def _continuous(prm):
    eps = Fraction(1, 10**9)
    fr = FsParams(Fraction(prm.alpha).limit_denominator(100),
                  Fraction(prm.beta).limit_denominator(100),
                  Fraction(prm.delta).limit_denominator(100))
    worst = 0
    for t in (0, 10, 20, 30, 40):
        g = 50 - t
        for e in (g, 2 * g, 4 * g):
            if e <= 50:
                worst = max(worst, abs(partworth_invest_neg(t, e - eps, fr) - partworth_invest_neg(t, e, fr)))
        if g < 50:
            worst = max(worst, abs(partworth_invest_zero(t, g, fr) - partworth_invest_zero(t, g + eps, fr)))
        for e in (Fraction(g, 2), g):
            worst = max(worst, abs(partworth_punish_derived(t, e - eps, fr)
                                   - partworth_punish_derived(t, e, fr)))
    return float(worst)


def test_criterion_08_saito_closed_forms(verdict):
    grid = _equivalence_grid()
    eq = oracle_equivalence(grid)
    err = max(eq["max_abs_error"].values())
    jump = max(_continuous(FsParams(a, b, d)) for _, _, a, b, d in grid[:: len(grid) // 40])
    residuals = punish_residual_report(FsParams(0.8, 0.4, 0.5))
    res_err = max(abs(r["residual"] - r["expected_residual"]) for r in residuals) if residuals else 1
    ok = eq["points"] >= 10_000 and err <= 1e-9 and jump < 1e-6 and residuals and res_err <= 1e-9
    verdict(8, bool(ok), f"{eq['points']} points, max err {err:.2e}; max jump {jump:.1e}; "
                         f"{len(residuals)} residual rows, max dev {res_err:.1e}")


def test_criterion_09_decoy_ordering(verdict):
    violations = 0
    rows = 0
    for a, b in ((0.8, 0.4), (1.5, 0.5), (3.0, 0.7)):
        for d in (0.0, 0.25, 0.5, 0.75, 1.0):
            prm = FsParams(a, b, d)
            zero = ranking_report(prm, lottery="zero")
            neg = ranking_report(prm, lottery="negative")
            violations += len(zero.violations)
            rows += len(zero.rows) + len(neg.rows)
            for r in neg.rows:
                gap = r["w_s"] - r["w_i"]
                base = r["z"] / 4 * (1 + a - b)
                if gap - base < -1e-9 or (d < 1 and gap <= 0):
                    violations += 1
    verdict(9, violations == 0, f"{violations} violations over {rows} rows")


def _max_approx_gap(n, m):
    # every split of ranks 1..n+m; p depends only on the first-sample rank sum
    N = n + m
    worst = 0.0
    seen = set()
    for c in itertools.combinations(range(1, N + 1), n):
        s = sum(c)
        if s in seen:
            continue
        seen.add(s)
        y = [v for v in range(1, N + 1) if v not in c]
        gap = abs(wilcoxon_rank_sum(list(c), y, "exact").p_two_sided
                  - wilcoxon_rank_sum(list(c), y, "normal").p_two_sided)
        worst = max(worst, gap)
    return worst


def test_criterion_10_statistics_oracles(verdict):
    p_w = wilcoxon_rank_sum([1, 2], [3, 4]).p_two_sided
    p_f1 = fisher_exact_2x2(3, 0, 0, 3).p_two_sided
    p_f2 = fisher_exact_2x2(2, 1, 1, 2).p_two_sided
    fixtures = abs(p_w - 1 / 3) < 1e-12 and abs(p_f1 - 0.1) < 1e-12 and abs(p_f2 - 1.0) < 1e-12
    gaps = {(n, m): _max_approx_gap(n, m)
            for n in range(1, 12) for m in range(1, 12) if n + m <= 12}
    (worst_nm, worst), = sorted(gaps.items(), key=lambda kv: -kv[1])[:1]
    within = sum(g <= 0.02 for g in gaps.values())
    verdict(10, fixtures and worst <= 0.02,
            f"fixtures ok={fixtures}; approx vs exact within 0.02 for {within}/{len(gaps)} "
            f"(n, m) pairs, worst {worst:.3f} at {worst_nm}")


def test_criterion_11_end_to_end(verdict):
    spec = PopulationSpec(60, 123456789)
    agents = sample_population(spec)
    treatments = ["P", "PI0", "I0"]
    a = simulate_dataset(agents, treatments, AllocationRule.MULTINOMIAL_TOKENS, workers=1).to_csv()
    b = simulate_dataset(agents, treatments, AllocationRule.MULTINOMIAL_TOKENS, workers=1).to_csv()
    c = simulate_dataset(agents, treatments, AllocationRule.MULTINOMIAL_TOKENS, workers=3).to_csv()
    identical = a == b == c
    ds = simulate_dataset(agents, treatments, AllocationRule.MULTINOMIAL_TOKENS)
    avg = {(r.treatment, r.measure): r.average for r in summarize(ds)}
    pun = avg[("PI0", "mean_punishment")] < avg[("P", "mean_punishment")]
    inv = avg[("PI0", "mean_investment")] >= avg[("I0", "mean_investment")]
    verdict(11, identical and pun and inv,
            f"byte-identical={identical}; punishment PI0 {avg[('PI0', 'mean_punishment')]:.2f} "
            f"< P {avg[('P', 'mean_punishment')]:.2f}: {pun}; investment PI0 "
            f"{avg[('PI0', 'mean_investment')]:.2f} >= I0 {avg[('I0', 'mean_investment')]:.2f}: {inv}")
