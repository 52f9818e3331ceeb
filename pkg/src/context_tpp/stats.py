"""Two-sided rank-sum and Fisher exact tests, and treatment summaries."""
from __future__ import annotations

import json
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .game import TRANSFER_LEVELS
from .simulate import AgentSummary, ChoiceDataset, derive_measures

EXACT_MAX_N = 12
FISHER_REL_TOL = 1e-7


@dataclass(frozen=True)
class RankSumResult:
    u_statistic: float
    p_two_sided: float
    method: str  # "exact" | "normal"


@dataclass(frozen=True)
class FisherResult:
    p_two_sided: float


def _exact_rank_sum_pvalue(ranks2: Sequence[int], n: int, observed2: int) -> float:
    """Two-sided p for the sum of ``n`` of the given doubled ranks.

    Counts every size-n subset of the pooled ranks by subset-sum dynamic
    programming, which is equivalent to enumerating all assignments.
    """
    # ways[k][s] = number of k-subsets with doubled-rank sum s
    ways = [Counter() for _ in range(n + 1)]
    ways[0][0] = 1
    for r in ranks2:
        for k in range(n, 0, -1):
            prev = ways[k - 1]
            if prev:
                cur = ways[k]
                for s, c in prev.items():
                    cur[s + r] += c
    dist = ways[n]
    total = sum(dist.values())
    lower = sum(c for s, c in dist.items() if s <= observed2)
    upper = sum(c for s, c in dist.items() if s >= observed2)
    return min(1.0, 2 * min(lower, upper) / total)


def wilcoxon_rank_sum(x, y, method: Optional[str] = None) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum (Mann-Whitney) test with midranks.

    ``method`` is "exact", "normal", or None to choose exact when the pooled
    sample has at most 12 observations. The normal approximation uses the
    tie-corrected variance and a 0.5 continuity correction.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = len(x), len(y)
    if n == 0 or m == 0:
        raise ValueError("both samples must be nonempty")
    if method is None:
        method = "exact" if n + m <= EXACT_MAX_N else "normal"
    if method not in ("exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    ranks = rankdata(np.concatenate([x, y]))
    r_x = float(ranks[:n].sum())
    u = r_x - n * (n + 1) / 2
    if method == "exact":
        ranks2 = [int(round(2 * r)) for r in ranks]
        p = _exact_rank_sum_pvalue(ranks2, n, int(round(2 * r_x)))
        return RankSumResult(u, p, "exact")
    N = n + m
    ties = Counter(ranks.tolist()).values()
    tie_term = sum(t**3 - t for t in ties) / (N * (N - 1))
    var = n * m / 12 * ((N + 1) - tie_term)
    if var <= 0:
        return RankSumResult(u, 1.0, "normal")
    dev = max(abs(u - n * m / 2) - 0.5, 0.0)
    p = min(1.0, 2 * float(norm.sf(dev / math.sqrt(var))))
    return RankSumResult(u, p, "normal")


def fisher_exact_2x2(a: int, b: int, c: int, d: int) -> FisherResult:
    """Two-sided Fisher exact test for [[a, b], [c, d]].

    Sums the probabilities of all tables with the observed margins whose
    probability does not exceed the observed one (relative tolerance 1e-7).
    Table weights are exact integers, so ties are only fuzzed by the tolerance.
    """
    cells = (a, b, c, d)
    if any((not isinstance(v, (int, np.integer))) or v < 0 for v in cells):
        raise ValueError(f"counts must be nonnegative integers, got {cells}")
    a, b, c, d = (int(v) for v in cells)
    total = a + b + c + d
    if total == 0:
        raise ValueError("all-zero table")
    row1, col1 = a + b, a + c
    lo, hi = max(0, col1 - (total - row1)), min(row1, col1)
    weights = {k: math.comb(row1, k) * math.comb(total - row1, col1 - k) for k in range(lo, hi + 1)}
    w_obs = weights[a]
    cutoff = Fraction(w_obs) * (1 + Fraction(FISHER_REL_TOL))
    mass = sum(w for w in weights.values() if w <= cutoff)
    return FisherResult(min(1.0, float(Fraction(mass, math.comb(total, col1)))))


# --- dataset level -----------------------------------------------------------

MEASURES = (
    "mean_punishment", "median_punishment", "mean_investment", "median_investment",
    "mean_safe", "median_safe",
)


@dataclass(frozen=True)
class SummaryRow:
    treatment: str
    measure: str
    average: float
    sd: float
    n: int
    single: bool = False  # sd undefined for n = 1, reported as 0


def summarize(dataset: ChoiceDataset) -> list[SummaryRow]:
    agents = derive_measures(dataset)
    if not agents:
        raise ValueError("empty dataset")
    out = []
    for tid in dataset.treatments():
        group = [a for a in agents if a.treatment == tid]
        for measure in MEASURES:
            vals = [a.value(measure) for a in group]
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            out.append(SummaryRow(tid, measure, statistics.fmean(vals), sd, len(vals), len(vals) == 1))
    return out


def format_summary(rows: Sequence[SummaryRow], precision: int = 4) -> str:
    lines = [f"{'treatment':<10}{'measure':<20}{'average':>12}{'sd':>12}{'n':>6}"]
    for r in rows:
        lines.append(
            f"{r.treatment:<10}{r.measure:<20}{r.average:>12.{precision}f}"
            f"{r.sd:>12.{precision}f}{r.n:>6}"
        )
    return "\n".join(lines)


def make_test_record(test: str, groups, statistic, p, method) -> dict:
    return {"test": test, "groups": list(groups), "statistic": statistic, "p": p, "method": method}


def _group(agents: Sequence[AgentSummary], tid: str):
    return [a for a in agents if a.treatment == tid]


def compare_treatments(dataset: ChoiceDataset, first: str, second: str) -> list[dict]:
    """Per-transfer and individual-level tests between two treatments.

    Per transfer level: Fisher test on punisher and investor incidence and
    rank-sum tests on deduction and investment expenditure. Individual level:
    rank-sum tests on every mean/median measure.
    """
    agents = derive_measures(dataset)
    g1, g2 = _group(agents, first), _group(agents, second)
    if not g1 or not g2:
        raise ValueError(f"no agents for {first if not g1 else second}")
    rows_by = {}
    for r in dataset.rows:
        rows_by.setdefault((r.treatment, r.transfer), []).append(r)
    groups = (first, second)
    records = []
    for t in TRANSFER_LEVELS:
        r1, r2 = rows_by.get((first, t), []), rows_by.get((second, t), [])
        for flag, col in (("punisher", "deduction"), ("investor", "investment")):
            k1 = sum(getattr(r, flag) for r in r1)
            k2 = sum(getattr(r, flag) for r in r2)
            fr = fisher_exact_2x2(k1, len(r1) - k1, k2, len(r2) - k2)
            records.append(make_test_record(f"fisher_{flag}_t{t}", groups, None, fr.p_two_sided, "exact"))
            rs = wilcoxon_rank_sum([getattr(r, col) for r in r1], [getattr(r, col) for r in r2])
            records.append(make_test_record(f"ranksum_{col}_t{t}", groups, rs.u_statistic,
                                       rs.p_two_sided, rs.method))
    for measure in MEASURES:
        rs = wilcoxon_rank_sum([a.value(measure) for a in g1], [a.value(measure) for a in g2])
        records.append(make_test_record(f"ranksum_{measure}", groups, rs.u_statistic,
                                   rs.p_two_sided, rs.method))
    return records


def report_json(records, summary: Sequence[SummaryRow] = ()) -> str:
    return json.dumps({"tests": records, "summary": [asdict(s) for s in summary]},
                      indent=2, sort_keys=True)
