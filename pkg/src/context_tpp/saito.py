"""Inequity aversion under risk for the third party (decoy-effect view).

Player C's utility over a three-player allocation is Fehr-Schmidt style with
*unnormalized* sums over the two other players:

    u = x_c - alpha * sum max(x_j - x_c, 0) - beta * sum max(x_c - x_j, 0)

There is deliberately no division by (n - 1); the closed-form partworths below
only reproduce under the unnormalized convention. Under risk, the evaluation
mixes the utility of the ex-ante expected allocation (weight ``delta``) with the
expected utility of the ex-post allocations (weight ``1 - delta``).

The closed forms for the investment, safe and punishment options are
implemented next to a brute-force oracle that builds the allocations from the
game rules and evaluates them directly. The punishment closed form is kept in
its published shape; its second and third branches disagree with the oracle
and the disagreement is reported, not patched.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .game import I0, INEG, P, Treatment, lottery_outcomes


@dataclass(frozen=True)
class FsParams:
    alpha: float
    beta: float
    delta: float = 0.5

    def __post_init__(self):
        if not (self.alpha > self.beta > 0):
            raise ValueError(f"need alpha > beta > 0, got alpha={self.alpha}, beta={self.beta}")
        if not (self.alpha + self.beta > 1):
            raise ValueError(f"need alpha + beta > 1, got {self.alpha + self.beta}")
        if not (0 <= self.delta <= 1):
            raise ValueError(f"delta={self.delta} outside [0, 1]")


class Allocation(NamedTuple):
    x_a: object
    x_b: object
    x_c: object


def fs_utility(alloc: Sequence, params: FsParams):
    x_a, x_b, x_c = alloc
    envy = max(x_a - x_c, 0) + max(x_b - x_c, 0)
    guilt = max(x_c - x_a, 0) + max(x_c - x_b, 0)
    return x_c - params.alpha * envy - params.beta * guilt


def _check_distribution(dist):
    if not dist:
        raise ValueError("empty outcome distribution")
    probs = [p for p, _ in dist]
    if any(p <= 0 for p in probs):
        raise ValueError(f"outcome probabilities must be positive: {probs}")
    total = sum(probs)
    exact = all(isinstance(p, (int, Fraction)) for p in probs)
    if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
        raise ValueError(f"outcome probabilities sum to {total}, not 1")


def saito_value(ex_ante: Sequence, ex_post, params: FsParams):
    _check_distribution(ex_post)
    d = params.delta
    expected = sum(p * fs_utility(a, params) for p, a in ex_post)
    return d * fs_utility(ex_ante, params) + (1 - d) * expected


# --- closed forms ----------------------------------------------------------

def partworth_safe(t, params: FsParams):
    return 50 - (50 - t) * (params.alpha + params.beta)


def _require_positive(name, v):
    if v == 0:
        raise ValueError(f"{name}=0 is the safe option; use partworth_safe")
    if not 0 < v <= 50:
        raise ValueError(f"{name}={v} outside (0, 50]")


def partworth_invest_zero(t, z, params: FsParams):
    """Investment with a mean-zero double-or-nothing lottery (p = 0)."""
    _require_positive("z", z)
    s = params.alpha + params.beta
    base = 50 - (50 - t) * s
    if z <= 50 - t:
        return base
    return base + (1 - params.delta) * (50 - t - z) * s


def invest_neg_branch(t, z) -> int:
    g = 50 - t
    if z < g:
        return 1
    if z < 2 * g:
        return 2
    if z < 4 * g:
        return 3
    return 4


def partworth_invest_neg(t, z, params: FsParams):
    """Investment with the 1.5x lottery: +z/2 or -z, ex-ante mean -z/4."""
    _require_positive("z", z)
    a, b, d = params.alpha, params.beta, params.delta
    s = a + b
    F = 50 - (50 - t) * s - Fraction(1, 4) * z * (1 + a - b)
    branch = invest_neg_branch(t, z)
    if branch == 1:
        return F
    if branch == 2:
        return F + (1 - d) * (25 - Fraction(1, 2) * t - Fraction(1, 2) * z) * s
    if branch == 3:
        return F + (1 - d) * (50 - t - Fraction(3, 4) * z) * s
    return 50 - Fraction(1, 4) * z - Fraction(1, 2) * z * a - (1 - d) * Fraction(1, 2) * z * s


def punish_branch(t, p) -> int:
    if p < Fraction(50 - t, 2):
        return 1
    if p < 50 - t:
        return 2
    return 3


def partworth_punish_printed(t, p, params: FsParams):
    """Punishment partworth (z = 0) in its published three-branch form."""
    _require_positive("p", p)
    a, b = params.alpha, params.beta
    branch = punish_branch(t, p)
    if branch == 1:
        return 50 - (50 - t) * (a + b) - p * (1 - 2 * a - b)
    if branch == 2:
        return 50 - p * b
    return 50 - (t - 50) * (a + b) - p * (1 - a - 2 * b)


def partworth_punish_derived(t, p, params: FsParams):
    """Punishment partworth obtained by direct evaluation, branch by branch."""
    _require_positive("p", p)
    a, b = params.alpha, params.beta
    branch = punish_branch(t, p)
    if branch == 1:
        return 50 - (50 - t) * (a + b) - p * (1 - 2 * a - b)
    if branch == 2:
        return 50 - p * (1 + b)
    return 50 + (50 - t) * (a + b) - p * (1 + a + 2 * b)


def punish_residual_expected(t, p, params: FsParams):
    """published - derived, per branch: 0, p, and 2p(alpha + 2 beta)."""
    branch = punish_branch(t, p)
    if branch == 1:
        return 0
    if branch == 2:
        return p
    return 2 * p * (params.alpha + 2 * params.beta)


# --- brute-force oracle ------------------------------------------------------

def partworth_oracle(option: str, treatment: Treatment, t, p, z, params: FsParams):
    """Ground-truth partworth from the game's actual allocations.

    Valid combinations: ``S`` with p = z = 0; ``TP`` with p > 0, z = 0 in a
    treatment that offers punishment; ``I`` with z > 0, p = 0 in a treatment
    that offers investment.
    """
    if option == "S":
        if p or z:
            raise ValueError("safe option requires p = z = 0")
    elif option == "TP":
        if not treatment.punishment_available:
            raise ValueError(f"punishment unavailable in {treatment.id}")
        if z:
            raise ValueError("punishment option evaluated with z = 0")
        _require_positive("p", p)
    elif option == "I":
        if not treatment.investment_available:
            raise ValueError(f"investment unavailable in {treatment.id}")
        if p:
            raise ValueError("investment option evaluated with p = 0")
        _require_positive("z", z)
    else:
        raise ValueError(f"unknown option {option!r}")
    ex_ante, ex_post = lottery_outcomes(treatment, t, p, z)
    return saito_value(ex_ante, ex_post, params)


# --- ranking report ----------------------------------------------------------

REPORT_COLUMNS = (
    "t", "p", "z", "alpha", "beta", "delta",
    "w_tp_printed", "w_tp_oracle", "w_s", "w_i", "branch",
)


@dataclass
class RankingReport:
    lottery: str  # "zero" | "negative"
    rows: list[dict] = field(default_factory=list)
    violations: list[dict] = field(default_factory=list)
    punish_deviations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.DictWriter(out, fieldnames=REPORT_COLUMNS, lineterminator="\n",
                           extrasaction="ignore")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in REPORT_COLUMNS})
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "lottery": self.lottery, "passed": self.passed,
            "violations": self.violations,
            "punish_deviations": self.punish_deviations,
            "rows": self.rows,
        }, indent=2, default=float)


def _fmt(v):
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, float):
        return repr(v)
    return v


DEFAULT_T_GRID = (0, 10, 20, 30, 40, 50)
DEFAULT_P_GRID = (1, 5, 10, 15, 20, 25, 30, 40, 50)
DEFAULT_Z_GRID = (1, 5, 10, 20, 30, 40, 50)


def ranking_report(
    params: FsParams,
    t_grid: Iterable = DEFAULT_T_GRID,
    p_grid: Iterable = DEFAULT_P_GRID,
    z_grid: Iterable = DEFAULT_Z_GRID,
    lottery: str = "zero",
    tol: float = 1e-9,
) -> RankingReport:
    """Tabulate oracle partworths over the grid and check the S-vs-I ordering.

    Zero-return lottery: W_S >= W_I, with equality exactly when z <= 50 - t or
    delta = 1. Negative-return lottery: W_S > W_I for every z > 0. Rows where
    the oracle's punishment partworth falls below the safe one are collected
    in ``punish_deviations`` but are not violations.
    """
    if lottery not in ("zero", "negative"):
        raise ValueError(f"lottery must be 'zero' or 'negative', got {lottery!r}")
    invest_tr = I0 if lottery == "zero" else INEG
    report = RankingReport(lottery)
    for t, p, z in itertools.product(t_grid, p_grid, z_grid):
        w_s = partworth_oracle("S", P, t, 0, 0, params)
        w_i = partworth_oracle("I", invest_tr, t, 0, z, params)
        w_tp = partworth_oracle("TP", P, t, p, 0, params)
        row = {
            "t": t, "p": p, "z": z, "alpha": params.alpha, "beta": params.beta,
            "delta": params.delta,
            "w_tp_printed": partworth_punish_printed(t, p, params),
            "w_tp_oracle": w_tp, "w_s": w_s, "w_i": w_i,
            "branch": punish_branch(t, p),
        }
        report.rows.append(row)
        gap = w_s - w_i
        if lottery == "zero":
            expect_equal = z <= 50 - t or params.delta == 1
            ok = abs(gap) <= tol if expect_equal else gap > tol
        else:
            ok = gap > tol
        if not ok:
            report.violations.append({"t": t, "z": z, "w_s": float(w_s), "w_i": float(w_i)})
        if w_tp < w_s - tol:
            report.punish_deviations.append(
                {"t": t, "p": p, "w_tp_oracle": float(w_tp), "w_s": float(w_s),
                 "w_tp_printed": float(row["w_tp_printed"])}
            )
    return report


def punish_residual_report(params: FsParams, t_grid=DEFAULT_T_GRID, p_grid=DEFAULT_P_GRID):
    """Published-minus-oracle residuals of the punishment closed form.

    Only nonzero-residual rows (branches 2 and 3) are returned; each carries
    the analytic residual for comparison.
    """
    out = []
    for t, p in itertools.product(t_grid, p_grid):
        printed = partworth_punish_printed(t, p, params)
        oracle = partworth_oracle("TP", P, t, p, 0, params)
        branch = punish_branch(t, p)
        if branch == 1:
            continue
        out.append({
            "t": t, "p": p, "alpha": params.alpha, "beta": params.beta,
            "branch": branch, "printed": printed, "oracle": oracle,
            "residual": printed - oracle,
            "expected_residual": punish_residual_expected(t, p, params),
        })
    return out


def oracle_equivalence(points: Iterable[tuple]) -> dict:
    """Max |closed form - oracle| for each closed form over (t, x, alpha, beta, delta).

    ``x`` is used as z for the investment forms and as p for the punishment
    form (the latter only on its first branch).
    """
    worst = {"safe": 0.0, "invest_zero": 0.0, "invest_neg": 0.0, "punish_branch1": 0.0}
    count = 0
    for t, x, a, b, d in points:
        prm = FsParams(a, b, d)
        worst["safe"] = max(worst["safe"], abs(
            partworth_safe(t, prm) - partworth_oracle("S", P, t, 0, 0, prm)))
        worst["invest_zero"] = max(worst["invest_zero"], abs(
            partworth_invest_zero(t, x, prm) - partworth_oracle("I", I0, t, 0, x, prm)))
        worst["invest_neg"] = max(worst["invest_neg"], abs(
            partworth_invest_neg(t, x, prm) - partworth_oracle("I", INEG, t, 0, x, prm)))
        if punish_branch(t, x) == 1:
            worst["punish_branch1"] = max(worst["punish_branch1"], abs(
                partworth_punish_printed(t, x, prm) - partworth_oracle("TP", P, t, x, 0, prm)))
        count += 1
    return {"points": count, "max_abs_error": {k: float(v) for k, v in worst.items()}}
