"""Normalized contextual concavity model (NCCM) with a multinomial logit.

Each option has a partworth on two attributes, material payoff (``M``) and
psychological payoff (``P``). Within a context (treatment, transfer) the
attribute contribution of option j is

    (Wmax - Wmin) ** (1 - c) * (W_j - Wmin) ** c

with max/min over the options that are actually available. The deterministic
utility is the sum over attributes and feeds a logit with scale ``b``.
Intermediate options gain from concavity, which is what produces the
compromise effect of adding an investment option next to punishment.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import bisect

from .game import I0, P, PI0, Treatment, get_treatment

OPTIONS = ("TP", "I", "S")
ATTRIBUTES = ("material", "psychological")
MODEL_TRANSFERS = (0, 10, 20, 30, 40)
FAIR_TRANSFER = 50
BOUNDARY_EPS = 1e-9

DEFAULT_B = 0.05
DEFAULT_C = 0.35

CANONICAL_MATERIAL = {"TP": 0.0, "I": 25.0, "S": 50.0}
CANONICAL_PSYCHOLOGICAL = {"TP": 50.0, "I": 25.0, "S": 0.0}


class AssumptionViolation(ValueError):
    pass


@dataclass(frozen=True)
class NccmParams:
    c_m: float = DEFAULT_C
    c_p: float = DEFAULT_C
    b: float = DEFAULT_B

    def __post_init__(self):
        for name in ("c_m", "c_p"):
            v = getattr(self, name)
            if not (BOUNDARY_EPS <= v <= 1 - BOUNDARY_EPS):
                raise ValueError(f"{name}={v} must lie in the open interval (0, 1)")
        if not self.b > 0:
            raise ValueError(f"logit scale b={self.b} must be positive")


@dataclass(frozen=True)
class PartworthTable:
    """Partworths of TP/I/S on both attributes at one transfer level."""

    material: Mapping[str, float]
    psychological: Mapping[str, float]

    def attribute(self, name: str) -> Mapping[str, float]:
        return self.material if name == "material" else self.psychological

    def check_order(self, strict: bool = False):
        """Material S > I > TP and psychological TP > I > S.

        The weak form (the default) only requires the extremes to be ordered
        and the investment option to lie between them, which admits the
        degenerate configurations used in boundary checks. ``strict=True``
        enforces the full strict orderings.
        """
        m, ps = self.material, self.psychological
        if strict:
            ok = m["S"] > m["I"] > m["TP"] and ps["TP"] > ps["I"] > ps["S"]
        else:
            ok = m["S"] >= m["I"] >= m["TP"] and ps["TP"] >= ps["I"] >= ps["S"]
        if not ok:
            raise AssumptionViolation(
                f"partworth ordering violated: material={dict(m)}, psychological={dict(ps)}"
            )


CANONICAL = PartworthTable(CANONICAL_MATERIAL, CANONICAL_PSYCHOLOGICAL)

WTable = Union[PartworthTable, Mapping[int, PartworthTable]]


def table_at(W: WTable, t: int) -> PartworthTable:
    if isinstance(W, PartworthTable):
        return W
    try:
        return W[t]
    except KeyError:
        raise KeyError(f"partworth schedule has no entry for t={t}") from None


@dataclass(frozen=True)
class Context:
    treatment: Treatment
    t: int
    allow_fair: bool = False

    def __post_init__(self):
        allowed = MODEL_TRANSFERS + ((FAIR_TRANSFER,) if self.allow_fair else ())
        if self.t not in allowed:
            raise ValueError(f"transfer {self.t} outside model range {allowed}")

    @property
    def options(self) -> tuple[str, ...]:
        return self.treatment.options


def _contribution(w, lo, hi, c):
    span = hi - lo
    if span <= 0:
        return 0.0
    gain = w - lo
    if gain <= 0:
        return 0.0
    return span ** (1.0 - c) * gain ** c


def deterministic_utilities(
    ctx: Context, W: WTable, params: NccmParams
) -> dict[str, float]:
    table = table_at(W, ctx.t)
    table.check_order()
    conc = {"material": params.c_m, "psychological": params.c_p}
    avail = ctx.options
    out = {j: 0.0 for j in avail}
    for attr in ATTRIBUTES:
        vals = table.attribute(attr)
        lo = min(vals[j] for j in avail)
        hi = max(vals[j] for j in avail)
        for j in avail:
            out[j] += _contribution(vals[j], lo, hi, conc[attr])
    return out


def closed_form_utilities(
    ctx: Context, W: WTable, params: NccmParams
) -> dict[str, float]:
    """Hand-derived utilities for the three- and two-option contexts.

    Independent of :func:`deterministic_utilities`; used to cross-check it.
    """
    w = table_at(W, ctx.t)
    m, ps = w.material, w.psychological
    opts = set(ctx.options)
    if opts == {"TP", "I", "S"}:
        m_i = (m["S"] - m["TP"]) ** (1 - params.c_m) * (m["I"] - m["TP"]) ** params.c_m + (
            ps["TP"] - ps["S"]
        ) ** (1 - params.c_p) * (ps["I"] - ps["S"]) ** params.c_p
        return {"TP": ps["TP"] - ps["S"], "I": m_i, "S": m["S"] - m["TP"]}
    if opts == {"TP", "S"}:
        return {"TP": ps["TP"] - ps["S"], "S": m["S"] - m["TP"]}
    if opts == {"I", "S"}:
        return {"I": ps["I"] - ps["S"], "S": m["S"] - m["I"]}
    raise ValueError(f"no closed form for option set {sorted(opts)}")


def choice_probabilities(M: Mapping[str, float], b: float) -> dict[str, float]:
    if not M:
        raise ValueError("empty option set")
    if not b > 0:
        raise ValueError(f"logit scale b={b} must be positive")
    keys = list(M)
    v = b * np.array([M[k] for k in keys], dtype=float)
    e = np.exp(v - v.max())
    pr = e / e.sum()
    return dict(zip(keys, pr.tolist()))


def context_probabilities(ctx: Context, W: WTable, params: NccmParams) -> dict[str, float]:
    return choice_probabilities(deterministic_utilities(ctx, W, params), params.b)


@dataclass(frozen=True)
class Assumption3:
    lhs: float
    rhs: float
    holds: bool


def _a3_terms(W: PartworthTable, params: NccmParams, t: int):
    u_pi0 = deterministic_utilities(Context(PI0, t, allow_fair=True), W, params)
    u_i0 = deterministic_utilities(Context(I0, t, allow_fair=True), W, params)
    b = params.b
    lhs_exp = b * u_pi0["I"] + b * u_i0["S"]
    rhs_exps = (b * u_i0["I"] + b * u_pi0["TP"], b * u_i0["I"] + b * u_pi0["S"])
    return lhs_exp, rhs_exps


def assumption3_check(W: WTable, params: NccmParams, t: int = 0) -> Assumption3:
    """Evaluate both sides of the condition under which adding punishment
    raises the investment choice probability."""
    lhs_exp, rhs_exps = _a3_terms(table_at(W, t), params, t)
    lhs = math.exp(lhs_exp)
    rhs = math.exp(rhs_exps[0]) + math.exp(rhs_exps[1])
    return Assumption3(lhs, rhs, lhs > rhs)


def _a3_log_gap(c: float, W: PartworthTable, b: float, t: int) -> float:
    lhs_exp, rhs_exps = _a3_terms(W, NccmParams(c, c, b), t)
    return lhs_exp - float(np.logaddexp(*rhs_exps))


def assumption3_crossing(
    W: WTable, b: float = DEFAULT_B, tol: float = 1e-5, t: int = 0
) -> Optional[float]:
    """Common concavity c = c_M = c_P at which both sides of the investment-share condition meet.

    Bisection on the log-ratio (same sign as lhs - rhs). Returns ``None``
    when there is no sign change on the open unit interval.
    """
    table = table_at(W, t)
    lo, hi = BOUNDARY_EPS, 1 - BOUNDARY_EPS
    g_lo = _a3_log_gap(lo, table, b, t)
    g_hi = _a3_log_gap(hi, table, b, t)
    if not (g_lo > 0 and g_hi < 0):
        return None
    return bisect(_a3_log_gap, lo, hi, args=(table, b, t), xtol=tol)


# --- partworth schedules ----------------------------------------------------

@dataclass(frozen=True)
class ScheduleConfig:
    """How partworths evolve with the transfer level.

    Material partworths are constant. Psychological gaps over the safe option
    are ``psychological`` at t = 0 and shrink with ``profile``: "linear"
    scales them by (1 - t/50), "constant" keeps them fixed.
    """

    material: Mapping[str, float] = field(default_factory=lambda: dict(CANONICAL_MATERIAL))
    psychological: Mapping[str, float] = field(
        default_factory=lambda: dict(CANONICAL_PSYCHOLOGICAL)
    )
    profile: str = "linear"
    extrapolate_fair: bool = False

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScheduleConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown schedule keys: {sorted(unknown)}")
        return cls(**d)


def _scale(profile: str, t: int) -> float:
    if profile == "linear":
        return 1.0 - t / FAIR_TRANSFER
    if profile == "constant":
        return 1.0
    raise ValueError(f"unknown profile {profile!r}; expected 'linear' or 'constant'")


def build_partworth_schedule(config: ScheduleConfig | Mapping | None = None) -> dict[int, PartworthTable]:
    """Partworth tables for t = 0..40 (and t = 50 if extrapolation is on).

    At t = 50 the psychological gaps are set to zero regardless of the profile;
    that point lies outside the model's stated range.
    """
    if config is None:
        config = ScheduleConfig()
    elif not isinstance(config, ScheduleConfig):
        config = ScheduleConfig.from_dict(config)
    base = PartworthTable(dict(config.material), dict(config.psychological))
    base.check_order(strict=True)
    floor = config.psychological["S"]
    schedule = {}
    for t in MODEL_TRANSFERS:
        k = _scale(config.profile, t)
        psych = {j: floor + k * (v - floor) for j, v in config.psychological.items()}
        schedule[t] = PartworthTable(dict(config.material), psych)
    if config.extrapolate_fair:
        schedule[FAIR_TRANSFER] = PartworthTable(
            dict(config.material), {j: floor for j in config.psychological}
        )
    return schedule


def check_assumptions(W: WTable, t_set: Iterable[int] = MODEL_TRANSFERS, strict: bool = True):
    """Raise unless the orderings hold and the cross-t structure is respected:
    material partworths constant, psychological gaps weakly decreasing in t."""
    ts = sorted(t_set)
    tables = [table_at(W, t) for t in ts]
    for tab in tables:
        tab.check_order(strict=strict)
    for prev, cur, t in zip(tables, tables[1:], ts[1:]):
        if dict(prev.material) != dict(cur.material):
            raise AssumptionViolation(f"material partworths change at t={t}")
        for j in ("TP", "I"):
            g_prev = prev.psychological[j] - prev.psychological["S"]
            g_cur = cur.psychological[j] - cur.psychological["S"]
            if g_cur > g_prev + 1e-12:
                raise AssumptionViolation(f"psychological gap of {j} increases at t={t}")


# --- proposition checks -----------------------------------------------------

@dataclass
class PropositionRow:
    t: int
    lhs_prob: float
    rhs_prob: float
    holds: bool
    asserted: bool = True
    detail: dict = field(default_factory=dict)


@dataclass
class PropositionReport:
    name: str
    params: NccmParams
    rows: list[PropositionRow]

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.rows if r.asserted)

    def to_dict(self):
        return {"proposition": self.name, "params": asdict(self.params),
                "passed": self.passed, "rows": [asdict(r) for r in self.rows]}


def verify_proposition1(
    W: WTable, params: NccmParams, t_set: Sequence[int] = MODEL_TRANSFERS
) -> PropositionReport:
    """Pr(TP | P&I0, t) < Pr(TP | P, t) at every t.

    Also records the steps the argument rests on: TP and S utilities are the
    same in both contexts and exp(b M_I) adds a positive term to the
    three-option denominator.
    """
    for t in t_set:
        table = table_at(W, t)
        table.check_order()
        m, ps = table.material, table.psychological
        if not (m["S"] > m["TP"] and ps["TP"] > ps["S"]):
            raise AssumptionViolation(f"TP/S partworths not strictly ordered at t={t}")
    check_assumptions(W, t_set, strict=False)
    rows = []
    for t in t_set:
        u3 = deterministic_utilities(Context(PI0, t), W, params)
        u2 = deterministic_utilities(Context(P, t), W, params)
        pr3 = choice_probabilities(u3, params.b)
        pr2 = choice_probabilities(u2, params.b)
        same_tp = math.isclose(u3["TP"], u2["TP"], rel_tol=0, abs_tol=1e-12)
        same_s = math.isclose(u3["S"], u2["S"], rel_tol=0, abs_tol=1e-12)
        extra = math.exp(params.b * u3["I"])
        rows.append(PropositionRow(
            t, pr3["TP"], pr2["TP"],
            pr3["TP"] < pr2["TP"] and same_tp and same_s and extra > 0,
            detail={"m_tp_equal": same_tp, "m_s_equal": same_s,
                    "exp_b_mi": extra, "m_i": u3["I"]},
        ))
    return PropositionReport("proposition1", params, rows)


def verify_proposition2(
    W: WTable, params: NccmParams, t_set: Sequence[int] = MODEL_TRANSFERS
) -> PropositionReport:
    """Pr(I | P&I0, t) > Pr(I | I0, t), asserted only where the investment-share condition holds."""
    rows = []
    for t in t_set:
        pr3 = context_probabilities(Context(PI0, t), W, params)
        pr2 = context_probabilities(Context(I0, t), W, params)
        a3 = assumption3_check(W, params, t)
        rows.append(PropositionRow(
            t, pr3["I"], pr2["I"], pr3["I"] > pr2["I"], asserted=a3.holds,
            detail={"assumption3": a3.holds, "lhs": a3.lhs, "rhs": a3.rhs},
        ))
    return PropositionReport("proposition2", params, rows)


def random_assumption_draw(rng: np.random.Generator, t_set: Sequence[int] = MODEL_TRANSFERS):
    """Random (schedule, params) satisfying the ordering assumptions.

    Partworths on [0, 100], psychological gaps shrink by random factors in t,
    c_M and c_P uniform on (0.01, 0.99), b uniform on (0.01, 0.2).
    """
    mat = np.sort(rng.uniform(0, 100, 3))
    material = {"TP": mat[0], "I": mat[1], "S": mat[2]}
    s_floor = rng.uniform(0, 50)
    gap_tp = rng.uniform(1, 50)
    gap_i = gap_tp * rng.uniform(0.01, 0.99)
    shrink = np.cumprod(np.concatenate([[1.0], rng.uniform(0.3, 1.0, len(t_set) - 1)]))
    schedule = {}
    for t, k in zip(sorted(t_set), shrink):
        schedule[t] = PartworthTable(
            dict(material),
            {"TP": s_floor + k * gap_tp, "I": s_floor + k * gap_i, "S": s_floor},
        )
    params = NccmParams(
        c_m=rng.uniform(0.01, 0.99), c_p=rng.uniform(0.01, 0.99), b=rng.uniform(0.01, 0.2)
    )
    return schedule, params


# --- sweeps and reports -----------------------------------------------------

SWEEP_CONTEXTS = ("P", "PI0", "I0")


def _sweep_one(args):
    params, W, t = args
    out = []
    a3 = assumption3_check(W, params, t)
    for cid in SWEEP_CONTEXTS:
        ctx = Context(get_treatment(cid), t, allow_fair=True)
        M = deterministic_utilities(ctx, W, params)
        out.append({
            "c_m": params.c_m, "c_p": params.c_p, "b": params.b, "t": t,
            "context": cid, "lhs": a3.lhs, "rhs": a3.rhs, "holds": a3.holds,
            "utilities": M, "probabilities": choice_probabilities(M, params.b),
        })
    return out


def sweep(
    param_grid: Sequence[NccmParams], W: WTable, t_set: Sequence[int] = (0,), workers: int = 1
) -> list[dict]:
    """One record per (params, t, context), in input order regardless of workers."""
    jobs = [(p, table_at(W, t), t) for p in param_grid for t in t_set]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_sweep_one, jobs))
    else:
        chunks = [_sweep_one(j) for j in jobs]
    return [rec for chunk in chunks for rec in chunk]


def sweep_json(records: list[dict]) -> str:
    return json.dumps(records, indent=2, sort_keys=True)


TABLE_B1_C = (0.5, 0.4, 0.3, 0.2, 0.1)


def table_b1(c_values: Sequence[float] = TABLE_B1_C, b: float = DEFAULT_B, W: WTable = CANONICAL):
    return [(c, assumption3_check(W, NccmParams(c, c, b), 0)) for c in c_values]


def format_table_b1(rows, precision: int = 2) -> str:
    head = "c_M = c_P".ljust(10) + "".join(f"{c:>12g}" for c, _ in rows)
    lhs = "LHS".ljust(10) + "".join(f"{r.lhs:>12.{precision}f}" for _, r in rows)
    rhs = "RHS".ljust(10) + "".join(f"{r.rhs:>12.{precision}f}" for _, r in rows)
    return "\n".join([head, lhs, rhs])
