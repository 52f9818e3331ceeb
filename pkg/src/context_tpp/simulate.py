"""Synthetic strategy-method datasets from logit-choosing third parties.

The choice model picks one option, but subjects split a 50-token budget, so
a rule is needed to turn probabilities into allocations:

* ``expected``    -- 50 * Pr rounded by largest remainder (ties: S, I, TP)
* ``multinomial`` -- 50 independent single-token draws from Pr
* ``argmax``      -- all 50 tokens on the most likely option (ties: S, I, TP)

Randomness: numpy PCG64 generators seeded with
``SeedSequence(master_seed, spawn_key=(agent_index, purpose))``, purpose 0 for
parameter draws and 1 for token draws. Each agent's rows depend only on its
own stream, so results do not depend on how agents are split across workers.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import __version__
from .game import ENDOWMENT_C, TRANSFER_LEVELS, TREATMENTS, Treatment, get_treatment
from .nccm import (
    FAIR_TRANSFER, Context, NccmParams, ScheduleConfig, build_partworth_schedule,
    context_probabilities,
)
from .risk import classify_risk, crra_choices

PRNG_NAME = "numpy.random.PCG64"
STREAM_SPLIT = "SeedSequence(entropy=master_seed, spawn_key=(agent_index, purpose)); purpose 0=parameters, 1=allocations"
PURPOSE_PARAMS = 0
PURPOSE_TOKENS = 1

# tie-break preference, most preferred first
TIE_ORDER = ("S", "I", "TP")

CSV_COLUMNS = (
    "agent_id", "treatment", "transfer", "deduction", "investment", "safe",
    "punisher", "investor", "risk_class", "seed",
)


class AllocationRule(enum.Enum):
    EXPECTED_SHARE = "expected"
    MULTINOMIAL_TOKENS = "multinomial"
    ARGMAX_ALL_IN = "argmax"


def agent_generator(master_seed: int, index: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index, purpose))
    return np.random.Generator(np.random.PCG64(ss))


Dist = Union[float, Sequence[float]]


def _draw(spec: Dist, rng: np.random.Generator) -> float:
    if isinstance(spec, (int, float)):
        return float(spec)
    lo, hi = spec
    return float(rng.uniform(lo, hi))


@dataclass(frozen=True)
class PopulationSpec:
    """Agent population.

    Each of ``c_m``, ``c_p``, ``b`` and ``crra`` is a point mass (a number) or
    a uniform range ``(lo, hi)``. ``crra`` is the agent's CRRA coefficient; it
    only determines the risk class annotation through the lottery task.
    """

    n: int
    master_seed: int
    c_m: Dist = 0.35
    c_p: Dist = 0.35
    b: Dist = 0.05
    crra: Dist = 0.0
    schedule: ScheduleConfig = field(default_factory=lambda: ScheduleConfig(extrapolate_fair=True))

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"population size must be a positive integer, got {self.n!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        bounds = {"c_m": (0, 1), "c_p": (0, 1), "b": (0, math.inf), "crra": (-10, 10)}
        for name, (lo, hi) in bounds.items():
            v = getattr(self, name)
            vals = [v] if isinstance(v, (int, float)) else list(v)
            if len(vals) not in (1, 2):
                raise ValueError(f"{name}: expected a number or (lo, hi), got {v!r}")
            if len(vals) == 2 and vals[0] > vals[1]:
                raise ValueError(f"{name}: lower bound {vals[0]} above upper bound {vals[1]}")
            for x in vals:
                if not lo < x < hi and not (name == "crra" and lo <= x <= hi):
                    raise ValueError(f"{name}: {x} outside parameter domain ({lo}, {hi})")

    def to_dict(self):
        d = asdict(self)
        d["schedule"] = asdict(self.schedule)
        return d


@dataclass(frozen=True)
class AgentProfile:
    id: int
    nccm: NccmParams
    schedule: ScheduleConfig
    risk_class: str
    master_seed: int

    @property
    def stream(self) -> tuple[int, int]:
        return (self.master_seed, self.id)


def sample_population(spec: PopulationSpec) -> list[AgentProfile]:
    agents = []
    for i in range(spec.n):
        rng = agent_generator(spec.master_seed, i, PURPOSE_PARAMS)
        params = NccmParams(_draw(spec.c_m, rng), _draw(spec.c_p, rng), _draw(spec.b, rng))
        risk = classify_risk(crra_choices(_draw(spec.crra, rng))).label
        agents.append(AgentProfile(i, params, spec.schedule, risk, spec.master_seed))
    return agents


# --- allocation rules --------------------------------------------------------

def largest_remainder(probs: Mapping[str, float], total: int = ENDOWMENT_C) -> dict[str, int]:
    quotas = {k: total * v for k, v in probs.items()}
    alloc = {k: int(math.floor(q)) for k, q in quotas.items()}
    left = total - sum(alloc.values())
    order = sorted(quotas, key=lambda k: (-(quotas[k] - alloc[k]), TIE_ORDER.index(k)))
    for k in order[:left]:
        alloc[k] += 1
    return alloc


def argmax_all_in(probs: Mapping[str, float], total: int = ENDOWMENT_C) -> dict[str, int]:
    best = max(probs.values())
    winner = next(k for k in TIE_ORDER if k in probs and math.isclose(probs[k], best, rel_tol=1e-12))
    return {k: (total if k == winner else 0) for k in probs}


def multinomial_tokens(probs: Mapping[str, float], rng: np.random.Generator,
                       total: int = ENDOWMENT_C) -> dict[str, int]:
    keys = list(probs)
    pv = np.array([probs[k] for k in keys])
    counts = rng.multinomial(total, pv / pv.sum())
    return dict(zip(keys, (int(c) for c in counts)))


def allocate(probs, rule: AllocationRule, rng: Optional[np.random.Generator] = None):
    if rule is AllocationRule.EXPECTED_SHARE:
        return largest_remainder(probs)
    if rule is AllocationRule.ARGMAX_ALL_IN:
        return argmax_all_in(probs)
    if rng is None:
        raise ValueError("multinomial allocation needs a seeded generator")
    return multinomial_tokens(probs, rng)


# --- datasets ----------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    agent_id: int
    treatment: str
    transfer: int
    deduction: int
    investment: int
    safe: int
    risk_class: str = ""
    seed: Optional[int] = None

    @property
    def punisher(self) -> bool:
        return self.deduction >= 1

    @property
    def investor(self) -> bool:
        return self.investment >= 1


class SchemaError(ValueError):
    pass


@dataclass
class ChoiceDataset:
    rows: list[Row]

    def validate(self):
        per_cell: dict[tuple, list[int]] = {}
        for r in self.rows:
            if r.deduction < 0 or r.investment < 0 or r.safe < 0:
                raise SchemaError(f"negative tokens in row {r}")
            if r.deduction + r.investment + r.safe != ENDOWMENT_C:
                raise SchemaError(f"tokens do not sum to {ENDOWMENT_C} in row {r}")
            tr = get_treatment(r.treatment)
            if r.deduction and not tr.punishment_available:
                raise SchemaError(f"deduction in {r.treatment} for agent {r.agent_id}")
            if r.investment and not tr.investment_available:
                raise SchemaError(f"investment in {r.treatment} for agent {r.agent_id}")
            per_cell.setdefault((r.agent_id, r.treatment), []).append(r.transfer)
        for (aid, tid), ts in per_cell.items():
            if sorted(ts) != list(TRANSFER_LEVELS):
                raise SchemaError(
                    f"agent {aid} in {tid}: transfers {sorted(ts)} != {list(TRANSFER_LEVELS)}"
                )
        return self

    def treatments(self) -> list[str]:
        return sorted({r.treatment for r in self.rows})

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.agent_id, r.treatment, r.transfer, r.deduction, r.investment, r.safe,
                int(r.punisher), int(r.investor), r.risk_class,
                "" if r.seed is None else r.seed,
            ])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ChoiceDataset":
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise SchemaError("empty CSV")
        missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                row = Row(
                    agent_id=int(rec["agent_id"]),
                    treatment=get_treatment(rec["treatment"]).id,
                    transfer=int(rec["transfer"]),
                    deduction=int(rec["deduction"]),
                    investment=int(rec["investment"]),
                    safe=int(rec["safe"]),
                    risk_class=rec["risk_class"] or "",
                    seed=int(rec["seed"]) if rec["seed"] else None,
                )
            except (ValueError, KeyError) as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
            for flag, attr in (("punisher", "punisher"), ("investor", "investor")):
                if rec[flag] not in ("0", "1") or bool(int(rec[flag])) != getattr(row, attr):
                    raise SchemaError(f"line {lineno}: field '{flag}'={rec[flag]!r} inconsistent")
            rows.append(row)
        return cls(rows).validate()


def _simulate_agent(args) -> list[Row]:
    agent, treatment_ids, rule = args
    schedule = build_partworth_schedule(agent.schedule)
    rng = agent_generator(agent.master_seed, agent.id, PURPOSE_TOKENS)
    rows = []
    for tid in treatment_ids:
        tr = TREATMENTS[tid]
        for t in TRANSFER_LEVELS:
            if t == FAIR_TRANSFER and t not in schedule:
                alloc = {"S": ENDOWMENT_C}
            else:
                probs = context_probabilities(Context(tr, t, allow_fair=True), schedule, agent.nccm)
                alloc = allocate(probs, rule, rng)
            rows.append(Row(
                agent.id, tid, t,
                alloc.get("TP", 0), alloc.get("I", 0), alloc.get("S", 0),
                agent.risk_class, agent.master_seed,
            ))
    return rows


def simulate_dataset(
    agents: Sequence[AgentProfile],
    treatments: Sequence[Union[str, Treatment]],
    rule: AllocationRule = AllocationRule.MULTINOMIAL_TOKENS,
    workers: int = 1,
    design: str = "within",
) -> ChoiceDataset:
    """Six strategy-method rows per agent and treatment.

    ``design="within"`` runs every agent through every treatment;
    ``"between"`` assigns agent ``i`` to ``treatments[i % len(treatments)]``.

    When the agents' schedule does not extrapolate to the fair transfer
    (t = 50), those rows keep all tokens in the safe account.
    Rows are ordered by agent id, then treatment (as given), then transfer.
    """
    tids = []
    for tr in treatments:
        tid = tr.id if isinstance(tr, Treatment) else get_treatment(tr).id
        if tid not in TREATMENTS:
            raise ValueError(f"unavailable treatment {tid!r}")
        tids.append(tid)
    if design not in ("within", "between"):
        raise ValueError(f"design must be 'within' or 'between', got {design!r}")
    ordered = sorted(agents, key=lambda a: a.id)
    if design == "within":
        jobs = [(a, tuple(tids), rule) for a in ordered]
    else:
        jobs = [(a, (tids[a.id % len(tids)],), rule) for a in ordered]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_simulate_agent, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        chunks = [_simulate_agent(j) for j in jobs]
    return ChoiceDataset([r for chunk in chunks for r in chunk])


def manifest(spec: PopulationSpec, rule: AllocationRule, treatments: Sequence[str],
             design: str = "within", timestamp: Optional[str] = None) -> dict:
    out = {
        "spec": spec.to_dict(),
        "seed": spec.master_seed,
        "rule": rule.value,
        "treatments": list(treatments),
        "design": design,
        "prng": PRNG_NAME,
        "stream_split": STREAM_SPLIT,
        "code_version": __version__,
    }
    if timestamp is not None:
        out["timestamp"] = timestamp
    return out


# --- per-agent measures --------------------------------------------------------

@dataclass
class AgentSummary:
    agent_id: int
    treatment: str
    risk_class: str
    mean_punishment: float
    median_punishment: float
    mean_investment: float
    median_investment: float
    mean_safe: float
    median_safe: float
    punisher_by_t: dict[int, bool]
    investor_by_t: dict[int, bool]

    def value(self, measure: str) -> float:
        return getattr(self, measure)


def derive_measures(dataset: ChoiceDataset) -> list[AgentSummary]:
    """Individual-level means and medians across the six transfer levels."""
    dataset.validate()
    cells: dict[tuple[int, str], list[Row]] = {}
    for r in dataset.rows:
        cells.setdefault((r.agent_id, r.treatment), []).append(r)
    out = []
    for (aid, tid), rows in sorted(cells.items()):
        rows = sorted(rows, key=lambda r: r.transfer)
        ded = [r.deduction for r in rows]
        inv = [r.investment for r in rows]
        safe = [r.safe for r in rows]
        out.append(AgentSummary(
            aid, tid, rows[0].risk_class,
            statistics.fmean(ded), statistics.median(ded),
            statistics.fmean(inv), statistics.median(inv),
            statistics.fmean(safe), statistics.median(safe),
            {r.transfer: r.punisher for r in rows},
            {r.transfer: r.investor for r in rows},
        ))
    return out
