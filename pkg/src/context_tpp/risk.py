"""Holt-Laury style ten-question lottery task and CRRA classification."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from scipy.optimize import bisect

L_HIGH, L_LOW = 3750, 3550
R_HIGH, R_LOW = 8000, 100
N_QUESTIONS = 10
NEUTRAL_SWITCH = 5

CRRA_BRACKET = (-10.0, 10.0)
CRRA_TOL = 1e-6
# below this distance from r = 1 the log branch is used
_LOG_BRANCH_EPS = 1e-12


@dataclass(frozen=True)
class LotteryPair:
    question: int

    @property
    def p_high(self) -> Fraction:
        return Fraction(self.question, N_QUESTIONS)

    @property
    def left(self):
        return ((L_HIGH, self.p_high), (L_LOW, 1 - self.p_high))

    @property
    def right(self):
        return ((R_HIGH, self.p_high), (R_LOW, 1 - self.p_high))


TABLE = tuple(LotteryPair(q) for q in range(1, N_QUESTIONS + 1))


@dataclass(frozen=True)
class RiskClass:
    label: str  # Neutral | Averse | Loving | Inconsistent
    switch_point: Optional[int] = None


@dataclass(frozen=True)
class CrraInterval:
    lo: float
    hi: float

    def __contains__(self, r: float) -> bool:
        return self.lo < r < self.hi


def _check_question(q: int):
    if not isinstance(q, int) or not 1 <= q <= N_QUESTIONS:
        raise ValueError(f"question must be an integer in 1..{N_QUESTIONS}, got {q!r}")


def _expected_value(lottery) -> Fraction:
    return sum(Fraction(x) * p for x, p in lottery)


def lottery_ev_gap(question: int) -> int:
    """E(L) - E(R) in KRW for the given question."""
    _check_question(question)
    pair = TABLE[question - 1]
    gap = _expected_value(pair.left) - _expected_value(pair.right)
    assert gap.denominator == 1
    return int(gap)


def classify_risk(choices: Sequence[str] | str) -> RiskClass:
    """Classify a 10-choice L/R sequence.

    Consistent subjects choose L for a prefix and R afterwards; the switch
    point is the first question answered R. Any return from R to L, or an L
    on the last question (where R dominates), is Inconsistent.
    """
    seq = [str(c).upper() for c in choices]
    if len(seq) != N_QUESTIONS or any(c not in ("L", "R") for c in seq):
        raise ValueError(f"expected {N_QUESTIONS} choices of 'L'/'R', got {choices!r}")
    if seq[-1] == "L" or "RL" in "".join(seq):
        return RiskClass("Inconsistent")
    k = seq.index("R") + 1
    if k == NEUTRAL_SWITCH:
        label = "Neutral"
    elif k > NEUTRAL_SWITCH:
        label = "Averse"
    else:
        label = "Loving"
    return RiskClass(label, k)


def crra_utility(w: float, r: float) -> float:
    if abs(r - 1.0) < _LOG_BRANCH_EPS:
        return math.log(w)
    return w ** (1.0 - r) / (1.0 - r)


def indifference(r: float, question: int) -> float:
    """EU(L) - EU(R) under CRRA coefficient ``r`` at ``question``'s odds.

    Payoffs are rescaled by the smallest prize so magnitudes stay tame over
    the whole bracket; CRRA preferences are scale invariant so the sign, and
    hence every root, is unaffected.
    """
    q = question / N_QUESTIONS
    s = R_LOW

    def eu(hi, lo):
        return q * crra_utility(hi / s, r) + (1 - q) * crra_utility(lo / s, r)

    return eu(L_HIGH, L_LOW) - eu(R_HIGH, R_LOW)


@lru_cache(maxsize=None)
def _indifference_root(question: int) -> float:
    lo, hi = CRRA_BRACKET
    f_lo, f_hi = indifference(lo, question), indifference(hi, question)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        # no indifference point inside the bracket: R (f<0) everywhere means
        # no finite r prefers L, L everywhere means no finite r prefers R
        return math.inf if f_hi < 0 else -math.inf
    return bisect(indifference, lo, hi, args=(question,), xtol=CRRA_TOL)


def crra_interval(switch_point: int) -> CrraInterval:
    """Range of CRRA coefficients consistent with switching at ``switch_point``.

    At the upper bound the subject is indifferent at the switch question; at
    the lower bound, at the question before it.
    """
    _check_question(switch_point)
    hi = _indifference_root(switch_point)
    lo = -math.inf if switch_point == 1 else _indifference_root(switch_point - 1)
    return CrraInterval(lo, hi)


def crra_choices(r: float) -> str:
    """Choice vector of an expected-utility maximizer with CRRA coefficient r.

    Ties go to L.
    """
    return "".join("L" if indifference(r, q) >= 0 else "R" for q in range(1, N_QUESTIONS + 1))


def ev_choices() -> str:
    """Choice vector of a risk-neutral expected-value maximizer (exact)."""
    return "".join("L" if lottery_ev_gap(q) >= 0 else "R" for q in range(1, N_QUESTIONS + 1))


def table_csv() -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["question", "pL_high", "L_high", "L_low", "R_high", "R_low", "ev_gap"])
    for pair in TABLE:
        w.writerow([
            pair.question, str(pair.p_high), L_HIGH, L_LOW, R_HIGH, R_LOW,
            lottery_ev_gap(pair.question),
        ])
    return out.getvalue()
