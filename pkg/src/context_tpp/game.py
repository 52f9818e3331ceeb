"""Three-player dictator game with a third party who can punish and/or invest.

Player A (dictator) starts with 100 tokens, Player B with 0, Player C (third
party) with 50. A transfers ``t`` tokens to B. C may spend tokens on deduction
points (each costs 1 token and removes 3 from A) and, depending on the
treatment, on a risky investment that pays ``multiplier * z`` with
probability one half. Whatever C does not spend stays in the safe account.

Token amounts are integers. Ex-ante values are returned as ``Fraction`` so
conservation checks are exact.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

ENDOWMENT_A = 100
ENDOWMENT_B = 0
ENDOWMENT_C = 50
DEDUCTION_LEVERAGE = 3
TRANSFER_LEVELS = (0, 10, 20, 30, 40, 50)
KRW_PER_TOKEN = 80
SHOWUP_FEE_KRW = 3000


@dataclass(frozen=True)
class Treatment:
    id: str
    punishment_available: bool
    investment_available: bool
    return_multiplier: Optional[Fraction] = None
    win_probability: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.investment_available != (self.return_multiplier is not None):
            raise ValueError(
                f"{self.id}: return_multiplier must be set iff investment is available"
            )

    @property
    def options(self) -> tuple[str, ...]:
        """Available option kinds in canonical (TP, I, S) order."""
        out = []
        if self.punishment_available:
            out.append("TP")
        if self.investment_available:
            out.append("I")
        out.append("S")
        return tuple(out)

    @property
    def negative_return(self) -> bool:
        return self.investment_available and self.expected_net_return < 0

    @property
    def expected_net_return(self) -> Fraction:
        """Expected net gain per invested token (0 for I0, -1/4 for Ineg)."""
        if not self.investment_available:
            return Fraction(0)
        return self.win_probability * self.return_multiplier - 1


P = Treatment("P", True, False)
PI0 = Treatment("PI0", True, True, Fraction(2))
I0 = Treatment("I0", False, True, Fraction(2))
PINEG = Treatment("PIneg", True, True, Fraction(3, 2))
INEG = Treatment("Ineg", False, True, Fraction(3, 2))

TREATMENTS = {tr.id: tr for tr in (P, PI0, I0, PINEG, INEG)}


def get_treatment(name: str) -> Treatment:
    """Look up a treatment by id. Accepts ``P&I0``-style spellings too."""
    key = name.replace("&", "").strip()
    for tid, tr in TREATMENTS.items():
        if tid.lower() == key.lower():
            return tr
    raise KeyError(f"unknown treatment {name!r}; expected one of {sorted(TREATMENTS)}")


class Outcome(enum.Enum):
    WIN = "win"
    LOSE = "lose"
    NOT_APPLICABLE = "na"


class PayoffVector(NamedTuple):
    a: object
    b: object
    c: object


@dataclass(frozen=True)
class ThirdPartyAction:
    p: int = 0
    z: int = 0


@dataclass(frozen=True)
class Violation:
    kind: str  # "budget" | "unavailable" | "domain"
    message: str


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid


class InvalidAction(ValueError):
    def __init__(self, verdict: Verdict):
        self.verdict = verdict
        super().__init__("; ".join(v.message for v in verdict.violations))


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_action(treatment: Treatment, action: ThirdPartyAction) -> Verdict:
    """Check an allocation against the budget and the treatment's option set.

    Never raises; all problems are collected into the returned verdict.
    """
    problems = []
    for name in ("p", "z"):
        v = getattr(action, name)
        if not _is_int(v):
            problems.append(Violation("domain", f"{name}={v!r} is not an integer"))
        elif v < 0:
            problems.append(Violation("domain", f"{name}={v} is negative"))
    if problems:
        return Verdict(tuple(problems))
    if action.p + action.z > ENDOWMENT_C:
        problems.append(
            Violation(
                "budget",
                f"budget exceeded: p + z = {action.p + action.z} > {ENDOWMENT_C}",
            )
        )
    if action.p > 0 and not treatment.punishment_available:
        problems.append(Violation("unavailable", f"punishment unavailable in {treatment.id}"))
    if action.z > 0 and not treatment.investment_available:
        problems.append(Violation("unavailable", f"investment unavailable in {treatment.id}"))
    return Verdict(tuple(problems))


def _check_transfer(t: int):
    if t not in TRANSFER_LEVELS:
        raise ValueError(f"transfer {t!r} not in {TRANSFER_LEVELS}")


def _require_valid(treatment, action):
    verdict = validate_action(treatment, action)
    if not verdict:
        raise InvalidAction(verdict)


def lottery_outcomes(treatment: Treatment, t, p, z):
    """Ex-ante expected allocation and the ex-post distribution for any (p, z).

    No integrality or budget checks: used by the inequity-aversion oracle,
    which also evaluates real-valued actions. Returns
    ``(ex_ante, [(prob, PayoffVector), ...])``.
    """
    a = ENDOWMENT_A - t - DEDUCTION_LEVERAGE * p
    b = t
    keep = ENDOWMENT_C - p - z
    if z == 0 or not treatment.investment_available:
        alloc = PayoffVector(a, b, ENDOWMENT_C - p)
        return alloc, [(Fraction(1), alloc)]
    q = treatment.win_probability
    win = PayoffVector(a, b, keep + treatment.return_multiplier * z)
    lose = PayoffVector(a, b, keep)
    ex_ante = PayoffVector(a, b, q * win.c + (1 - q) * lose.c)
    return ex_ante, [(q, win), (1 - q, lose)]


def realized_payoffs(
    treatment: Treatment, t: int, action: ThirdPartyAction, outcome: Outcome
) -> PayoffVector:
    _check_transfer(t)
    _require_valid(treatment, action)
    invested = action.z > 0
    if invested == (outcome is Outcome.NOT_APPLICABLE):
        raise ValueError(f"outcome {outcome.value!r} inconsistent with z={action.z}")
    gain = 0
    if outcome is Outcome.WIN:
        gain = treatment.return_multiplier * action.z
        if gain.denominator == 1:
            gain = int(gain)
    a = ENDOWMENT_A - t - DEDUCTION_LEVERAGE * action.p
    c = ENDOWMENT_C - action.p - action.z + gain
    return PayoffVector(a, t, c)


def ex_ante_expected_payoffs(
    treatment: Treatment, t: int, action: ThirdPartyAction
) -> PayoffVector:
    _check_transfer(t)
    _require_valid(treatment, action)
    ex_ante, _ = lottery_outcomes(treatment, t, action.p, action.z)
    return PayoffVector(*(Fraction(v) for v in ex_ante))


def final_cash_krw(task1_krw: int, task2_tokens: int, include_showup: bool = True) -> int:
    """Total cash payment in KRW.

    The instructions' formula includes the 3000 KRW show-up fee; the final
    summary screen shown to subjects does not, hence the flag.
    """
    if task2_tokens < 0:
        raise ValueError(f"task2_tokens must be nonnegative, got {task2_tokens}")
    total = task1_krw + task2_tokens * KRW_PER_TOKEN
    if include_showup:
        total += SHOWUP_FEE_KRW
    return total
