"""Ground-truth matching and the scalar reward over completion outcomes.

Reward is additive over three binary indicators: code was present, it
executed error-free, and the answer matched the ground truth. Default
weights (0.1, 0.2, 1.0) give the strict ordering
correct > wrong > error > no-code that a group-relative learning signal
needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Optional, Sequence

from .extraction import Outcome
from .values import IntVal, RatVal, RealVal, StrVal, Value, as_fraction, as_float, is_exact

DEFAULT_REL_TOL = 1e-6

# answer_type values accepted in dataset and wire formats
OPTION = "option"
EXACT = "exact"
APPROX = "approx"
TEXT = "text"

_OPTION_LETTERS = frozenset("ABCDE")


@dataclass(frozen=True)
class GroundTruth:
    kind: str  # option | exact | approx | text
    option: Optional[str] = None
    number: Optional[Fraction] = None
    approx: Optional[float] = None
    rel_tol: float = DEFAULT_REL_TOL
    text: Optional[str] = None

    @staticmethod
    def from_option(letter: str) -> "GroundTruth":
        letter = letter.strip().upper()
        if letter not in _OPTION_LETTERS:
            raise ValueError(f"option must be a single letter A-E, got {letter!r}")
        return GroundTruth(OPTION, option=letter)

    @staticmethod
    def from_exact(number) -> "GroundTruth":
        return GroundTruth(EXACT, number=Fraction(number))

    @staticmethod
    def from_approx(value: float, rel_tol: float = DEFAULT_REL_TOL) -> "GroundTruth":
        if rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        return GroundTruth(APPROX, approx=float(value), rel_tol=rel_tol)

    @staticmethod
    def from_text(text: str) -> "GroundTruth":
        return GroundTruth(TEXT, text=text)

    @staticmethod
    def parse(answer_type: str, answer: str, rel_tol: Optional[float] = None) -> "GroundTruth":
        """Build from the serialized (answer_type, answer) pair used by
        dataset files and score requests."""
        if answer_type == OPTION:
            return GroundTruth.from_option(answer)
        if answer_type == EXACT:
            return GroundTruth.from_exact(Fraction(answer.strip()))
        if answer_type == APPROX:
            return GroundTruth.from_approx(float(answer), rel_tol if rel_tol is not None else DEFAULT_REL_TOL)
        if answer_type == TEXT:
            return GroundTruth.from_text(answer)
        raise ValueError(f"unknown answer_type {answer_type!r}")


@dataclass(frozen=True)
class RewardConfig:
    w_correct: float = 1.0
    w_error_free: float = 0.2
    w_has_code: float = 0.1

    def __post_init__(self):
        if self.w_correct < 0 or self.w_error_free < 0 or self.w_has_code < 0:
            raise ValueError("reward weights must be nonnegative")
        if self.w_correct + self.w_error_free + self.w_has_code == 0:
            raise ValueError("at least one reward weight must be positive")

    @property
    def max_reward(self) -> float:
        return self.w_correct + self.w_error_free + self.w_has_code


def reward_config_from_file(path) -> RewardConfig:
    """Load weights from a JSON file with any of w_correct, w_error_free,
    w_has_code; missing keys keep their defaults."""
    import json
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    allowed = {"w_correct", "w_error_free", "w_has_code"}
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"unknown reward config keys: {sorted(unknown)}")
    return RewardConfig(**obj)


def match_answer(answer: Value, truth: GroundTruth) -> bool:
    """Compare a ground engine answer against the ground truth. A numeric
    answer never matches an option letter: the program itself must do the
    option mapping."""
    if truth.kind == OPTION:
        return isinstance(answer, StrVal) and answer.value.strip().upper() == truth.option
    if truth.kind == EXACT:
        if isinstance(answer, (IntVal, RatVal)):
            return as_fraction(answer) == truth.number
        if isinstance(answer, RealVal):
            return Fraction(answer.value) == truth.number
        return False
    if truth.kind == APPROX:
        if not isinstance(answer, (IntVal, RatVal, RealVal)):
            return False
        a = as_float(answer)
        t = truth.approx
        return abs(a - t) <= truth.rel_tol * max(1.0, abs(t))
    if truth.kind == TEXT:
        return isinstance(answer, StrVal) and answer.value.strip().casefold() == truth.text.strip().casefold()
    raise ValueError(f"unknown ground truth kind {truth.kind!r}")


def compute_reward(outcome: Outcome, truth: GroundTruth, config: RewardConfig = RewardConfig()) -> float:
    reward = 0.0
    if outcome.has_code:
        reward += config.w_has_code
    if outcome.error_free:
        reward += config.w_error_free
        if outcome.answer is not None and match_answer(outcome.answer, truth):
            reward += config.w_correct
    return reward


def is_correct(outcome: Outcome, truth: GroundTruth) -> bool:
    return outcome.error_free and outcome.answer is not None and match_answer(outcome.answer, truth)


def round_pct(x: float) -> float:
    """Two decimal places, half-up, matching reported percentages."""
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def corpus_accuracy(outcomes: Sequence[Outcome], truths: Sequence[GroundTruth]) -> float:
    if len(outcomes) != len(truths):
        raise ValueError("outcomes and truths must have equal length")
    if not outcomes:
        raise ValueError("empty corpus")
    correct = sum(1 for o, t in zip(outcomes, truths) if is_correct(o, t))
    return round_pct(100.0 * correct / len(outcomes))
