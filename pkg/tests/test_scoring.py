import json
from fractions import Fraction

import pytest

from neurosym.extraction import CompletionRecord, classify_completion
from neurosym.scoring import (
    GroundTruth, RewardConfig, compute_reward, corpus_accuracy, is_correct,
    match_answer, reward_config_from_file, round_pct,
)
from neurosym.values import IntVal, ListVal, RatVal, RealVal, StrVal


def outcome_for(text):
    return classify_completion(CompletionRecord(id="t", prompt_id="p", completion_text=text))


# ---- ground truth parsing ----

def test_option_parsing_normalizes():
    assert GroundTruth.parse("option", " c ").option == "C"
    with pytest.raises(ValueError):
        GroundTruth.parse("option", "F")


def test_exact_parsing_accepts_fractions():
    assert GroundTruth.parse("exact", "5/2").number == Fraction(5, 2)
    assert GroundTruth.parse("exact", "-3").number == Fraction(-3)


def test_approx_requires_positive_tolerance():
    with pytest.raises(ValueError):
        GroundTruth.from_approx(1.0, rel_tol=0.0)
    assert GroundTruth.parse("approx", "2.5").rel_tol == 1e-6


def test_unknown_answer_type_rejected():
    with pytest.raises(ValueError):
        GroundTruth.parse("fuzzy", "1")


# ---- matching ----

def test_option_match_is_case_and_space_insensitive():
    truth = GroundTruth.from_option("A")
    assert match_answer(StrVal("a "), truth)
    assert not match_answer(StrVal("B"), truth)


def test_numeric_answer_never_matches_an_option():
    assert not match_answer(IntVal(1), GroundTruth.from_option("A"))


def test_exact_match_requires_exact_equality():
    truth = GroundTruth.from_exact("1/3")
    assert match_answer(RatVal(1, 3), truth)
    assert not match_answer(RealVal(0.3333333333), truth)


def test_exact_integer_matches_int_value():
    assert match_answer(IntVal(4), GroundTruth.from_exact(4))
    assert not match_answer(IntVal(5), GroundTruth.from_exact(4))


def test_approx_match_tolerance_band():
    truth = GroundTruth.from_approx(100.0, rel_tol=1e-3)
    assert match_answer(RealVal(100.05), truth)
    assert not match_answer(RealVal(100.2), truth)


def test_approx_tolerance_floor_near_zero():
    # For small targets the band is absolute: rel_tol * max(1, |t|).
    truth = GroundTruth.from_approx(0.0, rel_tol=1e-6)
    assert match_answer(RealVal(5e-7), truth)
    assert not match_answer(RealVal(1e-3), truth)


def test_text_match_casefolds():
    truth = GroundTruth.from_text("Isosceles")
    assert match_answer(StrVal("  isosceles "), truth)
    assert not match_answer(IntVal(3), truth)


def test_list_answers_do_not_match_scalars():
    assert not match_answer(ListVal((IntVal(4),)), GroundTruth.from_exact(4))


# ---- reward ----

def test_reward_ladder():
    config = RewardConfig()
    truth = GroundTruth.from_exact(4)
    assert compute_reward(outcome_for("no code"), truth, config) == 0.0
    assert compute_reward(outcome_for("<neurosymtag>1 + </neurosymtag>"), truth, config) == pytest.approx(0.1)
    assert compute_reward(outcome_for("<neurosymtag>1/0</neurosymtag>"), truth, config) == pytest.approx(0.1)
    assert compute_reward(outcome_for("<neurosymtag>2 + 3</neurosymtag>"), truth, config) == pytest.approx(0.3)
    assert compute_reward(outcome_for("<neurosymtag>2 + 2</neurosymtag>"), truth, config) == pytest.approx(1.3)


def test_reward_is_monotone_in_outcome_quality():
    truth = GroundTruth.from_exact(4)
    config = RewardConfig()
    ladder = [
        outcome_for("no code"),
        outcome_for("<neurosymtag>broken [</neurosymtag>"),
        outcome_for("<neurosymtag>2 + 3</neurosymtag>"),
        outcome_for("<neurosymtag>2 + 2</neurosymtag>"),
    ]
    rewards = [compute_reward(o, truth, config) for o in ladder]
    assert rewards == sorted(rewards)
    assert all(0.0 <= r <= config.max_reward for r in rewards)


def test_reward_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(w_correct=-1.0)
    with pytest.raises(ValueError):
        RewardConfig(w_correct=0.0, w_error_free=0.0, w_has_code=0.0)
    assert RewardConfig().max_reward == pytest.approx(1.3)


def test_reward_config_from_file(tmp_path):
    path = tmp_path / "weights.json"
    path.write_text(json.dumps({"w_correct": 2.0}), encoding="utf-8")
    config = reward_config_from_file(path)
    assert config.w_correct == 2.0 and config.w_error_free == 0.2
    path.write_text(json.dumps({"w_bogus": 1.0}), encoding="utf-8")
    with pytest.raises(ValueError):
        reward_config_from_file(path)


# ---- aggregation ----

def test_round_pct_half_up():
    assert round_pct(4.215) == 4.22
    assert round_pct(4.224999) == 4.22
    assert round_pct(18.055) == 18.06
    assert round_pct(100.0) == 100.0


def test_corpus_accuracy():
    truth = GroundTruth.from_exact(4)
    outcomes = [outcome_for("<neurosymtag>2 + 2</neurosymtag>"),
                outcome_for("<neurosymtag>2 + 3</neurosymtag>"),
                outcome_for("nothing")]
    assert corpus_accuracy(outcomes, [truth] * 3) == 33.33
    assert is_correct(outcomes[0], truth)
    assert not is_correct(outcomes[1], truth)
    with pytest.raises(ValueError):
        corpus_accuracy([], [])
