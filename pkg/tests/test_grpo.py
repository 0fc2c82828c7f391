import math
import random

import numpy as np
import pytest

from neurosym.grpo import (
    ACTIONS, BASE_MODEL_TOTAL_PARAMS, LoraShape, N_POSITIONS, ToyPolicy, TrainConfig,
    base_model_lora_shape, clipped_surrogate, completion_text, default_toy_tasks,
    expected_reward, group_advantages, lora_fraction, lora_param_count,
    surrogate_objective, train_toy,
)
from neurosym.scoring import RewardConfig


# ---- advantages ----

def test_advantages_zero_mean_unit_scale():
    adv = group_advantages([1.0, 2.0, 3.0, 4.0, 5.0])
    assert sum(adv) == pytest.approx(0.0, abs=1e-12)
    std = math.sqrt(2.0)
    expected = [(r - 3.0) / (std + 1e-8) for r in [1, 2, 3, 4, 5]]
    for a, e in zip(adv, expected):
        assert abs(a - e) < 1e-12


def test_uniform_rewards_give_exactly_zero_advantages():
    assert group_advantages([0.3] * 10) == [0.0] * 10
    assert group_advantages([0.0, 0.0]) == [0.0, 0.0]


def test_advantages_shift_invariant():
    rng = random.Random(3)
    for _ in range(100):
        group = [rng.uniform(0, 2) for _ in range(rng.randint(2, 12))]
        shift = rng.uniform(-10, 10)
        base = group_advantages(group)
        shifted = group_advantages([g + shift for g in group])
        for a, b in zip(base, shifted):
            assert a == pytest.approx(b, abs=1e-9)


def test_advantages_need_a_group():
    with pytest.raises(ValueError):
        group_advantages([1.0])


# ---- clipped surrogate ----

def test_clipped_surrogate_pessimism():
    # Positive advantage: gains above 1+eps are clipped away.
    assert clipped_surrogate(2.0, 1.0, 0.2) == pytest.approx(1.2)
    # Negative advantage: the unclipped (worse) branch wins.
    assert clipped_surrogate(2.0, -1.0, 0.2) == pytest.approx(-2.0)
    assert clipped_surrogate(1.0, 0.5, 0.2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        clipped_surrogate(0.0, 1.0)


# ---- analytic gradient vs finite differences ----

def _numeric_gradient(fn, logits, step=1e-5):
    grad = np.zeros_like(logits)
    it = np.nditer(logits, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        plus = logits.copy(); plus[idx] += step
        minus = logits.copy(); minus[idx] -= step
        grad[idx] = (fn(plus) - fn(minus)) / (2 * step)
        it.iternext()
    return grad


def test_surrogate_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    for _ in range(20):
        logits = rng.normal(scale=0.5, size=(N_POSITIONS, len(ACTIONS)))
        actions = rng.integers(0, len(ACTIONS), size=(6, N_POSITIONS))
        advantages = rng.normal(size=6)
        old_logps = np.array([
            sum(np.log(np.exp(logits[p] - logits[p].max())
                       / np.exp(logits[p] - logits[p].max()).sum())[a]
                for p, a in enumerate(actions[g]))
            for g in range(6)])
        # Nudge away from the old policy so no sample sits exactly on the
        # clip boundary, where the objective is not differentiable.
        logits = logits + rng.normal(scale=0.01, size=logits.shape)
        _, grad = surrogate_objective(logits, actions, advantages, old_logps, 0.2)
        numeric = _numeric_gradient(
            lambda l: surrogate_objective(l, actions, advantages, old_logps, 0.2)[0],
            logits)
        denom = max(np.abs(numeric).max(), 1e-8)
        assert np.abs(grad - numeric).max() / denom < 1e-4


def test_kl_penalty_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    logits = rng.normal(scale=0.5, size=(N_POSITIONS, len(ACTIONS)))
    ref = rng.normal(scale=0.5, size=(N_POSITIONS, len(ACTIONS)))
    actions = rng.integers(0, len(ACTIONS), size=(4, N_POSITIONS))
    advantages = np.zeros(4)  # isolate the KL term
    old_logps = np.zeros(4)
    _, grad = surrogate_objective(logits, actions, advantages, old_logps, 0.2,
                                  kl_coefficient=0.5, ref_logits=ref)
    numeric = _numeric_gradient(
        lambda l: surrogate_objective(l, actions, advantages, old_logps, 0.2,
                                      kl_coefficient=0.5, ref_logits=ref)[0],
        logits)
    assert np.abs(grad - numeric).max() < 1e-6


# ---- training loop ----

def test_uniform_rewards_leave_params_bit_identical():
    # When every reward in a group is equal the advantages are exactly
    # zero, so ten epochs of updates must leave the parameters untouched
    # bit for bit.
    config = TrainConfig(epochs=10, seed=0)
    tasks = default_toy_tasks()
    policy = ToyPolicy(len(tasks))
    policy.params[:, :, 0] = 1e9  # action 0 with probability ~1
    rng = np.random.default_rng(config.seed)
    before = policy.params.copy()
    for _ in range(10):
        for ti in range(len(tasks)):
            actions = policy.sample(rng, ti, config.group_size)
            rewards = [0.1] * config.group_size  # identical rewards
            adv = np.asarray(group_advantages(rewards))
            old = np.asarray([policy.log_prob(ti, actions[g]) for g in range(config.group_size)])
            _, grad = surrogate_objective(policy.params[ti], actions, adv, old, config.clip_epsilon)
            policy.params[ti] += config.learning_rate * grad
    assert np.array_equal(policy.params, before)


def test_training_is_reproducible():
    h1 = train_toy(config=TrainConfig(epochs=5, seed=9))
    h2 = train_toy(config=TrainConfig(epochs=5, seed=9))
    assert np.array_equal(h1.final_params, h2.final_params)
    assert h1.mean_rewards() == h2.mean_rewards()


def test_training_improves_expected_reward():
    history = train_toy(config=TrainConfig(epochs=30, seed=1))
    rewards = history.mean_rewards()
    assert rewards[-1] > rewards[0]
    assert history.max_achievable == pytest.approx(1.3)


def test_history_written_as_jsonl(tmp_path):
    history = train_toy(config=TrainConfig(epochs=3, seed=2))
    path = tmp_path / "history.jsonl"
    history.write_jsonl(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3


def test_expected_reward_of_uniform_policy():
    tasks = default_toy_tasks()
    params = np.zeros((len(tasks), N_POSITIONS, len(ACTIONS)))
    value = expected_reward(params, tasks)
    assert 0.0 < value < RewardConfig().max_reward


def test_completion_text_concatenates_fragments():
    text = completion_text([0, 4])
    assert text.startswith("<neurosymtag>") and text.endswith("</neurosymtag>")


# ---- adapter accounting ----

def test_lora_count_hand_shape():
    shape = LoraShape(projections=((2048, 2048),) * 4, rank=8)
    assert lora_param_count(shape) == 262_144


def test_lora_count_scales_linearly_in_rank():
    base = LoraShape(projections=((1024, 512),), rank=4)
    doubled = LoraShape(projections=((1024, 512),), rank=8)
    assert lora_param_count(doubled) == 2 * lora_param_count(base)
    assert lora_param_count(LoraShape(projections=((1024, 512),), rank=0)) == 0


def test_lora_shape_validation():
    with pytest.raises(ValueError):
        LoraShape(projections=((0, 10),), rank=2)
    with pytest.raises(ValueError):
        LoraShape(projections=((10, 10),), rank=-1)


def test_base_model_adapter_budget():
    shape = base_model_lora_shape()
    count = lora_param_count(shape)
    assert count == 6_422_528
    assert abs(count - 6.4e6) / 6.4e6 < 0.10
    fraction = lora_fraction(count, BASE_MODEL_TOTAL_PARAMS)
    assert abs(fraction - 0.3) <= 0.05
