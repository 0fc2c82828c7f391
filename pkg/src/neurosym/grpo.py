"""Group-relative policy optimization on a tabular toy policy.

The policy emits mini-language program fragments; completions are scored
by the real extraction -> engine -> reward pipeline, so the training loop
exercises the genuine reward path end to end. Rewards are normalized
within each sampled group: uniform rewards give identically zero
advantages and therefore a bit-identical zero update.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .extraction import CompletionRecord, classify_completion
from .scoring import GroundTruth, RewardConfig, compute_reward


# --------------------------------------------------------------------------
# Advantages and the clipped objective
# --------------------------------------------------------------------------

def group_advantages(rewards: Sequence[float], advantage_epsilon: float = 1e-8) -> list[float]:
    """Group-normalized advantages (r - mean) / (population std + eps).
    A uniform group yields exactly zero advantages."""
    if len(rewards) < 2:
        raise ValueError("a group needs at least 2 rewards")
    r = np.asarray(rewards, dtype=np.float64)
    if np.all(r == r[0]):
        return [0.0] * len(rewards)
    mean = r.mean()
    std = r.std()  # population (1/N) estimator
    return list((r - mean) / (std + advantage_epsilon))


def clipped_surrogate(ratio: float, advantage: float, clip_epsilon: float = 0.2) -> float:
    """min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)."""
    if ratio <= 0:
        raise ValueError("probability ratio must be positive")
    clipped = min(max(ratio, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
    return min(ratio * advantage, clipped * advantage)


# --------------------------------------------------------------------------
# Toy tasks and policy
# --------------------------------------------------------------------------

# Shared fragment vocabulary: position 0 should open the tag, position 1
# pick a body that also closes it. Wrong picks produce the full failure
# taxonomy: no code, syntax error, runtime error, executed-but-wrong.
ACTIONS: tuple[str, ...] = (
    "<neurosymtag>f := Module[{}, ",
    "The answer is probably 7.",
    "Length[{1,2,3}]];</neurosymtag>",
    "Total[{1,2,3}]];</neurosymtag>",
    "2+2];</neurosymtag>",
    "10/4];</neurosymtag>",
    "Count[{1,1,2}, 1]];</neurosymtag>",
    "1/0];</neurosymtag>",
    "oops[];</neurosymtag>",
    "];</neurosymtag>",
)

N_POSITIONS = 2


@dataclass(frozen=True)
class ToyTask:
    task_id: str
    truth: GroundTruth


def default_toy_tasks() -> list[ToyTask]:
    return [
        ToyTask("count-elements", GroundTruth.from_exact(3)),
        ToyTask("sum-list", GroundTruth.from_exact(6)),
        ToyTask("add", GroundTruth.from_exact(4)),
        ToyTask("exact-quotient", GroundTruth.from_exact("5/2")),
        ToyTask("count-matches", GroundTruth.from_exact(2)),
    ]


@dataclass
class TrainConfig:
    group_size: int = 10
    epochs: int = 10
    learning_rate: float = 1.5
    clip_epsilon: float = 0.2
    kl_coefficient: float = 0.0
    advantage_epsilon: float = 1e-8
    seed: int = 1

    def __post_init__(self):
        if self.group_size < 2 or self.epochs < 1:
            raise ValueError("group_size >= 2 and epochs >= 1 required")
        if self.learning_rate < 0 or self.clip_epsilon <= 0 or self.kl_coefficient < 0:
            raise ValueError("bad optimizer configuration")
        if self.advantage_epsilon <= 0:
            raise ValueError("advantage_epsilon must be positive")


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class ToyPolicy:
    """Independent softmax over the fragment vocabulary at each position,
    one logit table per task."""

    def __init__(self, n_tasks: int, n_positions: int = N_POSITIONS, n_actions: int = len(ACTIONS)):
        self.params = np.zeros((n_tasks, n_positions, n_actions), dtype=np.float64)

    def sample(self, rng: np.random.Generator, task_index: int, group_size: int) -> np.ndarray:
        probs = _softmax(self.params[task_index])
        out = np.empty((group_size, probs.shape[0]), dtype=np.int64)
        for pos in range(probs.shape[0]):
            out[:, pos] = rng.choice(probs.shape[1], size=group_size, p=probs[pos])
        return out

    def log_prob(self, task_index: int, actions: np.ndarray) -> float:
        logp = _log_softmax(self.params[task_index])
        return float(sum(logp[pos, a] for pos, a in enumerate(actions)))


def completion_text(actions: Sequence[int]) -> str:
    return "".join(ACTIONS[a] for a in actions)


# --------------------------------------------------------------------------
# Clipped surrogate objective over a batch of sampled trajectories
# --------------------------------------------------------------------------

def surrogate_objective(logits: np.ndarray, actions: np.ndarray, advantages: np.ndarray,
                        old_logps: np.ndarray, clip_epsilon: float,
                        kl_coefficient: float = 0.0,
                        ref_logits: Optional[np.ndarray] = None) -> tuple[float, np.ndarray]:
    """Mean clipped surrogate over a group for one task, with optional KL
    penalty against a reference policy. Returns (objective, d/d logits)."""
    n_samples = actions.shape[0]
    logp_table = _log_softmax(logits)
    probs = _softmax(logits)
    grad = np.zeros_like(logits)
    total = 0.0
    for g in range(n_samples):
        logp = sum(logp_table[pos, a] for pos, a in enumerate(actions[g]))
        ratio = float(np.exp(logp - old_logps[g]))
        adv = float(advantages[g])
        clipped_ratio = min(max(ratio, 1.0 - clip_epsilon), 1.0 + clip_epsilon)
        unclipped = ratio * adv
        clipped = clipped_ratio * adv
        total += min(unclipped, clipped)
        # d/dlogits of ratio*adv is ratio*adv*dlogp; the clipped branch has
        # zero gradient when the ratio sits outside the clip interval.
        if unclipped <= clipped or clipped_ratio == ratio:
            coeff = ratio * adv
            for pos, a in enumerate(actions[g]):
                grad[pos, a] += coeff / n_samples
                grad[pos] -= coeff * probs[pos] / n_samples
    objective = total / n_samples
    if kl_coefficient > 0.0 and ref_logits is not None:
        ref_logp = _log_softmax(ref_logits)
        diff = logp_table - ref_logp
        kl_per_pos = (probs * diff).sum(axis=-1, keepdims=True)
        objective -= kl_coefficient * float(kl_per_pos.sum())
        grad -= kl_coefficient * probs * (diff - kl_per_pos)
    return objective, grad


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_reward: float  # exact expectation under the epoch's sampling policy
    std_reward: float


@dataclass
class TrainingHistory:
    epochs: list[EpochStats] = field(default_factory=list)
    initial_params: Optional[np.ndarray] = None
    final_params: Optional[np.ndarray] = None
    max_achievable: float = 0.0

    def mean_rewards(self) -> list[float]:
        return [e.mean_reward for e in self.epochs]

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.epochs:
                fh.write(json.dumps({"epoch": e.epoch, "mean_reward": e.mean_reward,
                                     "std_reward": e.std_reward}) + "\n")


class _RewardCache:
    """Reward per (task, action tuple), scored through the real pipeline."""

    def __init__(self, tasks: Sequence[ToyTask], reward_config: RewardConfig):
        self.tasks = tasks
        self.reward_config = reward_config
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def reward(self, task_index: int, actions: Sequence[int]) -> float:
        key = (task_index, tuple(int(a) for a in actions))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        text = completion_text(key[1])
        record = CompletionRecord(id="toy", prompt_id=self.tasks[task_index].task_id,
                                  completion_text=text)
        outcome = classify_completion(record)
        value = compute_reward(outcome, self.tasks[task_index].truth, self.reward_config)
        self._cache[key] = value
        return value

    def moments(self, params: np.ndarray) -> tuple[float, float]:
        """Exact mean and population std of the reward distribution under
        the policy, averaged over tasks (full action-space enumeration)."""
        n_tasks, n_positions, n_actions = params.shape
        means, second = [], []
        combos = np.indices((n_actions,) * n_positions).reshape(n_positions, -1).T
        for ti in range(n_tasks):
            probs = _softmax(params[ti])
            m = s2 = 0.0
            for combo in combos:
                p = float(np.prod([probs[pos, a] for pos, a in enumerate(combo)]))
                r = self.reward(ti, combo)
                m += p * r
                s2 += p * r * r
            means.append(m)
            second.append(s2)
        mean = float(np.mean(means))
        var = max(float(np.mean(second)) - mean * mean, 0.0)
        return mean, var ** 0.5


def train_toy(tasks: Optional[Sequence[ToyTask]] = None,
              config: Optional[TrainConfig] = None,
              reward_config: Optional[RewardConfig] = None) -> TrainingHistory:
    """Run the sample -> score -> normalize -> update loop. Reproducible
    bit-for-bit from the seed; uniform rewards leave the parameters
    untouched."""
    tasks = list(tasks) if tasks is not None else default_toy_tasks()
    config = config if config is not None else TrainConfig()
    reward_config = reward_config if reward_config is not None else RewardConfig()

    rng = np.random.default_rng(config.seed)
    policy = ToyPolicy(len(tasks))
    cache = _RewardCache(tasks, reward_config)
    history = TrainingHistory(initial_params=policy.params.copy(),
                              max_achievable=reward_config.max_reward)
    ref_params = policy.params.copy()

    for epoch in range(config.epochs):
        # Exact reward statistics under the policy the groups are sampled
        # from; the tiny action space makes full enumeration cheap and the
        # recorded curve noise-free.
        mean_r, std_r = cache.moments(policy.params)
        history.epochs.append(EpochStats(epoch, mean_r, std_r))
        grad = np.zeros_like(policy.params)
        for ti in range(len(tasks)):
            actions = policy.sample(rng, ti, config.group_size)
            rewards = [cache.reward(ti, actions[g]) for g in range(config.group_size)]
            advantages = np.asarray(group_advantages(rewards, config.advantage_epsilon))
            old_logps = np.asarray([policy.log_prob(ti, actions[g]) for g in range(config.group_size)])
            _, g_task = surrogate_objective(
                policy.params[ti], actions, advantages, old_logps,
                config.clip_epsilon, config.kl_coefficient, ref_params[ti])
            grad[ti] = g_task
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite policy gradient")
        policy.params += config.learning_rate * grad

    history.final_params = policy.params.copy()
    return history


def expected_reward(params: np.ndarray, tasks: Sequence[ToyTask],
                    reward_config: Optional[RewardConfig] = None) -> float:
    """Exact expected reward under the policy, averaged over tasks."""
    reward_config = reward_config if reward_config is not None else RewardConfig()
    cache = _RewardCache(list(tasks), reward_config)
    mean, _ = cache.moments(params)
    return mean


# --------------------------------------------------------------------------
# LoRA parameter accounting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LoraShape:
    # (input_dim, output_dim) for every adapted projection matrix.
    projections: tuple[tuple[int, int], ...]
    rank: int

    def __post_init__(self):
        if self.rank < 0 or any(i <= 0 or o <= 0 for i, o in self.projections):
            raise ValueError("dimensions must be positive and rank nonnegative")


def lora_param_count(shape: LoraShape) -> int:
    """Trainable adapter parameters: 2 * rank * (d_in + d_out) per adapted
    projection (this accounting reproduces the published 6.4M figure for
    the base model at rank 8)."""
    return sum(2 * shape.rank * (i + o) for i, o in shape.projections)


def lora_fraction(count: int, total_params: int) -> float:
    return 100.0 * count / total_params


# Base-model attention geometry (2B-class VLM text tower): 28 layers,
# hidden 2048, 16 query heads and 8 KV heads of dim 128, adapters on
# q/k/v/o projections at rank 8.
BASE_MODEL_TOTAL_PARAMS = 2_100_000_000


def base_model_lora_shape(rank: int = 8, layers: int = 28, hidden: int = 2048,
                          q_heads: int = 16, kv_heads: int = 8, head_dim: int = 128) -> LoraShape:
    q_out = q_heads * head_dim
    kv_out = kv_heads * head_dim
    per_layer = [(hidden, q_out), (hidden, kv_out), (hidden, kv_out), (q_out, hidden)]
    return LoraShape(tuple(per_layer * layers), rank)
