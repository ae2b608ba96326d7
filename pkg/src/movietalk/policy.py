"""Response selection policy: discretized dialog states, a tabular Q store,
the value-iteration-style update, epsilon-greedy selection, and the
expert-knowledge reward constraints.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import (
    NONTASK_STRATEGIES,
    TASK_STRATEGIES,
    Conversation,
    DialogError,
    ResponseCandidate,
    Speaker,
    StrategyId,
)
from .reward import RewardWeights
from .understanding import Sentiment, sentiment_of_text


class Variant(str, Enum):
    TASK_GLOBAL = "TaskGlobal"
    MIX_LOCAL = "MixLocal"
    MIX_GLOBAL = "MixGlobal"

    @property
    def actions(self) -> tuple[StrategyId, ...]:
        if self is Variant.TASK_GLOBAL:
            return TASK_STRATEGIES
        return TASK_STRATEGIES + NONTASK_STRATEGIES

    @property
    def history_window(self) -> Optional[int]:
        """Number of most recent turns visible to the featurizer
        (None = all)."""
        return 3 if self is Variant.MIX_LOCAL else None


class EmptyCandidateSet(DialogError):
    """select_action was called with no candidates."""


class QTableVersionError(DialogError):
    """A serialized Q table has an incompatible version."""


class TurnBucket(str, Enum):
    T1_3 = "T1_3"
    T4_6 = "T4_6"
    T7_10 = "T7_10"
    T11_PLUS = "T11plus"


def bucket_turn(turn_index: int) -> TurnBucket:
    if turn_index <= 3:
        return TurnBucket.T1_3
    if turn_index <= 6:
        return TurnBucket.T4_6
    if turn_index <= 10:
        return TurnBucket.T7_10
    return TurnBucket.T11_PLUS


class Coherence(str, Enum):
    LOW = "Low"
    HIGH = "High"


STRATEGY_COUNT_CAP = 2

# Task templates are delivered at most once and their delivery is already
# summarized by task_progress, so per-strategy usage counts are kept for the
# four social strategies only; counting all twelve fragments the state space
# by the delivered-template subset and stalls tabular learning.
COUNTED_STRATEGIES: tuple[StrategyId, ...] = NONTASK_STRATEGIES
_COUNT_INDEX = {s: i for i, s in enumerate(COUNTED_STRATEGIES)}


@dataclass(frozen=True)
class DialogState:
    """Discretized MDP state. Hashable, so it keys the Q table directly.

    strategy_counts holds one capped usage count per social strategy in
    definition order; task templates never repeat, so their usage lives in
    task_progress.
    """

    turn_bucket: TurnBucket
    strategy_counts: tuple[int, ...]
    sentiment: Sentiment
    coherence: Coherence
    last_strategy: Optional[StrategyId]
    task_progress: int

    def count_of(self, strategy: StrategyId) -> int:
        index = _COUNT_INDEX.get(strategy)
        return 0 if index is None else self.strategy_counts[index]

    def key(self) -> str:
        """Stable string key used by the Q table file format."""
        counts = "".join(str(c) for c in self.strategy_counts)
        last = self.last_strategy.value if self.last_strategy else "-"
        return (f"{self.turn_bucket.value}|{counts}|{self.sentiment.value}"
                f"|{self.coherence.value}|{last}|{self.task_progress}")

    @classmethod
    def from_key(cls, key: str) -> "DialogState":
        bucket, counts, sent, coh, last, progress = key.split("|")
        return cls(
            turn_bucket=TurnBucket(bucket),
            strategy_counts=tuple(int(c) for c in counts),
            sentiment=Sentiment(sent),
            coherence=Coherence(coh),
            last_strategy=None if last == "-" else StrategyId(last),
            task_progress=int(progress),
        )


def featurize(
    conv: Conversation,
    variant: Variant,
    *,
    coherence_high: bool,
    task_progress_count: int,
) -> DialogState:
    """Discretize the transcript into a DialogState.

    The mix-local variant derives history features (strategy counts,
    aggregated sentiment, last strategy) from the last three turns only;
    the turn bucket and task progress are current-state features and stay
    global. The opening greeting is not counted as an executed strategy.
    """
    if not conv.utterances:
        raise ValueError("cannot featurize an empty conversation")
    window = variant.history_window
    scope = conv.utterances if window is None else conv.utterances[-window:]

    counts = [0] * len(COUNTED_STRATEGIES)
    last_strategy: Optional[StrategyId] = None
    for utt in scope:
        if utt.speaker is Speaker.SYSTEM and utt.strategy is not None:
            index = _COUNT_INDEX.get(utt.strategy)
            if index is not None and utt.turn_index > 1:
                # the scripted opener is not counted as policy output
                counts[index] = min(STRATEGY_COUNT_CAP, counts[index] + 1)
            last_strategy = utt.strategy

    votes = {Sentiment.NEGATIVE: 0, Sentiment.NEUTRAL: 0, Sentiment.POSITIVE: 0}
    for utt in scope:
        votes[sentiment_of_text(utt.text)] += 1
    sentiment = Sentiment.NEUTRAL
    if votes[Sentiment.POSITIVE] > max(votes[Sentiment.NEGATIVE], votes[Sentiment.NEUTRAL]):
        sentiment = Sentiment.POSITIVE
    elif votes[Sentiment.NEGATIVE] > max(votes[Sentiment.POSITIVE], votes[Sentiment.NEUTRAL]):
        sentiment = Sentiment.NEGATIVE

    return DialogState(
        turn_bucket=bucket_turn(len(conv.utterances)),
        strategy_counts=tuple(counts),
        sentiment=sentiment,
        coherence=Coherence.HIGH if coherence_high else Coherence.LOW,
        last_strategy=last_strategy,
        task_progress=task_progress_count,
    )


@dataclass(frozen=True)
class ConstraintPenalties:
    repeat_last: float = 5.0        # same strategy twice in a row
    overused_nontask: float = 3.0   # non-task strategy past its count cap
    task_out_of_order: float = 10.0  # guard: task content after completion
    stalled_task: float = 2.0       # chit-chat late in a still-unfinished task


@dataclass(frozen=True)
class PolicyConfig:
    gamma: float = 0.95
    alpha: float = 0.5
    epsilon_start: float = 0.9
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.6
    weights: RewardWeights = field(default_factory=RewardWeights)
    variant: Variant = Variant.MIX_GLOBAL
    penalties: ConstraintPenalties = field(default_factory=ConstraintPenalties)
    constraint_mode: str = "penalty"  # or "mask"
    max_turns: int = 40

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0,1), got {self.gamma}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0,1], got {self.alpha}")
        if self.constraint_mode not in ("penalty", "mask"):
            raise ValueError(f"unknown constraint_mode {self.constraint_mode!r}")

    def epsilon_at(self, episode: int, total_episodes: int) -> float:
        """Exponential decay from epsilon_start to epsilon_end over the first
        epsilon_decay_fraction of the budget, flat afterwards."""
        horizon = max(1.0, self.epsilon_decay_fraction * total_episodes)
        fraction = min(1.0, episode / horizon)
        ratio = self.epsilon_end / self.epsilon_start
        return self.epsilon_start * (ratio ** fraction)


QTABLE_FORMAT_VERSION = 1


class QTable:
    """State-action values with a zero default; lookups never insert."""

    def __init__(self, actions: Sequence[StrategyId] = tuple(StrategyId)):
        self.actions = tuple(actions)
        self._values: dict[tuple[DialogState, StrategyId], float] = {}

    def get(self, state: DialogState, action: StrategyId) -> float:
        return self._values.get((state, action), 0.0)

    def set(self, state: DialogState, action: StrategyId, value: float) -> None:
        self._values[(state, action)] = value

    def max_value(self, state: DialogState) -> float:
        return max((self.get(state, a) for a in self.actions), default=0.0)

    def __len__(self) -> int:
        return len(self._values)

    def items(self):
        return self._values.items()

    def copy_values(self) -> dict[tuple[DialogState, StrategyId], float]:
        return dict(self._values)

    def states(self) -> list[DialogState]:
        seen: dict[DialogState, None] = {}
        for state, _ in self._values:
            seen.setdefault(state)
        return list(seen)

    def save(self, path: str | Path) -> None:
        """Versioned JSON: state key -> per-action value array."""
        per_state: dict[str, list[float]] = {}
        for state in self.states():
            per_state[state.key()] = [self.get(state, a) for a in self.actions]
        record = {
            "version": QTABLE_FORMAT_VERSION,
            "actions": [a.value for a in self.actions],
            "entries": per_state,
        }
        Path(path).write_text(json.dumps(record, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "QTable":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DialogError(f"cannot load Q table {path}: {exc}") from exc
        if data.get("version") != QTABLE_FORMAT_VERSION:
            raise QTableVersionError(
                f"{path}: version {data.get('version')!r} != {QTABLE_FORMAT_VERSION}")
        table = cls(actions=tuple(StrategyId(a) for a in data["actions"]))
        for key, values in data["entries"].items():
            state = DialogState.from_key(key)
            for action, value in zip(table.actions, values):
                if value != 0.0:
                    table.set(state, action, value)
        return table


def constrained_reward(
    base: float,
    state: DialogState,
    action: StrategyId,
    config: PolicyConfig,
) -> float:
    """Subtract a penalty for every violated constraint rule."""
    penalty = 0.0
    p = config.penalties
    if state.last_strategy is not None and action is state.last_strategy:
        penalty += p.repeat_last
    if not action.is_task and state.count_of(action) >= STRATEGY_COUNT_CAP:
        penalty += p.overused_nontask
    if action.is_task and state.task_progress >= 8:
        # guard only: the generators never offer a delivered template
        penalty += p.task_out_of_order
    if (not action.is_task and state.task_progress < 8
            and state.turn_bucket is TurnBucket.T11_PLUS):
        penalty += p.stalled_task
    return base - penalty


def violates_constraints(state: DialogState, action: StrategyId) -> bool:
    """True when any constraint rule fires (used by mask mode)."""
    if state.last_strategy is not None and action is state.last_strategy:
        return True
    if not action.is_task and state.count_of(action) >= STRATEGY_COUNT_CAP:
        return True
    if action.is_task and state.task_progress >= 8:
        return True
    if (not action.is_task and state.task_progress < 8
            and state.turn_bucket is TurnBucket.T11_PLUS):
        return True
    return False


def q_update(
    q: QTable,
    state: DialogState,
    action: StrategyId,
    reward: float,
    next_state: Optional[DialogState],
    config: PolicyConfig,
    *,
    terminal: bool = False,
    alpha: Optional[float] = None,
) -> QTable:
    """One temporal-difference update.

    Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)); a terminal next
    state contributes nothing to the bootstrap term. alpha overrides the
    configured learning rate (the trainer decays it per visit).
    """
    step = config.alpha if alpha is None else alpha
    boot = 0.0 if terminal or next_state is None else q.max_value(next_state)
    old = q.get(state, action)
    q.set(state, action, old + step * (reward + config.gamma * boot - old))
    return q


def select_action(
    q: QTable,
    state: DialogState,
    candidates: Sequence[ResponseCandidate],
    epsilon: float,
    rng: random.Random,
) -> ResponseCandidate:
    """Epsilon-greedy choice among the candidates.

    Greedy ties break by the fixed strategy definition order and then by
    candidate position, so selection is fully deterministic given the seed.
    """
    if not candidates:
        raise EmptyCandidateSet("no response candidates to select from")
    if epsilon > 0 and rng.random() < epsilon:
        return candidates[rng.randrange(len(candidates))]
    return min(
        enumerate(candidates),
        key=lambda pair: (-q.get(state, pair[1].strategy),
                          pair[1].strategy.order, pair[0]),
    )[1]


def mask_candidates(
    state: DialogState, candidates: Sequence[ResponseCandidate]
) -> list[ResponseCandidate]:
    """Drop constraint-violating candidates; if everything violates, keep
    all rather than returning an empty set."""
    allowed = [c for c in candidates if not violates_constraints(state, c.strategy)]
    return allowed if allowed else list(candidates)
