"""Reward metrics: turn appropriateness, conversation depth, information
gain, and conversation length, combined linearly.

Appropriateness and depth are deterministic heuristics behind small
interfaces, so trained predictors can be swapped in without touching the
policy code. Appropriateness is the only immediate reward; the other three
are credited at episode end.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

from .core import Conversation, ResponseCandidate, StrategyId, TopicLabel, Utterance, tokenize
from .kb import KnowledgeBase
from .understanding import content_tokens, topic_of_text


class Phase(str, Enum):
    IMMEDIATE = "Immediate"
    EPISODE_END = "EpisodeEnd"


@dataclass(frozen=True)
class RewardWeights:
    appropriateness: float = 1.0
    depth: float = 2.0
    info: float = 0.05
    length: float = 0.25


@dataclass(frozen=True)
class RewardVector:
    appropriateness: int  # 0 inappropriate, 1 interpretable, 2 appropriate
    deep: bool
    info_gain: int
    conv_len: int


def combine(vector: RewardVector, weights: RewardWeights, phase: Phase) -> float:
    """Weighted sum of the metric values for the given phase.

    Appropriateness is immediate; depth, information gain, and length are
    delayed and only enter at episode end.
    """
    if phase is Phase.IMMEDIATE:
        return weights.appropriateness * vector.appropriateness
    return (
        weights.depth * (1.0 if vector.deep else 0.0)
        + weights.info * vector.info_gain
        + weights.length * vector.conv_len
    )


DEEP_RUN_THRESHOLD = 10


def conversation_depth(conv: Conversation) -> tuple[int, bool]:
    """Longest run of consecutive utterances sharing a topic label.

    Deep means a run of ten or more; unlabeled turns break runs.
    """
    best = run = 0
    prev: Optional[TopicLabel] = None
    for utt in conv.utterances:
        if utt.topic is not None and utt.topic == prev:
            run += 1
        else:
            run = 1 if utt.topic is not None else 0
        prev = utt.topic
        best = max(best, run)
    return best, best >= DEEP_RUN_THRESHOLD


def information_gain(conv: Conversation) -> int:
    """Number of unique tokens introduced across the whole conversation."""
    seen: set[str] = set()
    for utt in conv.utterances:
        seen.update(utt.tokens)
    return len(seen)


class AppropriatenessEstimator(Protocol):
    def score(
        self,
        context: Optional[Utterance],
        candidate: ResponseCandidate,
        prev_strategy: Optional[StrategyId] = None,
    ) -> int: ...


class HeuristicAppropriateness:
    """Deterministic 3-level coherence scorer.

    2 (appropriate): repeats nothing and shares an entity, two or more
    content tokens, or a topic with the context, or is a gated task template
    whose precondition was satisfied this turn.
    1 (interpretable): a generic question with no relation to the context.
    0 (inappropriate): repeats the previous system strategy, or bears no
    relation to the context and is not a question.
    """

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb

    def score(
        self,
        context: Optional[Utterance],
        candidate: ResponseCandidate,
        prev_strategy: Optional[StrategyId] = None,
    ) -> int:
        if prev_strategy is not None and candidate.strategy is prev_strategy:
            return 0
        if candidate.gate_just_met:
            return 2
        if context is not None:
            cand_tokens = tokenize(candidate.text)
            if self._shares_entity(context.text, candidate.text):
                return 2
            overlap = content_tokens(context.tokens) & content_tokens(cand_tokens)
            if len(overlap) >= 2:
                return 2
            context_topic = context.topic or topic_of_text(context.text, self.kb)
            candidate_topic = topic_of_text(candidate.text, self.kb)
            if (context_topic == candidate_topic
                    and context_topic not in (TopicLabel.OTHER, TopicLabel.SOCIAL)):
                return 2
        if "?" in candidate.text:
            return 1
        return 0

    def _shares_entity(self, context_text: str, candidate_text: str) -> bool:
        left = {m.entity_id for m in self.kb.find_mentions(context_text)}
        if not left:
            return False
        right = {m.entity_id for m in self.kb.find_mentions(candidate_text)}
        return bool(left & right)


def score_appropriateness(
    context: Optional[Utterance],
    candidate: ResponseCandidate,
    kb: KnowledgeBase,
    prev_strategy: Optional[StrategyId] = None,
) -> int:
    """Convenience wrapper over the heuristic estimator."""
    return HeuristicAppropriateness(kb).score(context, candidate, prev_strategy)


class DepthEstimator(Protocol):
    def classify(self, conv: Conversation) -> bool: ...


class HeuristicDepth:
    """Depth from the transcript's topic labels (threshold rule)."""

    def classify(self, conv: Conversation) -> bool:
        return conversation_depth(conv)[1]


def episode_reward_vector(conv: Conversation) -> RewardVector:
    """Delayed metrics of a finished conversation (appropriateness unused)."""
    max_run, deep = conversation_depth(conv)
    return RewardVector(
        appropriateness=0,
        deep=deep,
        info_gain=information_gain(conv),
        conv_len=len(conv),
    )
