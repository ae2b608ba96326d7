"""Shared domain types: utterances, conversations, strategies, candidates.

Everything here is an immutable value object; the transcript model is the
single source of truth that the metrics and the policy featurizer read from.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Optional


class DialogError(Exception):
    """Base class for errors raised by the dialog framework."""


class AlternationViolation(DialogError):
    """A turn was appended that does not alternate speakers."""


class ConversationEnded(DialogError):
    """A turn was appended to a conversation that has already ended."""


class Speaker(str, Enum):
    SYSTEM = "System"
    USER = "User"


class EndReason(str, Enum):
    USER_QUIT = "UserQuit"
    TASK_COMPLETE = "TaskComplete"
    SIMULATOR_REPEAT = "SimulatorRepeat"
    MAX_TURNS = "MaxTurns"


class TopicLabel(str, Enum):
    SUPERHEROES = "Superheroes"
    DISNEY_MOVIES = "DisneyMovies"
    MOVIES_GENERAL = "MoviesGeneral"
    PROMOTED_MOVIE = "PromotedMovie"
    SOCIAL = "Social"
    OTHER = "Other"


class StrategyId(str, Enum):
    """The 12 response strategies. Task templates first, social strategies
    after; this definition order is the fixed tie-break order everywhere."""

    ELICIT_MOVIE_TYPE = "ElicitMovieType"
    INTRODUCE_FAVORITE_SUPERHERO = "IntroduceFavoriteSuperhero"
    GROUND_ON_SUPERHERO = "GroundOnSuperhero"
    DISCUSS_RELEVANT_MOVIE = "DiscussRelevantMovie"
    DISCUSS_MOVIE_DETAIL = "DiscussMovieDetail"
    SAW_THE_MOVIE = "SawTheMovie"
    PROMOTE_THE_MOVIE = "PromoteTheMovie"
    INVITE_TO_MOVIE = "InviteToMovie"
    RETRIEVAL = "Retrieval"
    ACTIVE_PARTICIPATION = "ActiveParticipation"
    GROUNDING = "Grounding"
    PERSONALIZED = "Personalized"

    @property
    def is_task(self) -> bool:
        return self in TASK_STRATEGIES

    @property
    def order(self) -> int:
        """Position in the fixed definition order (used for tie-breaks)."""
        return STRATEGY_ORDER[self]


TASK_STRATEGIES: tuple[StrategyId, ...] = tuple(StrategyId)[:8]
NONTASK_STRATEGIES: tuple[StrategyId, ...] = tuple(StrategyId)[8:]
STRATEGY_ORDER: dict[StrategyId, int] = {s: i for i, s in enumerate(StrategyId)}


class Source(str, Enum):
    TASK = "task"
    NONTASK = "nontask"


_NON_ALNUM = re.compile(r"[^a-z0-9\s]+")


@lru_cache(maxsize=65536)
def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, strip non-alphanumeric characters, split on whitespace.

    Idempotent: re-tokenizing the space-joined tokens yields the same tuple.
    """
    return tuple(_NON_ALNUM.sub("", text.lower()).split())


@dataclass(frozen=True)
class Utterance:
    """One turn of the transcript.

    tokens are always the deterministic tokenization of text; strategy is
    present exactly when the speaker is the system.
    """

    speaker: Speaker
    text: str
    turn_index: int
    strategy: Optional[StrategyId] = None
    topic: Optional[TopicLabel] = None
    tokens: tuple[str, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.tokens is None:
            object.__setattr__(self, "tokens", tokenize(self.text))
        if self.turn_index < 1:
            raise ValueError(f"turn_index must be >= 1, got {self.turn_index}")
        if (self.strategy is not None) != (self.speaker is Speaker.SYSTEM):
            raise ValueError("strategy is set exactly for system utterances")

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker.value,
            "text": self.text,
            "tokens": list(self.tokens),
            "turn_index": self.turn_index,
            "strategy_id": self.strategy.value if self.strategy else None,
            "topic": self.topic.value if self.topic else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Utterance":
        return cls(
            speaker=Speaker(d["speaker"]),
            text=d["text"],
            turn_index=d["turn_index"],
            strategy=StrategyId(d["strategy_id"]) if d.get("strategy_id") else None,
            topic=TopicLabel(d["topic"]) if d.get("topic") else None,
        )


@dataclass(frozen=True)
class Conversation:
    """An immutable transcript; appending returns a new value."""

    id: str
    utterances: tuple[Utterance, ...] = ()
    ended: bool = False
    end_reason: Optional[EndReason] = None

    def __len__(self) -> int:
        return len(self.utterances)

    @property
    def last(self) -> Optional[Utterance]:
        return self.utterances[-1] if self.utterances else None

    def last_by(self, speaker: Speaker) -> Optional[Utterance]:
        for utt in reversed(self.utterances):
            if utt.speaker is speaker:
                return utt
        return None

    def system_turns(self) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.speaker is Speaker.SYSTEM)

    def user_turns(self) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.speaker is Speaker.USER)

    def to_json(self) -> str:
        record = {
            "id": self.id,
            "ended": self.ended,
            "end_reason": self.end_reason.value if self.end_reason else None,
            "utterances": [u.to_dict() for u in self.utterances],
        }
        return json.dumps(record, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, raw: str) -> "Conversation":
        d = json.loads(raw)
        return cls(
            id=d["id"],
            utterances=tuple(Utterance.from_dict(u) for u in d["utterances"]),
            ended=d["ended"],
            end_reason=EndReason(d["end_reason"]) if d.get("end_reason") else None,
        )


def append_turn(conv: Conversation, utt: Utterance) -> Conversation:
    """Extend the transcript by one turn, enforcing alternation.

    Raises ConversationEnded if conv is closed and AlternationViolation if the
    speaker does not alternate or the turn index is not the next one.
    """
    if conv.ended:
        raise ConversationEnded(f"conversation {conv.id} has ended")
    expected_index = len(conv.utterances) + 1
    if utt.turn_index != expected_index:
        raise AlternationViolation(
            f"expected turn_index {expected_index}, got {utt.turn_index}"
        )
    if conv.last is not None and conv.last.speaker is utt.speaker:
        raise AlternationViolation(f"consecutive {utt.speaker.value} turns")
    return replace(conv, utterances=conv.utterances + (utt,))


def finish(conv: Conversation, reason: EndReason) -> Conversation:
    """Mark the conversation as ended with the given reason."""
    if conv.ended:
        raise ConversationEnded(f"conversation {conv.id} has already ended")
    return replace(conv, ended=True, end_reason=reason)


@dataclass(frozen=True)
class ResponseCandidate:
    """A generated response the policy can pick.

    gate_just_met marks a task template whose applicability condition was
    satisfied only this turn (used by the appropriateness heuristic);
    about_entity names the KB entity the text talks about, when there is one.
    """

    text: str
    strategy: StrategyId
    source: Source
    gate_just_met: bool = False
    about_entity: Optional[str] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("candidate text must be non-empty")
