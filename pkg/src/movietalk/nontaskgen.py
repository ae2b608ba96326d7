"""Non-task (social) response generation.

Three candidate sources: keyword retrieval over an interview-style corpus,
a second retrieval pass over a movie-subtitle-style corpus, and templated
conversation strategies (active participation, grounding, personalization).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Optional

from .core import ResponseCandidate, Source, StrategyId, TopicLabel, Utterance, tokenize
from .kb import EntityKind, KnowledgeBase, ParseError
from .understanding import UnderstandingResult

if TYPE_CHECKING:
    from .policy import DialogState


class EmptyCorpus(ParseError):
    """The corpus file contains no usable prompt/response pairs."""


@dataclass(frozen=True)
class RetrievalIndex:
    """Inverted keyword index over (prompt, response) pairs.

    idf weights are 1 + ln(N/df), so they are always positive; scores are
    sums of idf over tokens shared between the query and a stored prompt.
    """

    documents: tuple[tuple[tuple[str, ...], str], ...]
    idf: dict[str, float]
    postings: dict[str, tuple[int, ...]] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)


def build_index(corpus_path: str | Path) -> RetrievalIndex:
    """Tokenize a tab-separated prompt/response corpus into an index.

    Raises ParseError (naming the line) on malformed lines, EmptyCorpus when
    no pairs are present.
    """
    try:
        raw = Path(corpus_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read corpus {corpus_path}: {exc}") from exc

    documents: list[tuple[tuple[str, ...], str]] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError(
                f"{corpus_path}: line {lineno} is not a prompt<TAB>response pair"
            )
        documents.append((tokenize(parts[0]), parts[1].strip()))
    if not documents:
        raise EmptyCorpus(f"{corpus_path} contains no prompt/response pairs")

    df: dict[str, int] = defaultdict(int)
    postings: dict[str, list[int]] = defaultdict(list)
    for doc_id, (prompt_tokens, _) in enumerate(documents):
        for tok in sorted(set(prompt_tokens)):
            df[tok] += 1
            postings[tok].append(doc_id)
    n = len(documents)
    idf = {tok: 1.0 + math.log(n / count) for tok, count in df.items()}
    return RetrievalIndex(
        documents=tuple(documents),
        idf=idf,
        postings={tok: tuple(ids) for tok, ids in postings.items()},
    )


def retrieve(index: RetrievalIndex, utt: Utterance, k: int) -> list[tuple[str, float]]:
    """Top-k responses by idf-weighted token overlap with stored prompts.

    Ties break by document order; asking for more than the corpus holds
    returns everything.
    """
    if len(index) == 0:
        raise EmptyCorpus("retrieval index is empty")
    scores = [0.0] * len(index)
    for tok in set(utt.tokens):
        weight = index.idf.get(tok)
        if weight is None:
            continue
        for doc_id in index.postings[tok]:
            scores[doc_id] += weight
    order = sorted(range(len(index)), key=lambda i: (-scores[i], i))
    return [(index.documents[i][1], scores[i]) for i in order[:k]]


def _bundled(name: str) -> Path:
    return Path(resources.files("movietalk").joinpath(f"data/{name}"))  # type: ignore[arg-type]


_default_indexes: dict[str, RetrievalIndex] = {}


def default_interview_index() -> RetrievalIndex:
    if "interview" not in _default_indexes:
        _default_indexes["interview"] = build_index(_bundled("corpus_interview.tsv"))
    return _default_indexes["interview"]


def default_subtitle_index() -> RetrievalIndex:
    if "subtitles" not in _default_indexes:
        _default_indexes["subtitles"] = build_index(_bundled("corpus_subtitles.tsv"))
    return _default_indexes["subtitles"]


class UserProfile:
    """Per-conversation record of what the user engaged with.

    engaged_topics counts user turns per topic label; mentioned_entities
    counts KB entities in mention order. Updated once per user turn.
    """

    def __init__(self):
        self.engaged_topics: dict[TopicLabel, int] = {}
        self.mentioned_entities: dict[str, int] = {}

    def observe(self, nlu: UnderstandingResult) -> None:
        self.engaged_topics[nlu.topic] = self.engaged_topics.get(nlu.topic, 0) + 1
        for match in nlu.entities:
            self.mentioned_entities[match.entity_id] = (
                self.mentioned_entities.get(match.entity_id, 0) + 1
            )

    def mention_ids(self) -> tuple[str, ...]:
        return tuple(self.mentioned_entities)

    def top_engaged(self, threshold: int) -> Optional[TopicLabel]:
        """Most-engaged topic at or above the threshold, ties by label order."""
        best: Optional[TopicLabel] = None
        best_count = threshold - 1
        for topic in TopicLabel:
            count = self.engaged_topics.get(topic, 0)
            if count > best_count:
                best, best_count = topic, count
        return best


PERSONALIZATION_THRESHOLD = 3

# Follow-up question banks per topic; index rotates with usage so repeated
# active participation does not emit the same line forever.
_FOLLOWUPS: dict[TopicLabel, tuple[str, ...]] = {
    TopicLabel.SUPERHEROES: (
        "Who is your favorite superhero?",
        "What superpower would you pick for yourself?",
        "Which superhero would win in a fight, in your opinion?",
    ),
    TopicLabel.DISNEY_MOVIES: (
        "Which Disney movie do you like best?",
        "Do you prefer the classic Disney films or the new ones?",
    ),
    TopicLabel.MOVIES_GENERAL: (
        "What kind of movies have you been watching lately?",
        "Do you usually watch movies at home or in a theater?",
        "What was the last movie that really surprised you?",
    ),
    TopicLabel.PROMOTED_MOVIE: (
        "What have you heard about it so far?",
        "Do your friends talk about it too?",
    ),
    TopicLabel.SOCIAL: (
        "Tell me more about that, how did it go?",
        "How do you usually spend your free time?",
    ),
    TopicLabel.OTHER: (
        "What else do you enjoy talking about?",
        "So what has been on your mind lately?",
    ),
}

_TOPIC_PHRASES: dict[TopicLabel, str] = {
    TopicLabel.SUPERHEROES: "superheroes",
    TopicLabel.DISNEY_MOVIES: "Disney movies",
    TopicLabel.MOVIES_GENERAL: "movies",
    TopicLabel.PROMOTED_MOVIE: "that new superhero movie",
    TopicLabel.SOCIAL: "what you have been up to",
    TopicLabel.OTHER: "whatever is on your mind",
}


def generate_strategy_candidates(
    state: "DialogState",
    nlu: UnderstandingResult,
    kb: KnowledgeBase,
    profile: UserProfile,
    grounding_counts: Optional[dict[str, int]] = None,
) -> list[ResponseCandidate]:
    """Up to three strategy candidates: follow-up question on the current
    topic, grounding on a just-mentioned entity, and a personalized return
    to the user's most-engaged topic."""
    grounding_counts = grounding_counts or {}
    candidates: list[ResponseCandidate] = []

    bank = _FOLLOWUPS[nlu.topic]
    rotation = state.count_of(StrategyId.ACTIVE_PARTICIPATION)
    candidates.append(ResponseCandidate(
        bank[rotation % len(bank)],
        StrategyId.ACTIVE_PARTICIPATION, Source.NONTASK))

    if nlu.entities:
        match = nlu.entities[0]
        if match.kind is EntityKind.MOVIE:
            movie = kb.movie(match.entity_id)
            text = f"Are you talking about {movie.title}, the {movie.year} film."
        else:
            hero = kb.hero(match.entity_id)
            count = grounding_counts.get(hero.id, 0)
            attr_lines = (
                f"Are you talking about {hero.name}, whose real name is {hero.real_name}?",
                f"{hero.name} has {hero.eye_color} eyes, right?",
                f"{hero.name} comes from {hero.origin}, right?",
            )
            text = attr_lines[count % len(attr_lines)]
        candidates.append(ResponseCandidate(
            text, StrategyId.GROUNDING, Source.NONTASK, gate_just_met=True,
            about_entity=match.entity_id))

    engaged = profile.top_engaged(PERSONALIZATION_THRESHOLD)
    if engaged is not None:
        phrase = _TOPIC_PHRASES[engaged]
        personalized_lines = (
            f"You seemed to enjoy talking about {phrase}. Want to talk more about that?",
            f"Earlier you perked up when we got to {phrase}. Should we go back to that?",
            f"We could circle back to {phrase}, you clearly know a lot about it.",
        )
        rotation = state.count_of(StrategyId.PERSONALIZED)
        candidates.append(ResponseCandidate(
            personalized_lines[rotation % len(personalized_lines)],
            StrategyId.PERSONALIZED, Source.NONTASK))
    return candidates


def generate_nontask_candidates(
    state: "DialogState",
    nlu: UnderstandingResult,
    utt: Utterance,
    kb: KnowledgeBase,
    profile: UserProfile,
    interview_index: RetrievalIndex,
    subtitle_index: RetrievalIndex,
    grounding_counts: Optional[dict[str, int]] = None,
) -> list[ResponseCandidate]:
    """All non-task candidates: top-1 from each retrieval source plus the
    strategy candidates. Candidates that would echo the user verbatim are
    dropped."""
    candidates: list[ResponseCandidate] = []
    for index in (interview_index, subtitle_index):
        top = retrieve(index, utt, 1)
        if top:
            candidates.append(ResponseCandidate(
                top[0][0], StrategyId.RETRIEVAL, Source.NONTASK))
    candidates.extend(
        generate_strategy_candidates(state, nlu, kb, profile, grounding_counts))
    user_text = utt.text.strip().lower()
    return [c for c in candidates if c.text.strip().lower() != user_text]
