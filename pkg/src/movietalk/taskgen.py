"""Task response generation: the eight goal-directed templates plus the
progress tracker that defines task success.

Templates fire only while pending and only when their applicability gate is
open; slots are filled from the knowledge base and the understanding result.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Optional

from .core import (
    TASK_STRATEGIES,
    DialogError,
    ResponseCandidate,
    Source,
    StrategyId,
)
from .kb import KnowledgeBase, Movie, default_kb, load_kb  # noqa: F401  (re-export)
from .understanding import Polarity, UnderstandingResult

if TYPE_CHECKING:
    from .policy import DialogState


class AlreadyDelivered(DialogError):
    """A task strategy was marked delivered twice."""


@dataclass(frozen=True)
class TaskProgress:
    """Which of the eight task templates have reached the user.

    delivered and pending always partition the eight task strategies; the
    task succeeds exactly when all eight are delivered. saw_answer records
    the user's reply to the saw-the-movie question, which gates promotion.
    """

    delivered: tuple[StrategyId, ...] = ()
    pending: tuple[StrategyId, ...] = TASK_STRATEGIES
    saw_answer: Optional[Polarity] = None

    @property
    def task_success(self) -> bool:
        return len(self.delivered) == len(TASK_STRATEGIES)

    @property
    def count(self) -> int:
        return len(self.delivered)

    def __post_init__(self):
        combined = set(self.delivered) | set(self.pending)
        if combined != set(TASK_STRATEGIES) or set(self.delivered) & set(self.pending):
            raise ValueError("delivered/pending must partition the task strategies")


def fresh_progress() -> TaskProgress:
    return TaskProgress()


def mark_delivered(progress: TaskProgress, strategy: StrategyId) -> TaskProgress:
    """Move a pending task strategy to delivered."""
    if not strategy.is_task:
        raise ValueError(f"{strategy.value} is not a task strategy")
    if strategy in progress.delivered:
        raise AlreadyDelivered(f"{strategy.value} was already delivered")
    return replace(
        progress,
        delivered=progress.delivered + (strategy,),
        pending=tuple(s for s in progress.pending if s is not strategy),
    )


def record_saw_answer(progress: TaskProgress, polarity: Polarity) -> TaskProgress:
    """Record the reply to the saw-the-movie question.

    A user who already saw the movie skips promotion, so a Yes counts the
    promotion template as delivered without emitting it.
    """
    progress = replace(progress, saw_answer=polarity)
    if polarity is Polarity.YES and StrategyId.PROMOTE_THE_MOVIE in progress.pending:
        progress = mark_delivered(progress, StrategyId.PROMOTE_THE_MOVIE)
    return progress


_GROUNDING_TEMPLATES = (
    "I really like {name}'s {eye_color} eyes.",
    "Did you know {name}'s real name is {real_name}?",
    "I heard {name} comes from {origin}.",
)


def grounding_text(kb: KnowledgeBase, hero_id: str, ground_count: int) -> str:
    """Attribute sentence for a hero, rotating over eye color, real name,
    and origin by how many times that hero has been grounded."""
    hero = kb.hero(hero_id)
    template = _GROUNDING_TEMPLATES[ground_count % len(_GROUNDING_TEMPLATES)]
    return template.format(name=hero.name, eye_color=hero.eye_color,
                           real_name=hero.real_name, origin=hero.origin)


def relevant_movie(
    kb: KnowledgeBase, mentions: Iterable[str]
) -> Optional[Movie]:
    """Pick the movie to discuss: a non-promoted movie the user mentioned,
    else a non-promoted movie related to a hero the user mentioned."""
    mention_list = list(mentions)
    for entity_id in mention_list:
        if entity_id in kb.movies and not kb.movies[entity_id].is_promoted:
            return kb.movies[entity_id]
    for entity_id in mention_list:
        if entity_id in kb.heroes:
            for movie in kb.movies_for_hero(entity_id):
                if not movie.is_promoted:
                    return movie
    return None


def generate_task_candidates(
    state: "DialogState",
    nlu: UnderstandingResult,
    kb: KnowledgeBase,
    progress: TaskProgress,
    mentions: Iterable[str] = (),
    grounding_counts: Optional[dict[str, int]] = None,
) -> list[ResponseCandidate]:
    """One candidate per applicable pending template, slots filled.

    mentions is the ordered set of KB entity ids the user has mentioned so
    far (including the current turn); grounding_counts tracks how often each
    hero has already been grounded, for attribute rotation.
    """
    grounding_counts = grounding_counts or {}
    promoted = kb.promoted_movie
    favorite_hero = kb.hero(promoted.related_hero_ids[0])
    mention_list = list(mentions)
    current_heroes = nlu.hero_matches()

    candidates: list[ResponseCandidate] = []
    for strategy in progress.pending:
        if strategy is StrategyId.ELICIT_MOVIE_TYPE:
            candidates.append(ResponseCandidate(
                "Do you like superhero movies or Disney movies?",
                strategy, Source.TASK))
        elif strategy is StrategyId.INTRODUCE_FAVORITE_SUPERHERO:
            candidates.append(ResponseCandidate(
                f"My favorite superhero is {favorite_hero.name}.",
                strategy, Source.TASK, about_entity=favorite_hero.id))
        elif strategy is StrategyId.GROUND_ON_SUPERHERO:
            hero_id = None
            if current_heroes:
                hero_id = current_heroes[0].entity_id
            else:
                for entity_id in reversed(mention_list):
                    if entity_id in kb.heroes:
                        hero_id = entity_id
                        break
            if hero_id is not None:
                candidates.append(ResponseCandidate(
                    grounding_text(kb, hero_id, grounding_counts.get(hero_id, 0)),
                    strategy, Source.TASK, gate_just_met=bool(current_heroes),
                    about_entity=hero_id))
        elif strategy is StrategyId.DISCUSS_RELEVANT_MOVIE:
            movie = relevant_movie(kb, mention_list)
            if movie is not None:
                just_met = _arose_this_turn(movie, nlu, kb)
                candidates.append(ResponseCandidate(
                    f"I really like {movie.title}, have you seen it before?",
                    strategy, Source.TASK, gate_just_met=just_met,
                    about_entity=movie.id))
        elif strategy is StrategyId.DISCUSS_MOVIE_DETAIL:
            movie = relevant_movie(kb, mention_list)
            if movie is not None:
                snippet = movie.detail_snippets[0] if movie.detail_snippets \
                    else "The ending stayed with me for days."
                just_met = _arose_this_turn(movie, nlu, kb)
                candidates.append(ResponseCandidate(
                    f"I really liked {movie.title}. {snippet}",
                    strategy, Source.TASK, gate_just_met=just_met,
                    about_entity=movie.id))
        elif strategy is StrategyId.SAW_THE_MOVIE:
            candidates.append(ResponseCandidate(
                f"Have you seen the new superhero movie, '{promoted.title}'?",
                strategy, Source.TASK, about_entity=promoted.id))
        elif strategy is StrategyId.PROMOTE_THE_MOVIE:
            saw_done = StrategyId.SAW_THE_MOVIE in progress.delivered
            if saw_done and progress.saw_answer is not None \
                    and progress.saw_answer is not Polarity.YES:
                candidates.append(ResponseCandidate(
                    f"One of my friends just saw '{promoted.title}'. He told me "
                    f"it is a really nice movie, much better than the previous "
                    f"{favorite_hero.name} movie.",
                    strategy, Source.TASK,
                    gate_just_met=state.last_strategy is StrategyId.SAW_THE_MOVIE,
                    about_entity=promoted.id))
        elif strategy is StrategyId.INVITE_TO_MOVIE:
            if StrategyId.PROMOTE_THE_MOVIE in progress.delivered:
                just_met = state.last_strategy in (
                    StrategyId.PROMOTE_THE_MOVIE, StrategyId.SAW_THE_MOVIE)
                candidates.append(ResponseCandidate(
                    f"Do you want to see {promoted.title} together?",
                    strategy, Source.TASK, gate_just_met=just_met,
                    about_entity=promoted.id))
    return candidates


def _arose_this_turn(movie: Movie, nlu: UnderstandingResult, kb: KnowledgeBase) -> bool:
    """True when the discussed movie came from the current utterance."""
    current_ids = {e.entity_id for e in nlu.entities}
    if movie.id in current_ids:
        return True
    return any(h in current_ids for h in movie.related_hero_ids)
