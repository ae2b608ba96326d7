"""Rule-based user simulator for policy training.

A persona fixes the simulated user's preferences; replies are keyed on the
strategy of the system turn being answered, with small template banks for
social content. The simulated user occasionally repeats itself verbatim
(which forces an episode restart upstream) and walks away when the system
keeps being repetitive or incoherent.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass
from typing import Optional

from .core import Conversation, Speaker, StrategyId, Utterance
from .kb import EntityKind, KnowledgeBase, default_kb
from .understanding import content_tokens


@dataclass(frozen=True)
class PersonaMarginals:
    """Population-level probabilities personas are drawn from."""

    likes_superheroes: float = 0.42
    likes_disney: float = 0.22
    seen_promoted: float = 0.41
    accepts_invitation: float = 0.80
    chattiness: float = 0.6
    repeat_prob: float = 0.02
    patience: int = 7
    boredom_quit_prob: float = 0.12
    forthcoming: float = 0.4


@dataclass(frozen=True)
class Persona:
    likes_superheroes: bool
    likes_disney: bool
    seen_promoted_movie: bool
    accepts_invitation: bool
    chattiness: float
    repeat_prob: float
    favorite_hero: str
    seed: int
    patience: int = 7
    boredom_quit_prob: float = 0.12
    forthcoming: float = 0.4  # odds of naming favorites when pitched directly

    def __post_init__(self):
        for name in ("chattiness", "repeat_prob", "boredom_quit_prob"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0,1], got {value}")


def sample_persona(
    seed: int,
    marginals: Optional[PersonaMarginals] = None,
    kb: Optional[KnowledgeBase] = None,
) -> Persona:
    """Draw a persona from the configured marginals, deterministic per seed."""
    m = marginals or PersonaMarginals()
    kb = kb or default_kb()
    rng = random.Random(seed)
    return Persona(
        likes_superheroes=rng.random() < m.likes_superheroes,
        likes_disney=rng.random() < m.likes_disney,
        seen_promoted_movie=rng.random() < m.seen_promoted,
        accepts_invitation=rng.random() < m.accepts_invitation,
        chattiness=m.chattiness,
        repeat_prob=m.repeat_prob,
        favorite_hero=rng.choice(sorted(kb.heroes)),
        seed=seed,
        patience=m.patience,
        boredom_quit_prob=m.boredom_quit_prob,
        forthcoming=m.forthcoming,
    )


FAREWELLS = (
    "I have to go now, goodbye.",
    "This is getting repetitive, bye.",
    "I should get going, goodbye.",
)

WRAPUP_FAREWELLS = (
    "Thanks for the chat, I will think about the movie. Goodbye.",
    "This was fun, but I need to run. Bye.",
    "Alright, time for me to go. Goodbye.",
)

WRAPUP_PROB = 0.2  # per-turn chance of leaving once the invitation was answered

_GENERIC_SOCIAL = (
    "That is a good question, let me think.",
    "I spend most evenings just relaxing at home.",
    "Work keeps me pretty busy these days.",
    "I have been trying to get outside more often.",
    "Honestly, nothing too exciting happens around here.",
    "My weekends are mostly errands and naps.",
)

_ACKS = (
    "That is interesting.",
    "Good to know.",
    "Huh, I had no idea.",
    "That makes sense.",
    "Fair enough.",
)

_CHATTER = (
    "Lately I mostly watch comedies.",
    "I keep meaning to go to the theater more.",
    "A friend keeps sending me trailers to watch.",
    "I usually fall asleep halfway through anything long.",
    "By the way, I really like {hero}.",
    "I watched {movie} again last weekend.",
)

_MOVIE_CHAT = (
    "I like watching movies too.",
    "I watch something almost every weekend.",
    "I watched {movie} recently, it was fun.",
    "Movies are my favorite way to unwind.",
)

_HATE_LINES = (
    "I hated the last Fantastic Four movie.",
    "I cannot stand films that end on a cliffhanger.",
)

_KIDS_LINES = (
    "I don't have any children.",
    "No kids, just a very demanding cat.",
)


IDLE_CHAT_LIMIT = 3  # consecutive task-free system turns the user tolerates


def boring_system_turns(conv: Conversation) -> int:
    """Count system turns the simulated user experiences as disengaging.

    A system turn counts when it repeats earlier system output verbatim,
    reuses the previous system strategy, ignores the user entirely (no shared
    content tokens and not even a question), or extends a long stretch of
    chit-chat with no task content at all.
    """
    events = 0
    seen_texts: set[str] = set()
    recent_strategies: list = []
    prev_system: Optional[Utterance] = None
    prev_user: Optional[Utterance] = None
    for utt in conv.utterances:
        if utt.speaker is Speaker.USER:
            prev_user = utt
            continue
        boring = False
        if utt.text in seen_texts:
            boring = True
        if prev_system is not None and utt.strategy is prev_system.strategy:
            boring = True
        if (prev_user is not None and "?" not in utt.text
                and not (content_tokens(utt.tokens) & content_tokens(prev_user.tokens))):
            boring = True
        recent_strategies.append(utt.strategy)
        if (len(recent_strategies) >= IDLE_CHAT_LIMIT
                and all(s is not None and not s.is_task
                        for s in recent_strategies[-IDLE_CHAT_LIMIT:])):
            boring = True
        if boring and utt.turn_index > 1:
            events += 1
        seen_texts.add(utt.text)
        prev_system = utt
    return events


def _turn_rng(persona: Persona, conv: Conversation, turn_index: int) -> random.Random:
    # salted with the conversation id so a restarted episode does not replay
    # the exact same draws (a persona that repeated once would loop forever)
    salt = zlib.crc32(conv.id.encode("utf-8"))
    return random.Random(persona.seed * 1_000_003 + turn_index * 7919 + salt)


def respond(persona: Persona, conv: Conversation, kb: Optional[KnowledgeBase] = None) -> Utterance:
    """Produce the simulated user's next turn.

    Fully determined by (persona, conversation so far): the per-turn RNG is
    derived from the persona seed and the turn index.
    """
    kb = kb or default_kb()
    system_turn = conv.last
    if system_turn is None or system_turn.speaker is not Speaker.SYSTEM:
        raise ValueError("simulator answers only after a system turn")
    turn_index = len(conv.utterances) + 1
    rng = _turn_rng(persona, conv, turn_index)
    prev_user = conv.last_by(Speaker.USER)

    if prev_user is not None and rng.random() < persona.repeat_prob:
        return Utterance(Speaker.USER, prev_user.text, turn_index)

    boredom = boring_system_turns(conv)
    if _invite_already_answered(conv) and rng.random() < WRAPUP_PROB:
        text = WRAPUP_FAREWELLS[rng.randrange(len(WRAPUP_FAREWELLS))]
    elif boredom >= persona.patience:
        text = FAREWELLS[rng.randrange(len(FAREWELLS))]
    elif boredom > 0 and _is_boring_now(conv) and rng.random() < persona.boredom_quit_prob:
        text = FAREWELLS[rng.randrange(len(FAREWELLS))]
    else:
        text = _reply_text(persona, system_turn, rng, kb)
        if persona.chattiness > 0 and rng.random() < persona.chattiness:
            # users volunteer personal favorites during chit-chat, not while
            # being pitched; task turns only get the plain extras
            bank = _CHATTER if (system_turn.strategy is not None
                                and not system_turn.strategy.is_task) else _CHATTER[:4]
            extra = bank[rng.randrange(len(bank))].format(
                hero=kb.hero(persona.favorite_hero).name,
                movie=_recent_movie_title(persona, kb))
            if extra not in text:
                text = f"{text} {extra}"

    # never accidentally repeat the previous reply verbatim
    if prev_user is not None and text == prev_user.text:
        text = f"{text} Anyway."
    return Utterance(Speaker.USER, text, turn_index)


def _is_boring_now(conv: Conversation) -> bool:
    """Did the most recent system turn add a boredom event?"""
    if len(conv.utterances) < 2:
        return False
    trimmed = Conversation(id=conv.id, utterances=conv.utterances[:-1])
    return boring_system_turns(conv) > boring_system_turns(trimmed)


def _invite_already_answered(conv: Conversation) -> bool:
    """True once the user has replied to the invitation (the current reply
    being composed is not the answer itself)."""
    system_turns = conv.system_turns()
    for utt in system_turns[:-1]:
        if utt.strategy is StrategyId.INVITE_TO_MOVIE:
            return True
    return False


def _pick(rng: random.Random, bank: tuple[str, ...], avoid: Optional[str] = None) -> str:
    idx = rng.randrange(len(bank))
    if bank[idx] == avoid and len(bank) > 1:
        idx = (idx + 1) % len(bank)
    return bank[idx]


def _recent_movie_title(persona: Persona, kb: KnowledgeBase) -> str:
    for movie in kb.movies_for_hero(persona.favorite_hero):
        if not movie.is_promoted:
            return movie.title
    return "Fantastic Four"


def _reply_text(
    persona: Persona,
    system_turn: Utterance,
    rng: random.Random,
    kb: KnowledgeBase,
) -> str:
    strategy = system_turn.strategy
    hero_name = kb.hero(persona.favorite_hero).name

    if strategy is StrategyId.ELICIT_MOVIE_TYPE:
        if persona.likes_superheroes and persona.likes_disney:
            return "I like both superhero movies and Disney movies."
        if persona.likes_superheroes:
            return "I like superhero movies."
        if persona.likes_disney:
            return "I like Disney movies better."
        return "I am not really into movies, to be honest."

    if strategy is StrategyId.INTRODUCE_FAVORITE_SUPERHERO:
        if persona.likes_superheroes and rng.random() < persona.forthcoming:
            return f"I like {hero_name}."
        if persona.likes_superheroes:
            return "Nice choice, I like superhero movies in general."
        return "I do not know many superheroes."

    if strategy is StrategyId.SAW_THE_MOVIE:
        if persona.seen_promoted_movie:
            return "Yes, I have seen that movie already."
        return "No, I haven't seen that movie yet."

    if strategy is StrategyId.INVITE_TO_MOVIE:
        if persona.accepts_invitation:
            return "Yes, I would love to see it together."
        return "No, I do not think so, sorry."

    if strategy is StrategyId.DISCUSS_RELEVANT_MOVIE:
        movie_mentions = [m for m in kb.find_mentions(system_turn.text)
                          if m.kind is EntityKind.MOVIE]
        title = movie_mentions[0].surface if movie_mentions else "that one"
        if rng.random() < 0.6:
            return f"Yes, I saw {title} a while ago."
        return f"No, I missed {title} somehow."

    if strategy is StrategyId.DISCUSS_MOVIE_DETAIL:
        return _pick(rng, _ACKS)

    if strategy is StrategyId.PROMOTE_THE_MOVIE:
        if persona.likes_superheroes:
            return "That sounds great, I love a good superhero movie."
        return "Maybe, I am not convinced yet."

    if strategy is StrategyId.GROUND_ON_SUPERHERO:
        return _pick(rng, _ACKS)

    # social strategies, the opener, and anything else: keyword dispatch
    tokens = set(system_turn.tokens)
    if tokens & {"superhero", "superheroes", "superpower", "hero"}:
        if persona.likes_superheroes:
            return f"I like {hero_name}."
        return f"I guess {hero_name} is fine, but I am not a big fan."
    if "disney" in tokens:
        if persona.likes_disney:
            return "I love the classic Disney movies."
        return "Disney movies are not really my thing."
    if tokens & {"kids", "children", "family"}:
        return _pick(rng, _KIDS_LINES)
    if "hate" in tokens or "hated" in tokens:
        return _pick(rng, _HATE_LINES)
    if tokens & {"movie", "movies", "film", "watch", "watching"}:
        line = _pick(rng, _MOVIE_CHAT)
        return line.format(movie=_recent_movie_title(persona, kb))
    if "?" in system_turn.text:
        return _pick(rng, _GENERIC_SOCIAL)
    return _pick(rng, _ACKS)
