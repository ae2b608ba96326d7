"""Language understanding: polarity, entities, sentiment, and topic labels.

Keyword rules over the shared tokenizer; no statistical models. The sentiment
lexicons and the stopword list ship with the package as plain word lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from .core import TopicLabel, Utterance, tokenize
from .kb import EntityKind, EntityMatch, KnowledgeBase


class Polarity(str, Enum):
    YES = "Yes"
    NO = "No"
    NEITHER = "Neither"


class Sentiment(str, Enum):
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"
    POSITIVE = "Positive"


@dataclass(frozen=True)
class UnderstandingResult:
    polarity: Polarity
    entities: tuple[EntityMatch, ...]
    sentiment: Sentiment
    topic: TopicLabel

    def hero_matches(self) -> tuple[EntityMatch, ...]:
        return tuple(e for e in self.entities if e.kind is EntityKind.SUPERHERO)

    def movie_matches(self) -> tuple[EntityMatch, ...]:
        return tuple(e for e in self.entities if e.kind is EntityKind.MOVIE)


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("movietalk").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@lru_cache(maxsize=None)
def positive_words() -> frozenset[str]:
    return _load_wordlist("lexicon_positive.txt")


@lru_cache(maxsize=None)
def negative_words() -> frozenset[str]:
    return _load_wordlist("lexicon_negative.txt")


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return _load_wordlist("stopwords.txt")


def content_tokens(tokens: tuple[str, ...]) -> frozenset[str]:
    """Token set minus stopwords (what the coherence heuristics compare)."""
    return frozenset(tokens) - stopwords()


# Polarity keywords; negations win unless an affirmation appears earlier.
# Bigrams cover "i do" / "i have" style affirmative answers.
_AFFIRM = {"yes", "yeah", "yep", "sure", "definitely", "absolutely", "ok", "okay"}
_AFFIRM_BIGRAMS = {("i", "do"), ("i", "have")}
_NEGATE = {"no", "not", "havent", "dont", "never", "nope", "didnt", "wouldnt", "cant"}


def classify_yes_no(utt: Utterance) -> Polarity:
    """Keyword-rule yes/no classification of a user answer."""
    tokens = utt.tokens
    first_affirm = None
    for i, tok in enumerate(tokens):
        if tok in _AFFIRM:
            first_affirm = i
            break
        if i + 1 < len(tokens) and (tok, tokens[i + 1]) in _AFFIRM_BIGRAMS:
            first_affirm = i
            break
    first_negate = next((i for i, t in enumerate(tokens) if t in _NEGATE), None)
    if first_affirm is not None and (first_negate is None or first_affirm < first_negate):
        return Polarity.YES
    if first_negate is not None:
        return Polarity.NO
    if first_affirm is not None:
        return Polarity.YES
    return Polarity.NEITHER


def detect_entities(utt: Utterance, kb: KnowledgeBase) -> tuple[EntityMatch, ...]:
    """Longest-match scan of the utterance text against KB surface forms."""
    return tuple(kb.find_mentions(utt.text))


def score_sentiment(utt: Utterance) -> Sentiment:
    """Lexicon vote: positive token count minus negative token count."""
    score = 0
    pos, neg = positive_words(), negative_words()
    for tok in utt.tokens:
        if tok in pos:
            score += 1
        elif tok in neg:
            score -= 1
    if score > 0:
        return Sentiment.POSITIVE
    if score < 0:
        return Sentiment.NEGATIVE
    return Sentiment.NEUTRAL


_SUPERHERO_WORDS = {"superhero", "superheroes", "hero", "heroes", "superpower", "superpowers"}
_DISNEY_WORDS = {"disney", "pixar"}
_MOVIE_WORDS = {"movie", "movies", "film", "films", "watch", "watched", "watching",
                "cinema", "theater", "theatre"}
_SOCIAL_WORDS = {"you", "your", "yours", "yourself", "hello", "hi", "hey", "thanks",
                 "thank", "please", "bye", "goodbye", "friend", "friends"}


def topic_of_text(text: str, kb: KnowledgeBase) -> TopicLabel:
    """Deterministic priority rules; specificity decreasing.

    PromotedMovie > Superheroes > DisneyMovies > MoviesGeneral > Social > Other.
    """
    mentions = kb.find_mentions(text)
    token_set = set(tokenize(text))
    if any(m.entity_id == kb.promoted_movie.id for m in mentions):
        return TopicLabel.PROMOTED_MOVIE
    if any(m.kind is EntityKind.SUPERHERO for m in mentions) or token_set & _SUPERHERO_WORDS:
        return TopicLabel.SUPERHEROES
    if token_set & _DISNEY_WORDS:
        return TopicLabel.DISNEY_MOVIES
    if any(m.kind is EntityKind.MOVIE for m in mentions) or token_set & _MOVIE_WORDS:
        return TopicLabel.MOVIES_GENERAL
    if token_set & _SOCIAL_WORDS:
        return TopicLabel.SOCIAL
    return TopicLabel.OTHER


def label_topic(utt: Utterance, kb: KnowledgeBase) -> TopicLabel:
    return topic_of_text(utt.text, kb)


def analyze(utt: Utterance, kb: KnowledgeBase) -> UnderstandingResult:
    """Run all four extractors over one user utterance."""
    return UnderstandingResult(
        polarity=classify_yes_no(utt),
        entities=detect_entities(utt, kb),
        sentiment=score_sentiment(utt),
        topic=label_topic(utt, kb),
    )


def sentiment_of_text(text: str) -> Sentiment:
    """Sentiment of raw text (used when no Utterance object exists yet)."""
    score = 0
    pos, neg = positive_words(), negative_words()
    for tok in tokenize(text):
        if tok in pos:
            score += 1
        elif tok in neg:
            score -= 1
    if score > 0:
        return Sentiment.POSITIVE
    if score < 0:
        return Sentiment.NEGATIVE
    return Sentiment.NEUTRAL
