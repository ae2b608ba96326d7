import random

import pytest

from movietalk.core import Conversation, Speaker, StrategyId, Utterance, append_turn
from movietalk.simulator import (
    Persona,
    PersonaMarginals,
    boring_system_turns,
    respond,
    sample_persona,
)
from movietalk.understanding import Polarity, classify_yes_no


def persona_with(**kw):
    defaults = dict(
        likes_superheroes=True, likes_disney=False, seen_promoted_movie=False,
        accepts_invitation=True, chattiness=0.0, repeat_prob=0.0,
        favorite_hero="hero:spiderman", seed=7, patience=99,
        boredom_quit_prob=0.0, forthcoming=1.0,
    )
    defaults.update(kw)
    return Persona(**defaults)


def conv_after_system(text, strategy, conv=None):
    conv = conv or Conversation(id="sim")
    return append_turn(conv, Utterance(
        Speaker.SYSTEM, text, len(conv.utterances) + 1, strategy=strategy))


class TestRespondRules:
    def test_elicit_superhero_fan(self, kb):
        conv = conv_after_system("Do you like superhero movies or Disney movies?",
                                 StrategyId.ELICIT_MOVIE_TYPE)
        reply = respond(persona_with(likes_superheroes=True), conv, kb)
        assert "superhero" in reply.text.lower()

    def test_elicit_disney_fan(self, kb):
        conv = conv_after_system("Do you like superhero movies or Disney movies?",
                                 StrategyId.ELICIT_MOVIE_TYPE)
        reply = respond(persona_with(likes_superheroes=False, likes_disney=True), conv, kb)
        assert "disney" in reply.text.lower()

    def test_saw_the_movie_polarity_contract(self, kb):
        conv = conv_after_system(
            "Have you seen the new superhero movie, 'Captain America: Civil War'?",
            StrategyId.SAW_THE_MOVIE)
        yes = respond(persona_with(seen_promoted_movie=True), conv, kb)
        no = respond(persona_with(seen_promoted_movie=False), conv, kb)
        assert classify_yes_no(yes) is Polarity.YES
        assert classify_yes_no(no) is Polarity.NO

    def test_invitation(self, kb):
        conv = conv_after_system("Do you want to see Captain America: Civil War together?",
                                 StrategyId.INVITE_TO_MOVIE)
        accept = respond(persona_with(accepts_invitation=True), conv, kb)
        decline = respond(persona_with(accepts_invitation=False), conv, kb)
        assert classify_yes_no(accept) is Polarity.YES
        assert classify_yes_no(decline) is Polarity.NO

    def test_superhero_question_names_favorite(self, kb):
        conv = conv_after_system("Who is your favorite superhero?",
                                 StrategyId.ACTIVE_PARTICIPATION)
        reply = respond(persona_with(favorite_hero="hero:thor"), conv, kb)
        assert "Thor" in reply.text

    def test_requires_system_turn_last(self, kb):
        conv = Conversation(id="sim")
        with pytest.raises(ValueError):
            respond(persona_with(), conv, kb)


class TestRepeats:
    def _two_replies(self, persona, kb):
        conv = conv_after_system("Hello, I really like movies. How about we talk about movies?",
                                 StrategyId.ACTIVE_PARTICIPATION)
        first = respond(persona, conv, kb)
        conv = append_turn(conv, first)
        conv = conv_after_system("What kind of movies have you been watching lately?",
                                 StrategyId.ACTIVE_PARTICIPATION, conv)
        second = respond(persona, conv, kb)
        return first, second

    def test_repeat_prob_one_repeats_verbatim(self, kb):
        first, second = self._two_replies(persona_with(repeat_prob=1.0), kb)
        assert second.text == first.text

    def test_repeat_prob_zero_never_repeats_consecutively(self, kb):
        for seed in range(25):
            persona = persona_with(seed=seed, chattiness=0.5)
            first, second = self._two_replies(persona, kb)
            assert second.text != first.text


class TestDeterminism:
    def test_same_inputs_same_reply(self, kb):
        conv = conv_after_system("Do you like superhero movies or Disney movies?",
                                 StrategyId.ELICIT_MOVIE_TYPE)
        persona = persona_with(chattiness=0.7, seed=123)
        assert respond(persona, conv, kb) == respond(persona, conv, kb)

    def test_different_conversation_ids_may_differ(self, kb):
        # per-turn randomness is salted with the conversation id
        persona = persona_with(chattiness=1.0, seed=5)
        replies = set()
        for conv_id in ("a", "b", "c", "d", "e", "f"):
            conv = append_turn(Conversation(id=conv_id), Utterance(
                Speaker.SYSTEM, "What else do you enjoy talking about?", 1,
                strategy=StrategyId.ACTIVE_PARTICIPATION))
            replies.add(respond(persona, conv, kb).text)
        assert len(replies) > 1


class TestSamplePersona:
    def test_deterministic(self, kb):
        assert sample_persona(99, kb=kb) == sample_persona(99, kb=kb)

    def test_marginals_within_tolerance(self, kb):
        n = 10_000
        seen = accepts = supers = disney = 0
        for seed in range(n):
            persona = sample_persona(seed, kb=kb)
            seen += persona.seen_promoted_movie
            accepts += persona.accepts_invitation
            supers += persona.likes_superheroes
            disney += persona.likes_disney
        assert abs(seen / n - 0.41) < 0.02
        assert abs(accepts / n - 0.80) < 0.02
        assert abs(supers / n - 0.42) < 0.02
        assert abs(disney / n - 0.22) < 0.02

    def test_custom_marginals(self, kb):
        marginals = PersonaMarginals(likes_superheroes=1.0, accepts_invitation=0.0)
        persona = sample_persona(3, marginals, kb)
        assert persona.likes_superheroes
        assert not persona.accepts_invitation

    def test_favorite_hero_resolves(self, kb):
        for seed in range(50):
            assert sample_persona(seed, kb=kb).favorite_hero in kb.heroes


class TestBoredom:
    def test_counts_strategy_repeats(self, kb):
        conv = conv_after_system("First question for you?", StrategyId.RETRIEVAL)
        conv = append_turn(conv, Utterance(Speaker.USER, "sure thing", 2))
        conv = conv_after_system("Second question for you?", StrategyId.RETRIEVAL, conv)
        assert boring_system_turns(conv) == 1

    def test_counts_verbatim_repeats(self, kb):
        conv = conv_after_system("Same line here?", StrategyId.RETRIEVAL)
        conv = append_turn(conv, Utterance(Speaker.USER, "ok", 2))
        conv = conv_after_system("Same line here?", StrategyId.GROUNDING, conv)
        assert boring_system_turns(conv) == 1

    def test_non_sequitur_statement_counts(self, kb):
        conv = conv_after_system("Opening line?", StrategyId.RETRIEVAL)
        conv = append_turn(conv, Utterance(Speaker.USER, "I enjoy gardening a lot", 2))
        conv = conv_after_system("My favorite superhero is Captain America.",
                                 StrategyId.INTRODUCE_FAVORITE_SUPERHERO, conv)
        assert boring_system_turns(conv) == 1

    def test_quits_after_patience_exhausted(self, kb):
        persona = persona_with(patience=1, boredom_quit_prob=0.0)
        conv = conv_after_system("Line one?", StrategyId.RETRIEVAL)
        conv = append_turn(conv, Utterance(Speaker.USER, "ok", 2))
        conv = conv_after_system("Line two?", StrategyId.RETRIEVAL, conv)
        reply = respond(persona, conv, kb)
        assert {"bye", "goodbye"} & set(reply.tokens)
