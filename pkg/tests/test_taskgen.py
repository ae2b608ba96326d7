import json

import pytest

from movietalk.core import Speaker, StrategyId, TASK_STRATEGIES, Utterance
from movietalk.kb import ParseError, ValidationError, load_kb
from movietalk.policy import COUNTED_STRATEGIES, Coherence, DialogState, TurnBucket
from movietalk.taskgen import (
    AlreadyDelivered,
    fresh_progress,
    generate_task_candidates,
    mark_delivered,
    record_saw_answer,
    relevant_movie,
)
from movietalk.understanding import Polarity, Sentiment, analyze


def state_with(last_strategy=None):
    return DialogState(
        turn_bucket=TurnBucket.T1_3,
        strategy_counts=(0,) * len(COUNTED_STRATEGIES),
        sentiment=Sentiment.NEUTRAL,
        coherence=Coherence.LOW,
        last_strategy=last_strategy,
        task_progress=0,
    )


def nlu_for(text, kb):
    return analyze(Utterance(Speaker.USER, text, 1), kb)


class TestLoadKb:
    def test_bundled_fixture(self, kb):
        assert len(kb.heroes) >= 5
        assert len(kb.movies) >= 4
        assert sum(m.is_promoted for m in kb.movies.values()) == 1

    def test_two_promoted_rejected(self, tmp_path):
        data = {
            "heroes": [],
            "movies": [
                {"id": "movie:a", "title": "A", "year": 2000, "is_promoted": True},
                {"id": "movie:b", "title": "B", "year": 2001, "is_promoted": True},
            ],
        }
        path = tmp_path / "kb.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError):
            load_kb(path)

    def test_zero_promoted_rejected(self, tmp_path):
        data = {"heroes": [], "movies": [
            {"id": "movie:a", "title": "A", "year": 2000}]}
        path = tmp_path / "kb.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError):
            load_kb(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_kb(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "kb.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_kb(path)

    def test_dangling_hero_reference(self, tmp_path):
        data = {"heroes": [], "movies": [
            {"id": "movie:a", "title": "A", "year": 2000, "is_promoted": True,
             "related_hero_ids": ["hero:ghost"]}]}
        path = tmp_path / "kb.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError):
            load_kb(path)


class TestProgress:
    def test_fresh(self):
        progress = fresh_progress()
        assert progress.delivered == ()
        assert set(progress.pending) == set(TASK_STRATEGIES)
        assert not progress.task_success

    def test_mark_delivered(self):
        progress = mark_delivered(fresh_progress(), StrategyId.ELICIT_MOVIE_TYPE)
        assert progress.delivered == (StrategyId.ELICIT_MOVIE_TYPE,)
        assert StrategyId.ELICIT_MOVIE_TYPE not in progress.pending

    def test_all_eight_any_order(self):
        progress = fresh_progress()
        for strategy in reversed(TASK_STRATEGIES):
            progress = mark_delivered(progress, strategy)
        assert progress.task_success

    def test_double_delivery_rejected(self):
        progress = mark_delivered(fresh_progress(), StrategyId.ELICIT_MOVIE_TYPE)
        with pytest.raises(AlreadyDelivered):
            mark_delivered(progress, StrategyId.ELICIT_MOVIE_TYPE)

    def test_yes_answer_skips_promotion(self):
        progress = mark_delivered(fresh_progress(), StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.YES)
        assert StrategyId.PROMOTE_THE_MOVIE in progress.delivered

    def test_no_answer_keeps_promotion_pending(self):
        progress = mark_delivered(fresh_progress(), StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.NO)
        assert StrategyId.PROMOTE_THE_MOVIE in progress.pending


class TestGenerateTaskCandidates:
    def test_fresh_progress_includes_elicit(self, kb):
        cands = generate_task_candidates(
            state_with(), nlu_for("hello", kb), kb, fresh_progress())
        by_strategy = {c.strategy: c for c in cands}
        assert by_strategy[StrategyId.ELICIT_MOVIE_TYPE].text == \
            "Do you like superhero movies or Disney movies?"
        assert by_strategy[StrategyId.INTRODUCE_FAVORITE_SUPERHERO].text == \
            "My favorite superhero is Captain America."
        assert StrategyId.GROUND_ON_SUPERHERO not in by_strategy
        assert StrategyId.PROMOTE_THE_MOVIE not in by_strategy
        assert StrategyId.INVITE_TO_MOVIE not in by_strategy

    def test_grounding_on_detected_hero(self, kb):
        nlu = nlu_for("I love Iron Man", kb)
        cands = generate_task_candidates(
            state_with(), nlu, kb, fresh_progress(),
            mentions=("hero:iron_man",))
        by_strategy = {c.strategy: c for c in cands}
        assert by_strategy[StrategyId.GROUND_ON_SUPERHERO].text == \
            "I really like Iron Man's blue eyes."
        assert by_strategy[StrategyId.GROUND_ON_SUPERHERO].gate_just_met

    def test_grounding_rotates_attributes(self, kb):
        nlu = nlu_for("I love Iron Man", kb)
        cands = generate_task_candidates(
            state_with(), nlu, kb, fresh_progress(),
            mentions=("hero:iron_man",), grounding_counts={"hero:iron_man": 1})
        by_strategy = {c.strategy: c for c in cands}
        assert "real name" in by_strategy[StrategyId.GROUND_ON_SUPERHERO].text

    def test_all_delivered_yields_nothing(self, kb):
        progress = fresh_progress()
        for strategy in TASK_STRATEGIES:
            progress = mark_delivered(progress, strategy)
        assert generate_task_candidates(
            state_with(), nlu_for("hello", kb), kb, progress) == []

    def test_promotion_gated_on_no_answer(self, kb):
        progress = mark_delivered(fresh_progress(), StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.NO)
        cands = generate_task_candidates(
            state_with(StrategyId.SAW_THE_MOVIE), nlu_for("No, not yet", kb),
            kb, progress)
        strategies = {c.strategy for c in cands}
        assert StrategyId.PROMOTE_THE_MOVIE in strategies
        assert StrategyId.INVITE_TO_MOVIE not in strategies

    def test_invite_after_promotion(self, kb):
        progress = fresh_progress()
        progress = mark_delivered(progress, StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.NO)
        progress = mark_delivered(progress, StrategyId.PROMOTE_THE_MOVIE)
        cands = generate_task_candidates(
            state_with(StrategyId.PROMOTE_THE_MOVIE), nlu_for("ok", kb), kb, progress)
        strategies = {c.strategy for c in cands}
        assert StrategyId.INVITE_TO_MOVIE in strategies

    def test_invite_after_yes_answer_without_promotion(self, kb):
        progress = mark_delivered(fresh_progress(), StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.YES)
        cands = generate_task_candidates(
            state_with(StrategyId.SAW_THE_MOVIE), nlu_for("yes I did", kb), kb, progress)
        strategies = {c.strategy for c in cands}
        assert StrategyId.INVITE_TO_MOVIE in strategies
        assert StrategyId.PROMOTE_THE_MOVIE not in strategies

    def test_never_returns_delivered(self, kb):
        progress = mark_delivered(fresh_progress(), StrategyId.ELICIT_MOVIE_TYPE)
        cands = generate_task_candidates(
            state_with(), nlu_for("I like Iron Man and The Avengers", kb), kb,
            progress, mentions=("hero:iron_man", "movie:the_avengers"))
        assert StrategyId.ELICIT_MOVIE_TYPE not in {c.strategy for c in cands}

    def test_texts_filled_and_non_empty(self, kb):
        nlu = nlu_for("I like Spider-man and The Avengers", kb)
        progress = mark_delivered(fresh_progress(), StrategyId.SAW_THE_MOVIE)
        progress = record_saw_answer(progress, Polarity.NO)
        cands = generate_task_candidates(
            state_with(StrategyId.SAW_THE_MOVIE), nlu, kb, progress,
            mentions=("hero:spiderman", "movie:the_avengers"))
        assert cands
        for cand in cands:
            assert cand.text
            assert "{" not in cand.text and "}" not in cand.text

    def test_gating_monotone_cooperative_user(self, kb):
        """A user who mentions a hero and a movie and answers everything can
        receive all eight templates."""
        progress = fresh_progress()
        ever_applicable = set()
        nlu = nlu_for("I like Iron Man and I saw The Avengers", kb)
        mentions = ("hero:iron_man", "movie:the_avengers")
        last = None
        for _ in range(12):
            cands = generate_task_candidates(
                state_with(last), nlu, kb, progress, mentions=mentions)
            if not cands:
                break
            chosen = cands[0]
            ever_applicable.add(chosen.strategy)
            progress = mark_delivered(progress, chosen.strategy)
            if chosen.strategy is StrategyId.SAW_THE_MOVIE:
                progress = record_saw_answer(progress, Polarity.NO)
            last = chosen.strategy
        assert ever_applicable == set(TASK_STRATEGIES)
        assert progress.task_success


class TestRelevantMovie:
    def test_prefers_user_mentioned_movie(self, kb):
        movie = relevant_movie(kb, ("movie:fantastic_four_2005", "hero:iron_man"))
        assert movie.id == "movie:fantastic_four_2005"

    def test_falls_back_to_hero_related(self, kb):
        movie = relevant_movie(kb, ("hero:thor",))
        assert movie.id in ("movie:the_avengers", "movie:thor_movie")

    def test_skips_promoted(self, kb):
        movie = relevant_movie(kb, ("movie:captain_america_civil_war",))
        assert movie is None

    def test_none_without_mentions(self, kb):
        assert relevant_movie(kb, ()) is None
