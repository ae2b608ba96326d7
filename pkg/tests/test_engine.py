import random

import pytest

from movietalk.core import EndReason, Speaker, StrategyId
from movietalk.engine import (
    OPENER_TEXT,
    DialogEngine,
    SimulatorFailure,
    open_conversation,
    run_episode,
)
from movietalk.policy import PolicyConfig, QTable, Variant
from movietalk.simulator import Persona


def cooperative_persona(**kw):
    defaults = dict(
        likes_superheroes=True, likes_disney=False, seen_promoted_movie=False,
        accepts_invitation=True, chattiness=0.0, repeat_prob=0.0,
        favorite_hero="hero:iron_man", seed=11, patience=99,
        boredom_quit_prob=0.0, forthcoming=1.0,
    )
    defaults.update(kw)
    return Persona(**defaults)


def engine_for(variant, **config_kw):
    config = PolicyConfig(variant=variant, **config_kw)
    return DialogEngine(config, QTable(actions=variant.actions))


class TestOpenConversation:
    def test_opener_text_and_strategy(self):
        session = open_conversation("c1")
        opener = session.conversation.utterances[0]
        assert opener.text == OPENER_TEXT
        assert opener.speaker is Speaker.SYSTEM
        assert opener.strategy is StrategyId.ACTIVE_PARTICIPATION


class TestRunEpisode:
    def test_cooperative_task_global_completes(self):
        engine = engine_for(Variant.TASK_GLOBAL)
        result = run_episode(engine, cooperative_persona(), "coop-1",
                             epsilon=0.0, rng=random.Random(0))
        assert result.task_success
        assert result.conversation.end_reason is EndReason.TASK_COMPLETE
        assert len(result.conversation) <= 2 * 8 + 2
        task_turns = [u for u in result.conversation.system_turns()
                      if u.strategy and u.strategy.is_task]
        assert len({u.strategy for u in task_turns}) >= 7  # promo may be skipped

    def test_task_global_never_exceeds_nine_system_turns(self):
        engine = engine_for(Variant.TASK_GLOBAL)
        for seed in range(30):
            persona = cooperative_persona(seed=seed, boredom_quit_prob=0.3, patience=4)
            result = run_episode(engine, persona, f"tg-{seed}",
                                 epsilon=0.0, rng=random.Random(seed))
            assert len(result.conversation.system_turns()) <= 9

    def test_max_turns_exact(self):
        engine = engine_for(Variant.MIX_GLOBAL, max_turns=4)
        persona = cooperative_persona()
        result = run_episode(engine, persona, "short-1",
                             epsilon=0.0, rng=random.Random(0))
        assert len(result.conversation) == 4
        assert result.conversation.end_reason is EndReason.MAX_TURNS

    def test_repeat_prob_one_raises_after_restart_budget(self):
        engine = engine_for(Variant.MIX_GLOBAL)
        persona = cooperative_persona(repeat_prob=1.0)
        with pytest.raises(SimulatorFailure) as exc_info:
            run_episode(engine, persona, "rep-1", epsilon=0.0,
                        rng=random.Random(0), max_restarts=3)
        assert exc_info.value.restarts == 4

    def test_restart_counter_incremented(self):
        engine = engine_for(Variant.MIX_GLOBAL, max_turns=8)
        saw_restart = False
        for seed in range(40):
            persona = cooperative_persona(seed=seed, repeat_prob=0.5)
            result = run_episode(engine, persona, f"restart-{seed}",
                                 epsilon=0.0, rng=random.Random(seed))
            if result.restarts > 0:
                saw_restart = True
                break
        assert saw_restart

    def test_learning_updates_table(self):
        engine = engine_for(Variant.MIX_GLOBAL)
        result = run_episode(engine, cooperative_persona(), "learn-1",
                             epsilon=0.5, learn=True, visit_counts={},
                             rng=random.Random(1))
        assert result.updates > 0
        assert len(engine.qtable) > 0
        assert result.max_update_delta > 0

    def test_no_learning_without_flag(self):
        engine = engine_for(Variant.MIX_GLOBAL)
        result = run_episode(engine, cooperative_persona(), "frozen-1",
                             epsilon=0.0, learn=False, rng=random.Random(1))
        assert result.updates == 0
        assert len(engine.qtable) == 0

    def test_deterministic_given_seeds(self):
        def once():
            engine = engine_for(Variant.MIX_GLOBAL)
            result = run_episode(engine, cooperative_persona(chattiness=0.6),
                                 "det-1", epsilon=0.3, learn=True,
                                 visit_counts={}, rng=random.Random(99))
            return result.conversation.to_json(), sorted(
                (s.key(), a.value, v) for (s, a), v in engine.qtable.items())
        assert once() == once()

    def test_transcript_wellformed(self):
        engine = engine_for(Variant.MIX_GLOBAL)
        result = run_episode(engine, cooperative_persona(chattiness=0.8, seed=3),
                             "wf-1", epsilon=0.5, rng=random.Random(3))
        conv = result.conversation
        for i, utt in enumerate(conv.utterances, start=1):
            assert utt.turn_index == i
            assert utt.topic is not None
        for a, b in zip(conv.utterances, conv.utterances[1:]):
            assert a.speaker is not b.speaker
        assert conv.ended

    def test_mix_has_nontask_candidates_available(self):
        """A mix engine always has at least the retrieval candidates."""
        engine = engine_for(Variant.MIX_GLOBAL)
        session = open_conversation("cand-1", engine.kb)
        from movietalk.engine import observe_user
        from movietalk.policy import featurize
        observe_user(session, "qwerty zzz", engine.kb)
        state = featurize(session.conversation, Variant.MIX_GLOBAL,
                          coherence_high=False, task_progress_count=0)
        cands = engine.candidates_for(session, state)
        assert any(not c.strategy.is_task for c in cands)

    def test_user_wraps_up_after_answering_invite(self):
        engine = engine_for(Variant.MIX_GLOBAL)
        persona = cooperative_persona(accepts_invitation=False, seed=21)
        result = run_episode(engine, persona, "decline-1",
                             epsilon=0.2, rng=random.Random(0))
        conv = result.conversation
        invites = [u for u in conv.system_turns()
                   if u.strategy is StrategyId.INVITE_TO_MOVIE]
        assert len(invites) <= 1
        assert conv.ended
        if invites:
            # the user stays at most a few exchanges after answering
            after = len(conv) - invites[0].turn_index
            assert after <= 12
