"""Conversation engine: the per-turn pipeline shared by training episodes
and the live chat service.

Each turn: the user utterance goes through understanding, both generators
propose candidates, the policy picks one, and the transcript, task progress,
and user profile advance. Training episodes additionally run the
temporal-difference update and credit the delayed reward at episode end.
"""

from __future__ import annotations

import random
import zlib
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Conversation,
    DialogError,
    EndReason,
    ResponseCandidate,
    Speaker,
    StrategyId,
    Utterance,
    append_turn,
    finish,
)
from .kb import KnowledgeBase, default_kb
from .nontaskgen import (
    RetrievalIndex,
    UserProfile,
    default_interview_index,
    default_subtitle_index,
    generate_nontask_candidates,
)
from .policy import (
    DialogState,
    PolicyConfig,
    QTable,
    Variant,
    constrained_reward,
    featurize,
    mask_candidates,
    q_update,
    select_action,
)
from .reward import (
    HeuristicAppropriateness,
    Phase,
    RewardVector,
    combine,
    episode_reward_vector,
)
from .simulator import Persona, respond
from .taskgen import (
    TaskProgress,
    fresh_progress,
    generate_task_candidates,
    mark_delivered,
    record_saw_answer,
)
from .understanding import UnderstandingResult, analyze, topic_of_text

OPENER_TEXT = "Hello, I really like movies. How about we talk about movies?"
OPENER_STRATEGY = StrategyId.ACTIVE_PARTICIPATION

FAREWELL_TOKENS = {"bye", "goodbye"}


class SimulatorFailure(DialogError):
    """The simulator kept repeating itself past the restart budget."""

    def __init__(self, message: str, restarts: int):
        super().__init__(message)
        self.restarts = restarts


@dataclass
class SessionState:
    """Mutable per-conversation state outside the transcript itself."""

    conversation: Conversation
    progress: TaskProgress
    profile: UserProfile
    grounding_counts: dict[str, int] = field(default_factory=dict)
    last_nlu: Optional[UnderstandingResult] = None


def open_conversation(conv_id: str, kb: Optional[KnowledgeBase] = None) -> SessionState:
    """Start a conversation with the fixed opening greeting."""
    kb = kb or default_kb()
    opener = Utterance(
        Speaker.SYSTEM, OPENER_TEXT, 1,
        strategy=OPENER_STRATEGY, topic=topic_of_text(OPENER_TEXT, kb),
    )
    conv = append_turn(Conversation(id=conv_id), opener)
    return SessionState(conversation=conv, progress=fresh_progress(), profile=UserProfile())


def observe_user(session: SessionState, text: str, kb: KnowledgeBase) -> UnderstandingResult:
    """Append a user turn and update understanding-derived state."""
    utt = Utterance(
        Speaker.USER, text, len(session.conversation.utterances) + 1,
        topic=topic_of_text(text, kb),
    )
    last_system = session.conversation.last_by(Speaker.SYSTEM)
    session.conversation = append_turn(session.conversation, utt)
    nlu = analyze(utt, kb)
    session.profile.observe(nlu)
    session.last_nlu = nlu
    if last_system is not None and last_system.strategy is StrategyId.SAW_THE_MOVIE:
        session.progress = record_saw_answer(session.progress, nlu.polarity)
    return nlu


@dataclass(frozen=True)
class StepOutcome:
    state: DialogState
    candidate: ResponseCandidate
    reward: float
    appropriateness: int


class DialogEngine:
    """Bundles the generators, estimator, and policy for one variant."""

    def __init__(
        self,
        config: PolicyConfig,
        qtable: QTable,
        kb: Optional[KnowledgeBase] = None,
        interview_index: Optional[RetrievalIndex] = None,
        subtitle_index: Optional[RetrievalIndex] = None,
    ):
        self.config = config
        self.qtable = qtable
        self.kb = kb or default_kb()
        self.interview_index = interview_index or default_interview_index()
        self.subtitle_index = subtitle_index or default_subtitle_index()
        self.appropriateness = HeuristicAppropriateness(self.kb)

    def candidates_for(self, session: SessionState, state: DialogState) -> list[ResponseCandidate]:
        nlu = session.last_nlu
        assert nlu is not None, "candidates require a preceding user turn"
        user_utt = session.conversation.last_by(Speaker.USER)
        assert user_utt is not None
        cands = generate_task_candidates(
            state, nlu, self.kb, session.progress,
            mentions=session.profile.mention_ids(),
            grounding_counts=session.grounding_counts,
        )
        if self.config.variant is not Variant.TASK_GLOBAL:
            cands += generate_nontask_candidates(
                state, nlu, user_utt, self.kb, session.profile,
                self.interview_index, self.subtitle_index,
                grounding_counts=session.grounding_counts,
            )
        return cands

    def system_step(
        self,
        session: SessionState,
        epsilon: float,
        rng: random.Random,
    ) -> Optional[StepOutcome]:
        """Generate, select, and commit one system turn.

        Returns None when no candidate is applicable (the task-only variant
        can exhaust its templates), leaving the conversation untouched.
        """
        conv = session.conversation
        context = conv.last_by(Speaker.USER)
        prev_system = conv.last_by(Speaker.SYSTEM)
        prev_strategy = prev_system.strategy if prev_system else None

        prelim = featurize(
            conv, self.config.variant,
            coherence_high=False, task_progress_count=session.progress.count,
        )
        candidates = self.candidates_for(session, prelim)
        if not candidates:
            return None
        scores = [
            self.appropriateness.score(context, cand, prev_strategy)
            for cand in candidates
        ]
        state = featurize(
            conv, self.config.variant,
            coherence_high=max(scores) == 2,
            task_progress_count=session.progress.count,
        )
        # constraints judge the conversation's actual history, so they are
        # evaluated on an unwindowed state even when the policy's own state
        # is local; a myopic policy still pays for overuse it cannot see
        if self.config.variant is Variant.MIX_LOCAL:
            constraint_state = featurize(
                conv, Variant.MIX_GLOBAL,
                coherence_high=max(scores) == 2,
                task_progress_count=session.progress.count,
            )
        else:
            constraint_state = state
        if self.config.constraint_mode == "mask":
            kept = mask_candidates(constraint_state, candidates)
            scores = [scores[candidates.index(c)] for c in kept]
            candidates = kept
        chosen = select_action(self.qtable, state, candidates, epsilon, rng)
        app = scores[candidates.index(chosen)]

        utt = Utterance(
            Speaker.SYSTEM, chosen.text, len(conv.utterances) + 1,
            strategy=chosen.strategy, topic=topic_of_text(chosen.text, self.kb),
        )
        session.conversation = append_turn(conv, utt)
        if chosen.strategy.is_task:
            session.progress = mark_delivered(session.progress, chosen.strategy)
        if chosen.strategy in (StrategyId.GROUND_ON_SUPERHERO, StrategyId.GROUNDING) \
                and chosen.about_entity:
            session.grounding_counts[chosen.about_entity] = (
                session.grounding_counts.get(chosen.about_entity, 0) + 1)

        base = self.config.weights.appropriateness * app
        reward = constrained_reward(base, constraint_state, chosen.strategy, self.config)
        return StepOutcome(state=state, candidate=chosen, reward=reward, appropriateness=app)


@dataclass
class EpisodeResult:
    conversation: Conversation
    rewards: RewardVector
    qtable: QTable
    task_success: bool
    restarts: int
    app_scores: tuple[int, ...]
    updates: int
    max_update_delta: float


def _stable_hash(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def run_episode(
    engine: DialogEngine,
    persona: Persona,
    episode_id: str,
    *,
    epsilon: float = 0.0,
    learn: bool = False,
    visit_counts: Optional[dict] = None,
    alpha_decay: float = 0.0,
    rng: Optional[random.Random] = None,
    max_restarts: int = 20,
) -> EpisodeResult:
    """Run one full conversation against the simulator.

    The episode restarts from scratch whenever the simulator repeats its own
    previous utterance verbatim; past the restart budget, SimulatorFailure is
    raised. With learn=True each transition updates the Q table immediately
    and the delayed reward is credited to the final transition.
    """
    config = engine.config
    rng = rng or random.Random(_stable_hash(episode_id) ^ persona.seed)
    restarts = 0

    while True:
        attempt_id = f"{episode_id}-a{restarts}"
        session = open_conversation(attempt_id, engine.kb)
        pending: Optional[StepOutcome] = None
        transitions: list[tuple[StepOutcome, Optional[DialogState], float, bool]] = []
        app_scores: list[int] = []
        updates = 0
        max_delta = 0.0
        repeated = False

        def apply_update(outcome: StepOutcome, next_state, reward, terminal: bool):
            """One learning update; returns the change it caused. The change
            is folded into the episode's convergence delta only for pairs
            that had been visited before, so the novelty spike of a first
            initialization does not mask value stabilization."""
            nonlocal updates, max_delta
            alpha = config.alpha
            revisit = True
            if visit_counts is not None:
                key = (outcome.state, outcome.candidate.strategy)
                seen = visit_counts.get(key, 0)
                revisit = seen > 0
                alpha = config.alpha / (1.0 + alpha_decay * seen)
                visit_counts[key] = seen + 1
            before = engine.qtable.get(outcome.state, outcome.candidate.strategy)
            q_update(engine.qtable, outcome.state, outcome.candidate.strategy,
                     reward, next_state, config, terminal=terminal, alpha=alpha)
            after = engine.qtable.get(outcome.state, outcome.candidate.strategy)
            updates += 1
            if revisit:
                max_delta = max(max_delta, abs(after - before))

        def learn_step(outcome: StepOutcome, next_state, reward, terminal: bool):
            if not learn:
                return
            transitions.append((outcome, next_state, reward, terminal))
            apply_update(outcome, next_state, reward, terminal)

        def propagate_end_reward():
            """Replay the episode's transitions newest-first so the delayed
            reward credited to the final pair flows back through the chain."""
            if not learn:
                return
            for outcome, next_state, reward, terminal in reversed(transitions):
                apply_update(outcome, next_state, reward, terminal)

        def finish_episode(reason: EndReason):
            nonlocal pending
            session.conversation = finish(session.conversation, reason)
            if pending is not None:
                end_bonus = combine(
                    episode_reward_vector(session.conversation),
                    config.weights, Phase.EPISODE_END)
                learn_step(pending, None, pending.reward + end_bonus, True)
                pending = None
            propagate_end_reward()

        while True:
            prev_user = session.conversation.last_by(Speaker.USER)
            reply = respond(persona, session.conversation, engine.kb)
            if prev_user is not None and reply.text == prev_user.text:
                repeated = True
                break
            observe_user(session, reply.text, engine.kb)

            if set(reply.tokens) & FAREWELL_TOKENS:
                finish_episode(
                    EndReason.TASK_COMPLETE if session.progress.task_success
                    else EndReason.USER_QUIT)
                break
            if len(session.conversation.utterances) >= config.max_turns:
                finish_episode(EndReason.MAX_TURNS)
                break

            outcome = engine.system_step(session, epsilon, rng)
            if outcome is None:
                finish_episode(
                    EndReason.TASK_COMPLETE if session.progress.task_success
                    else EndReason.USER_QUIT)
                break
            if pending is not None:
                learn_step(pending, outcome.state, pending.reward, False)
            pending = outcome
            app_scores.append(outcome.appropriateness)

            if len(session.conversation.utterances) >= config.max_turns:
                finish_episode(EndReason.MAX_TURNS)
                break

        if repeated:
            restarts += 1
            if restarts > max_restarts:
                raise SimulatorFailure(
                    f"simulator repeated itself in {restarts} consecutive attempts",
                    restarts=restarts)
            continue

        return EpisodeResult(
            conversation=session.conversation,
            rewards=episode_reward_vector(session.conversation),
            qtable=engine.qtable,
            task_success=session.progress.task_success,
            restarts=restarts,
            app_scores=tuple(app_scores),
            updates=updates,
            max_update_delta=max_delta,
        )
