"""Training and evaluation harness.

Trains the three system variants against the simulator, detects convergence
with a sliding-window criterion, evaluates frozen tables greedily, and emits
deterministic text/CSV reports suitable for regression diffing.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .core import DialogError, Speaker
from .engine import DialogEngine, run_episode
from .kb import KnowledgeBase, default_kb, load_kb
from .nontaskgen import (
    RetrievalIndex,
    build_index,
    default_interview_index,
    default_subtitle_index,
)
from .policy import ConstraintPenalties, PolicyConfig, QTable, Variant
from .reward import RewardWeights
from .simulator import PersonaMarginals, sample_persona


class ConfigError(DialogError):
    """The experiment configuration is invalid."""


DEFAULT_BUDGETS = {
    Variant.TASK_GLOBAL: 8000,
    Variant.MIX_LOCAL: 20000,
    Variant.MIX_GLOBAL: 60000,
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 7
    episode_budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    eval_episodes: int = 500
    convergence_window: int = 100
    convergence_threshold: float = 1.5
    alpha_visit_decay: float = 0.01
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    marginals: PersonaMarginals = field(default_factory=PersonaMarginals)
    kb_path: Optional[str] = None
    interview_corpus: Optional[str] = None
    subtitle_corpus: Optional[str] = None

    def validate(self) -> None:
        for variant, budget in self.episode_budgets.items():
            if budget < self.convergence_window:
                raise ConfigError(
                    f"budget for {Variant(variant).value} ({budget}) is below "
                    f"the convergence window ({self.convergence_window})")
        if self.convergence_threshold <= 0:
            raise ConfigError("convergence threshold must be positive")

    def budget_for(self, variant: Variant) -> int:
        return int(self.episode_budgets[variant])

    def policy_for(self, variant: Variant) -> PolicyConfig:
        return replace(self.policy, variant=variant)


def _weights_from(d: dict) -> RewardWeights:
    return RewardWeights(
        appropriateness=d.get("appropriateness", 1.0),
        depth=d.get("depth", 2.0),
        info=d.get("info", 0.05),
        length=d.get("length", 0.25),
    )


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from parsed JSON, applying defaults for absent keys."""
    policy_d = data.get("policy", {})
    penalties_d = policy_d.get("penalties", {})
    policy = PolicyConfig(
        gamma=policy_d.get("gamma", 0.95),
        alpha=policy_d.get("alpha", 0.5),
        epsilon_start=policy_d.get("epsilon_start", 0.9),
        epsilon_end=policy_d.get("epsilon_end", 0.05),
        epsilon_decay_fraction=policy_d.get("epsilon_decay_fraction", 0.6),
        weights=_weights_from(data.get("reward_weights", {})),
        penalties=ConstraintPenalties(
            repeat_last=penalties_d.get("repeat_last", 5.0),
            overused_nontask=penalties_d.get("overused_nontask", 3.0),
            task_out_of_order=penalties_d.get("task_out_of_order", 10.0),
            stalled_task=penalties_d.get("stalled_task", 2.0),
        ),
        constraint_mode=policy_d.get("constraint_mode", "penalty"),
        max_turns=policy_d.get("max_turns", 40),
    )
    persona_d = data.get("persona", {})
    marginals = PersonaMarginals(
        likes_superheroes=persona_d.get("likes_superheroes", 0.42),
        likes_disney=persona_d.get("likes_disney", 0.22),
        seen_promoted=persona_d.get("seen_promoted", 0.41),
        accepts_invitation=persona_d.get("accepts_invitation", 0.80),
        chattiness=persona_d.get("chattiness", 0.6),
        repeat_prob=persona_d.get("repeat_prob", 0.02),
        patience=persona_d.get("patience", 7),
        boredom_quit_prob=persona_d.get("boredom_quit_prob", 0.12),
        forthcoming=persona_d.get("forthcoming", 0.4),
    )
    budgets = dict(DEFAULT_BUDGETS)
    for name, value in data.get("episode_budgets", {}).items():
        budgets[Variant(name)] = int(value)
    config = ExperimentConfig(
        seed=data.get("seed", 7),
        episode_budgets=budgets,
        eval_episodes=data.get("eval_episodes", 500),
        convergence_window=data.get("convergence", {}).get("window", 100),
        convergence_threshold=data.get("convergence", {}).get("threshold", 1.5),
        alpha_visit_decay=data.get("alpha_visit_decay", 0.01),
        policy=policy,
        marginals=marginals,
        kb_path=data.get("paths", {}).get("kb"),
        interview_corpus=data.get("paths", {}).get("interview_corpus"),
        subtitle_corpus=data.get("paths", {}).get("subtitle_corpus"),
    )
    config.validate()
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    return config_from_dict(data)


def _resources(config: ExperimentConfig) -> tuple[KnowledgeBase, RetrievalIndex, RetrievalIndex]:
    kb = load_kb(config.kb_path) if config.kb_path else default_kb()
    interview = (build_index(config.interview_corpus)
                 if config.interview_corpus else default_interview_index())
    subtitles = (build_index(config.subtitle_corpus)
                 if config.subtitle_corpus else default_subtitle_index())
    return kb, interview, subtitles


@dataclass
class TrainResult:
    qtable: QTable
    episodes_to_convergence: int
    converged: bool
    episodes_run: int
    restarts: int

    @property
    def episodes_including_restarts(self) -> int:
        return self.episodes_run + self.restarts


def train(config: ExperimentConfig, variant: Variant) -> TrainResult:
    """Train one variant until the convergence criterion fires or the budget
    is exhausted.

    Convergence: the largest single Q-value change observed across a sliding
    window of convergence_window episodes drops below the threshold. The
    learning rate decays per state-action visit so the criterion can fire
    under a stochastic simulator.
    """
    config.validate()
    kb, interview, subtitles = _resources(config)
    policy_config = config.policy_for(variant)
    qtable = QTable(actions=variant.actions)
    engine = DialogEngine(policy_config, qtable, kb, interview, subtitles)

    budget = config.budget_for(variant)
    seed_stream = random.Random(config.seed * 1_000_003 + hash_variant(variant))
    visit_counts: dict = {}
    deltas: deque[float] = deque(maxlen=config.convergence_window)
    restarts = 0
    converged_at: Optional[int] = None

    for episode in range(budget):
        persona = sample_persona(
            seed_stream.randrange(2**31), config.marginals, kb)
        epsilon = policy_config.epsilon_at(episode, budget)
        result = run_episode(
            engine, persona, f"train-{variant.value}-{episode}",
            epsilon=epsilon, learn=True,
            visit_counts=visit_counts, alpha_decay=config.alpha_visit_decay,
            rng=random.Random(seed_stream.randrange(2**31)),
        )
        restarts += result.restarts
        deltas.append(result.max_update_delta)
        if (len(deltas) == config.convergence_window
                and max(deltas) < config.convergence_threshold):
            converged_at = episode + 1
            break

    episodes_run = converged_at if converged_at is not None else budget
    return TrainResult(
        qtable=qtable,
        episodes_to_convergence=episodes_run,
        converged=converged_at is not None,
        episodes_run=episodes_run,
        restarts=restarts,
    )


def hash_variant(variant: Variant) -> int:
    return {Variant.TASK_GLOBAL: 1, Variant.MIX_LOCAL: 2, Variant.MIX_GLOBAL: 3}[variant]


@dataclass(frozen=True)
class EvaluationRow:
    variant: str
    app_rate: float            # % of system turns scored fully appropriate
    deep_pct: Optional[float]  # % of conversations that went deep; None = NA
    info_gain: float
    conv_len: float
    task_success: float        # %
    episodes_to_convergence: int
    converged: bool
    consecutive_repeat_rate: float  # % of adjacent system-turn pairs sharing a strategy
    max_system_turns: int


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[EvaluationRow, ...]
    eval_episodes: int

    def to_csv(self) -> str:
        header = ("variant,app_rate,conv_depth_pct,info_gain,conv_len,"
                  "task_success,episodes_to_convergence,converged,"
                  "consecutive_repeat_rate,max_system_turns")
        lines = [header]
        for r in self.rows:
            depth = "NA" if r.deep_pct is None else f"{r.deep_pct:.2f}"
            lines.append(
                f"{r.variant},{r.app_rate:.2f},{depth},{r.info_gain:.2f},"
                f"{r.conv_len:.2f},{r.task_success:.2f},"
                f"{r.episodes_to_convergence},{int(r.converged)},"
                f"{r.consecutive_repeat_rate:.2f},{r.max_system_turns}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = (f"{'System':<12} {'App':>7} {'ConvDepth':>10} {'InfoGain':>9} "
                  f"{'ConvLen':>8} {'Success':>8} {'Episodes':>9}")
        lines = [header, "-" * len(header)]
        for r in self.rows:
            depth = "NA" if r.deep_pct is None else f"{r.deep_pct:.1f}%"
            lines.append(
                f"{r.variant:<12} {r.app_rate:>6.1f}% {depth:>10} "
                f"{r.info_gain:>9.1f} {r.conv_len:>8.1f} "
                f"{r.task_success:>7.1f}% {r.episodes_to_convergence:>9}")
        return "\n".join(lines) + "\n"


def evaluate(
    qtable: QTable,
    config: ExperimentConfig,
    variant: Variant,
    n_episodes: Optional[int] = None,
    episodes_to_convergence: int = 0,
    converged: bool = True,
) -> EvaluationRow:
    """Greedy evaluation of a frozen table.

    Every variant sees the same persona sequence (derived from the seed), so
    rows are directly comparable.
    """
    n = config.eval_episodes if n_episodes is None else n_episodes
    if n <= 0:
        raise ConfigError("evaluation needs a positive episode count")
    kb, interview, subtitles = _resources(config)
    engine = DialogEngine(config.policy_for(variant), qtable, kb, interview, subtitles)

    persona_stream = random.Random(config.seed * 7_777_777 + 13)
    persona_seeds = [persona_stream.randrange(2**31) for _ in range(n)]

    app2 = app_total = 0
    deep_count = 0
    info_sum = 0
    len_sum = 0
    success = 0
    repeat_pairs = 0
    total_pairs = 0
    max_system_turns = 0

    for i, pseed in enumerate(persona_seeds):
        persona = sample_persona(pseed, config.marginals, kb)
        result = run_episode(
            engine, persona, f"eval-{variant.value}-{i}",
            epsilon=0.0, learn=False,
            rng=random.Random(config.seed * 31 + i),
        )
        conv = result.conversation
        app2 += sum(1 for s in result.app_scores if s == 2)
        app_total += len(result.app_scores)
        deep_count += int(result.rewards.deep)
        info_sum += result.rewards.info_gain
        len_sum += result.rewards.conv_len
        success += int(result.task_success)
        system_turns = [u for u in conv.utterances if u.speaker is Speaker.SYSTEM]
        max_system_turns = max(max_system_turns, len(system_turns))
        for a, b in zip(system_turns, system_turns[1:]):
            total_pairs += 1
            if a.strategy is b.strategy:
                repeat_pairs += 1

    return EvaluationRow(
        variant=variant.value,
        app_rate=100.0 * app2 / app_total if app_total else 0.0,
        deep_pct=None if variant is Variant.TASK_GLOBAL else 100.0 * deep_count / n,
        info_gain=info_sum / n,
        conv_len=len_sum / n,
        task_success=100.0 * success / n,
        episodes_to_convergence=episodes_to_convergence,
        converged=converged,
        consecutive_repeat_rate=100.0 * repeat_pairs / total_pairs if total_pairs else 0.0,
        max_system_turns=max_system_turns,
    )


@dataclass
class CompareResult:
    report: EvaluationReport
    tables: dict[Variant, QTable]
    train_results: dict[Variant, TrainResult]


def compare(config: ExperimentConfig) -> CompareResult:
    """Train and evaluate all three variants with one config."""
    rows = []
    tables: dict[Variant, QTable] = {}
    train_results: dict[Variant, TrainResult] = {}
    for variant in (Variant.TASK_GLOBAL, Variant.MIX_LOCAL, Variant.MIX_GLOBAL):
        trained = train(config, variant)
        tables[variant] = trained.qtable
        train_results[variant] = trained
        rows.append(evaluate(
            trained.qtable, config, variant,
            episodes_to_convergence=trained.episodes_to_convergence,
            converged=trained.converged,
        ))
    return CompareResult(
        report=EvaluationReport(rows=tuple(rows), eval_episodes=config.eval_episodes),
        tables=tables,
        train_results=train_results,
    )
