"""Train a small mixed-content policy and print a greedy conversation.

Budgets here are tiny so the demo finishes in seconds; expect rough behavior
compared to the defaults used by `movietalk compare`.
"""

import random

from movietalk.engine import DialogEngine, run_episode
from movietalk.harness import ExperimentConfig, train
from movietalk.policy import Variant
from movietalk.simulator import sample_persona

config = ExperimentConfig(
    seed=7,
    episode_budgets={Variant.TASK_GLOBAL: 400, Variant.MIX_LOCAL: 400,
                     Variant.MIX_GLOBAL: 1500},
    eval_episodes=30,
)

print("training a MixGlobal policy on 1500 simulated conversations...")
trained = train(config, Variant.MIX_GLOBAL)
print(f"   stopped after {trained.episodes_to_convergence} episodes "
      f"({trained.restarts} restarts), {len(trained.qtable)} table entries\n")

engine = DialogEngine(config.policy_for(Variant.MIX_GLOBAL), trained.qtable)
persona = sample_persona(123, config.marginals)
result = run_episode(engine, persona, "demo-chat", epsilon=0.0,
                     rng=random.Random(0))

print(f"greedy conversation (end: {result.conversation.end_reason.value}, "
      f"task success: {result.task_success}):")
for utt in result.conversation.utterances:
    tag = f" [{utt.strategy.value}]" if utt.strategy else ""
    print(f"   {utt.turn_index:>2} {utt.speaker.value:<6}{tag} {utt.text}")

print(f"\nmetrics: length={result.rewards.conv_len} "
      f"info_gain={result.rewards.info_gain} deep={result.rewards.deep}")
