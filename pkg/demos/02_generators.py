"""Show both response generators reacting to one user turn."""

from movietalk.core import Speaker, Utterance
from movietalk.kb import default_kb
from movietalk.nontaskgen import (
    UserProfile,
    default_interview_index,
    default_subtitle_index,
    generate_nontask_candidates,
    retrieve,
)
from movietalk.policy import Coherence, DialogState, TurnBucket, Variant
from movietalk.taskgen import fresh_progress, generate_task_candidates
from movietalk.understanding import Sentiment, analyze

kb = default_kb()
interview = default_interview_index()
subtitles = default_subtitle_index()

user_turn = Utterance(Speaker.USER, "I like Spider-man and scary movies.", 2)
nlu = analyze(user_turn, kb)
state = DialogState(
    turn_bucket=TurnBucket.T1_3, strategy_counts=(0, 0, 0, 0),
    sentiment=Sentiment.POSITIVE, coherence=Coherence.LOW,
    last_strategy=None, task_progress=0)

print(f"user said: {user_turn.text!r}\n")

print("task candidates:")
for cand in generate_task_candidates(state, nlu, kb, fresh_progress(),
                                     mentions=[m.entity_id for m in nlu.entities]):
    gate = " (gate just opened)" if cand.gate_just_met else ""
    print(f"   [{cand.strategy.value}]{gate} {cand.text}")

print("\nnon-task candidates:")
for cand in generate_nontask_candidates(state, nlu, user_turn, kb, UserProfile(),
                                        interview, subtitles):
    print(f"   [{cand.strategy.value}] {cand.text}")

print("\ntop-3 retrieval hits for 'do you like scary movies':")
query = Utterance(Speaker.USER, "do you like scary movies", 1)
for text, score in retrieve(interview, query, 3):
    print(f"   {score:5.2f}  {text}")
