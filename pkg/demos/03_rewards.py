"""Compute the four reward metrics over a short mixed conversation."""

from movietalk.core import (
    Conversation,
    ResponseCandidate,
    Source,
    Speaker,
    StrategyId,
    Utterance,
    append_turn,
)
from movietalk.kb import default_kb
from movietalk.reward import (
    Phase,
    RewardVector,
    RewardWeights,
    combine,
    conversation_depth,
    information_gain,
    score_appropriateness,
)
from movietalk.understanding import topic_of_text

kb = default_kb()

LINES = [
    (Speaker.SYSTEM, "Hello, I really like movies. How about we talk about movies?",
     StrategyId.ACTIVE_PARTICIPATION),
    (Speaker.USER, "I like watching movies too.", None),
    (Speaker.SYSTEM, "Do you like superhero movies or Disney movies?",
     StrategyId.ELICIT_MOVIE_TYPE),
    (Speaker.USER, "I like superhero movies.", None),
    (Speaker.SYSTEM, "My favorite superhero is Captain America.",
     StrategyId.INTRODUCE_FAVORITE_SUPERHERO),
    (Speaker.USER, "I like Spider-man.", None),
]

conv = Conversation(id="demo")
for i, (speaker, text, strategy) in enumerate(LINES, start=1):
    conv = append_turn(conv, Utterance(
        speaker, text, i, strategy=strategy, topic=topic_of_text(text, kb)))

print("transcript:")
for utt in conv.utterances:
    print(f"   {utt.turn_index} {utt.speaker.value:<6} [{utt.topic.value}] {utt.text}")

run, deep = conversation_depth(conv)
print(f"\nconversation depth: longest same-topic run = {run}, deep = {deep}")
print(f"information gain: {information_gain(conv)} unique words")
print(f"conversation length: {len(conv)} turns")

context = conv.utterances[3]  # "I like superhero movies."
candidate = ResponseCandidate("My favorite superhero is Captain America.",
                              StrategyId.INTRODUCE_FAVORITE_SUPERHERO, Source.TASK)
app = score_appropriateness(context, candidate, kb)
print(f"\nappropriateness of the follow-up: {app} (0 bad / 1 ok / 2 good)")

vector = RewardVector(appropriateness=app, deep=deep,
                      info_gain=information_gain(conv), conv_len=len(conv))
weights = RewardWeights()
print(f"immediate reward:   {combine(vector, weights, Phase.IMMEDIATE):.2f}")
print(f"episode-end reward: {combine(vector, weights, Phase.EPISODE_END):.2f}")
