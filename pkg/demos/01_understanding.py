"""Walk through the language understanding layer on a few user lines."""

from movietalk.core import Speaker, Utterance, tokenize
from movietalk.kb import default_kb
from movietalk.understanding import analyze

kb = default_kb()

LINES = [
    "I like watching movies too.",
    "Yes. I am.",
    "I don't have any children.",
    "I like Spider-man.",
    "I hated the last Fantastic Four movie.",
    "Have you seen the new superhero movie, 'Captain America: Civil War'?",
]

print("tokenize('I like superhero movies.') ->",
      tokenize("I like superhero movies."))
print()

for line in LINES:
    nlu = analyze(Utterance(Speaker.USER, line, 1), kb)
    entities = ", ".join(f"{m.surface} -> {m.entity_id}" for m in nlu.entities) or "-"
    print(f"{line!r}")
    print(f"   polarity={nlu.polarity.value:<8} sentiment={nlu.sentiment.value:<8} "
          f"topic={nlu.topic.value}")
    print(f"   entities: {entities}")
    print()
