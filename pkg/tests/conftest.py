import pytest

from movietalk.core import Conversation, Speaker, StrategyId, Utterance, append_turn
from movietalk.kb import default_kb
from movietalk.nontaskgen import default_interview_index, default_subtitle_index


@pytest.fixture(scope="session")
def kb():
    return default_kb()


@pytest.fixture(scope="session")
def interview_index():
    return default_interview_index()


@pytest.fixture(scope="session")
def subtitle_index():
    return default_subtitle_index()


def make_conversation(turns, conv_id="fixture"):
    """Build a conversation from (speaker, text, strategy, topic) tuples."""
    conv = Conversation(id=conv_id)
    for i, spec in enumerate(turns, start=1):
        speaker, text, strategy, topic = spec
        conv = append_turn(conv, Utterance(
            speaker, text, i, strategy=strategy, topic=topic))
    return conv


@pytest.fixture
def sample_transcript(kb):
    """A 13-turn mixed conversation used by metric and featurizer tests."""
    from movietalk.understanding import topic_of_text

    S, U = Speaker.SYSTEM, Speaker.USER
    lines = [
        (S, "Hello, I really like movies. How about we talk about movies?",
         StrategyId.ACTIVE_PARTICIPATION),
        (U, "I like watching movies too.", None),
        (S, "Do you like superhero movies or Disney movies?", StrategyId.ELICIT_MOVIE_TYPE),
        (U, "I like superhero movies.", None),
        (S, "My favorite superhero is Captain America.",
         StrategyId.INTRODUCE_FAVORITE_SUPERHERO),
        (U, "I like Spider-man.", None),
        (S, "Do you watch them with your kids?", StrategyId.RETRIEVAL),
        (U, "I don't have any children.", None),
        (S, "What I meant to say was, what is it that you hate?", StrategyId.RETRIEVAL),
        (U, "I hated the last Fantastic Four movie.", None),
        (S, "Are you talking about Fantastic Four, the 2005 film.", StrategyId.GROUNDING),
        (U, "Yes. I am.", None),
        (S, "I really like The Avengers, have you seen it before?",
         StrategyId.DISCUSS_RELEVANT_MOVIE),
    ]
    return make_conversation(
        [(sp, text, strat, topic_of_text(text, kb)) for sp, text, strat in lines])
