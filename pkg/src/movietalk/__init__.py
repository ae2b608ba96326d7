"""movietalk: a movie-promotion chatbot that interleaves task templates with
social responses, selected by a tabular Q-learning policy."""

from .core import (
    Conversation,
    EndReason,
    ResponseCandidate,
    Source,
    Speaker,
    StrategyId,
    TopicLabel,
    Utterance,
    append_turn,
    tokenize,
)
from .engine import DialogEngine, EpisodeResult, open_conversation, run_episode
from .harness import ExperimentConfig, compare, evaluate, load_config, train
from .kb import KnowledgeBase, default_kb, load_kb
from .nontaskgen import RetrievalIndex, UserProfile, build_index, retrieve
from .policy import DialogState, PolicyConfig, QTable, Variant, featurize, q_update, select_action
from .reward import RewardVector, RewardWeights, combine, conversation_depth, information_gain
from .simulator import Persona, PersonaMarginals, respond, sample_persona
from .taskgen import TaskProgress, fresh_progress, generate_task_candidates, mark_delivered
from .understanding import UnderstandingResult, analyze, classify_yes_no, label_topic

__version__ = "0.1.0"

__all__ = [
    "Conversation", "EndReason", "ResponseCandidate", "Source", "Speaker",
    "StrategyId", "TopicLabel", "Utterance", "append_turn", "tokenize",
    "DialogEngine", "EpisodeResult", "open_conversation", "run_episode",
    "ExperimentConfig", "compare", "evaluate", "load_config", "train",
    "KnowledgeBase", "default_kb", "load_kb",
    "RetrievalIndex", "UserProfile", "build_index", "retrieve",
    "DialogState", "PolicyConfig", "QTable", "Variant", "featurize",
    "q_update", "select_action",
    "RewardVector", "RewardWeights", "combine", "conversation_depth",
    "information_gain",
    "Persona", "PersonaMarginals", "respond", "sample_persona",
    "TaskProgress", "fresh_progress", "generate_task_candidates", "mark_delivered",
    "UnderstandingResult", "analyze", "classify_yes_no", "label_topic",
    "__version__",
]
