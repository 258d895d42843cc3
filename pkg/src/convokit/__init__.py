"""convokit: a self-contained conversational-AI toolkit.

Natural language understanding (intent classification over pooled word
vectors, CRF entity extraction), an event-sourced dialogue tracker, a
featurized action-prediction policy, interactive machine teaching, story
graph visualization, and an HTTP service — with human-readable training
data formats throughout.
"""

from .domain import ACTION_LISTEN, Domain, SlotDefinition, load_domain
from .engine import ActionRegistry, DialogueEngine, TrackerStore, TurnResult
from .errors import (
    ConvokitError,
    DirectActError,
    EventError,
    FingerprintMismatchError,
    ParseError,
    ProtocolError,
    TrainingError,
    ValidationError,
)
from .events import (
    ActionExecuted,
    AllSlotsReset,
    BotUttered,
    EntityMention,
    Event,
    Restarted,
    SlotSet,
    Tracker,
    UserUttered,
    load_events,
    persist_events,
    replay,
)
from .graph import StoryGraph, build_graph, merge_nodes, stories_to_dot, to_dot
from .nlu import (
    ParseResult,
    Pipeline,
    PipelineConfig,
    default_config,
    tokenize,
    train_pipeline,
)
from .policy import (
    PolicyConfig,
    PolicyModel,
    build_history,
    featurize_state,
    state_dimension,
    stories_to_dataset,
    train_policy,
    train_policy_from_stories,
)
from .teaching import TeachingSession, start_session
from .training_data import (
    ActionStep,
    EntitySpan,
    NluExample,
    Story,
    UserStep,
    parse_nlu_json,
    parse_nlu_markdown,
    parse_stories,
    serialize_nlu_json,
    serialize_nlu_markdown,
    serialize_stories,
    story_to_events,
)

__version__ = "0.1.0"
