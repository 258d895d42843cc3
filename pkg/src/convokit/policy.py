"""Dialogue policy: featurize tracker state, stack recent states, and
classify the next action.

The state vector layout, in order: previous-action one-hot, latest-intent
one-hot, entity-presence flags, then per-slot features (binary/text slots
one filled flag; categorical slots one-of-k; float slots either threshold
buckets or the raw value). A history is the featurized state at the last
``max_history`` decision points, zero-padded on the left, flattened into
the input of a linear softmax model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import logistic
from .domain import Domain, SlotDefinition
from .errors import FingerprintMismatchError, TrainingError
from .events import ActionExecuted, Tracker
from .training_data import Story, story_to_events

logger = logging.getLogger(__name__)

DEFAULT_MAX_HISTORY = 5  # values between 3 and 6 work well in practice
DEFAULT_EPOCHS = 400
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_L2 = 1e-4
DEFAULT_SEED = 42


@dataclass(frozen=True)
class PolicyConfig:
    max_history: int = DEFAULT_MAX_HISTORY
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    l2: float = DEFAULT_L2
    seed: int = DEFAULT_SEED

    def to_dict(self) -> dict:
        return {
            "max_history": self.max_history,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "seed": self.seed,
        }


def state_dimension(domain: Domain) -> int:
    """Width of one featurized state for this domain."""
    return (
        len(domain.actions)
        + len(domain.intents)
        + len(domain.entities)
        + sum(slot.feature_width for slot in domain.slots)
    )


def _slot_features(slot: SlotDefinition, value: str | float | int | None) -> np.ndarray:
    features = np.zeros(slot.feature_width)
    if value is None:
        return features
    if slot.kind == "categorical":
        text = value if isinstance(value, str) else str(value)
        if text in slot.categories:
            features[slot.categories.index(text)] = 1.0
        else:
            logger.warning("slot %r: value %r not among categories; featurized as zero", slot.name, value)
    elif slot.kind == "float" and slot.thresholds:
        try:
            number = float(value)
        except (TypeError, ValueError):
            logger.warning("slot %r: value %r is not numeric; featurized as zero", slot.name, value)
            return features
        bucket = int(np.searchsorted(np.asarray(slot.thresholds), number, side="right"))
        features[bucket] = 1.0
    elif slot.kind == "float":
        try:
            features[0] = float(value)
        except (TypeError, ValueError):
            logger.warning("slot %r: value %r is not numeric; featurized as zero", slot.name, value)
    else:  # binary and text slots: filled flag
        features[0] = 1.0
    return features


def featurize_state(tracker: Tracker, domain: Domain) -> np.ndarray:
    """One dense state vector; a fresh tracker featurizes to all zeros."""
    parts = []

    action_vec = np.zeros(len(domain.actions))
    if tracker.latest_action is not None:
        idx = domain.action_index(tracker.latest_action)
        if idx is not None:
            action_vec[idx] = 1.0
    parts.append(action_vec)

    intent_vec = np.zeros(len(domain.intents))
    entity_vec = np.zeros(len(domain.entities))
    message = tracker.latest_message
    if message is not None:
        idx = domain.intent_index(message.intent)
        if idx is not None:
            intent_vec[idx] = 1.0
        for mention in message.entities:
            eidx = domain.entity_index(mention.entity)
            if eidx is not None:
                entity_vec[eidx] = 1.0
    parts.append(intent_vec)
    parts.append(entity_vec)

    for slot in domain.slots:
        parts.append(_slot_features(slot, tracker.slots[slot.name]))
    return np.concatenate(parts) if parts else np.zeros(0)


def _stack_history(rows: list[np.ndarray], max_history: int, width: int) -> np.ndarray:
    """Last ``max_history`` rows, zero-padded on the left to exactly H rows."""
    rows = rows[-max_history:]
    history = np.zeros((max_history, width))
    if rows:
        history[-len(rows) :] = np.stack(rows)
    return history


def build_history(tracker: Tracker, domain: Domain, max_history: int) -> np.ndarray:
    """(H, D) array: the state before each past action plus the current
    state as the final row, padded with zero rows for short conversations."""
    width = state_dimension(domain)
    shadow = Tracker(tracker.conversation_id, domain)
    rows: list[np.ndarray] = []
    for event in tracker.events:
        if isinstance(event, ActionExecuted):
            rows.append(featurize_state(shadow, domain))
        shadow.apply(event)
    rows.append(featurize_state(shadow, domain))
    return _stack_history(rows, max_history, width)


def stories_to_dataset(
    stories: list[Story], domain: Domain, max_history: int
) -> list[tuple[np.ndarray, int]]:
    """Labeled (history, action-index) pairs: one per action execution
    (inserted listens included) while replaying each story."""
    width = state_dimension(domain)
    dataset: list[tuple[np.ndarray, int]] = []
    for story in stories:
        events = story_to_events(story, domain)
        tracker = Tracker(f"story/{story.name}", domain)
        rows: list[np.ndarray] = []
        for event in events:
            if isinstance(event, ActionExecuted):
                current = featurize_state(tracker, domain)
                history = _stack_history(rows + [current], max_history, width)
                dataset.append((history, domain.action_index(event.action_name)))
                rows.append(current)
            tracker.apply(event)
    return dataset


class PolicyModel:
    """Linear softmax classifier over flattened state histories, bound to
    the domain it was trained against via a fingerprint."""

    def __init__(
        self,
        weights: np.ndarray,
        bias: np.ndarray,
        config: PolicyConfig,
        fingerprint: str,
        action_names: list[str],
    ):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        self.config = config
        self.fingerprint = fingerprint
        self.action_names = list(action_names)

    @property
    def max_history(self) -> int:
        return self.config.max_history

    def check_domain(self, domain: Domain) -> None:
        if domain.fingerprint() != self.fingerprint:
            raise FingerprintMismatchError(
                "policy was trained against a different domain (fingerprint mismatch)"
            )

    def probabilities_for_history(self, history: np.ndarray) -> np.ndarray:
        return logistic.predict_probabilities(self.weights, self.bias, history.reshape(-1))

    def predict(self, tracker: Tracker, domain: Domain) -> list[tuple[str, float]]:
        """All actions with probabilities, sorted descending; ties broken
        by canonical action order. Probabilities sum to 1."""
        self.check_domain(domain)
        history = build_history(tracker, domain, self.max_history)
        probs = self.probabilities_for_history(history)
        order = sorted(range(len(domain.actions)), key=lambda i: (-probs[i], i))
        return [(domain.actions[i], float(probs[i])) for i in order]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "config": self.config.to_dict(),
            "fingerprint": self.fingerprint,
            "actions": self.action_names,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyModel":
        return cls(
            weights=np.array(data["weights"], dtype=np.float64),
            bias=np.array(data["bias"], dtype=np.float64),
            config=PolicyConfig(**data["config"]),
            fingerprint=data["fingerprint"],
            action_names=data["actions"],
        )

    @classmethod
    def load(cls, path: str | Path) -> "PolicyModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_policy(
    dataset: list[tuple[np.ndarray, int]],
    domain: Domain,
    config: PolicyConfig | None = None,
    warm_start: PolicyModel | None = None,
    epochs: int | None = None,
    learning_rate: float | None = None,
) -> tuple[PolicyModel, list[float]]:
    """Full-batch gradient descent on the flattened histories.

    ``warm_start`` fine-tunes an existing model's weights (machine
    teaching's partial retrain path); ``epochs``/``learning_rate`` override
    the config for that case. Returns the model and its loss trace.
    """
    config = config or (warm_start.config if warm_start else PolicyConfig())
    if not dataset:
        raise TrainingError("policy training needs a non-empty dataset")
    n_actions = len(domain.actions)
    for _, label in dataset:
        if not 0 <= label < n_actions:
            raise TrainingError(f"action label {label} out of range (domain has {n_actions})")
    inputs = np.stack([history.reshape(-1) for history, _ in dataset])
    labels = np.array([label for _, label in dataset], dtype=np.int64)
    weights, bias, losses = logistic.fit(
        inputs,
        labels,
        n_actions,
        epochs=config.epochs if epochs is None else epochs,
        learning_rate=config.learning_rate if learning_rate is None else learning_rate,
        l2=config.l2,
        weights=warm_start.weights if warm_start else None,
        bias=warm_start.bias if warm_start else None,
    )
    model = PolicyModel(
        weights=weights,
        bias=bias,
        config=config,
        fingerprint=domain.fingerprint(),
        action_names=list(domain.actions),
    )
    return model, losses


def train_policy_from_stories(
    stories: list[Story], domain: Domain, config: PolicyConfig | None = None
) -> tuple[PolicyModel, list[float], int]:
    """Convenience wrapper: stories -> dataset -> trained model.

    Returns the model, loss trace, and the dataset size.
    """
    config = config or PolicyConfig()
    dataset = stories_to_dataset(stories, domain, config.max_history)
    model, losses = train_policy(dataset, domain, config)
    return model, losses, len(dataset)
