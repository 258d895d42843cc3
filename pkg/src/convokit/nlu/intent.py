"""Intent classification over pooled sentence vectors.

A linear softmax model trained from scratch on the training corpus; label
order is the sorted set of intents seen in the data and is stable across
save/load.
"""

from __future__ import annotations

import numpy as np

from .. import logistic
from ..errors import TrainingError, ValidationError
from ..training_data import NluExample


class IntentModel:
    """Weights (intents x dimension), bias, and the canonical label order."""

    def __init__(self, labels: list[str], weights: np.ndarray, bias: np.ndarray):
        self.labels = list(labels)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def predict(self, pooled: np.ndarray) -> list[tuple[str, float]]:
        """Intent ranking, sorted by descending confidence; ties broken by
        canonical label order. Confidences sum to 1 (softmax)."""
        pooled = np.asarray(pooled, dtype=np.float64)
        if pooled.shape != (self.dimension,):
            raise ValidationError(
                f"pooled vector has dimension {pooled.shape}, model expects ({self.dimension},)"
            )
        probs = logistic.predict_probabilities(self.weights, self.bias, pooled)
        order = sorted(range(len(self.labels)), key=lambda i: (-probs[i], i))
        return [(self.labels[i], float(probs[i])) for i in order]

    def uniform_ranking(self) -> list[tuple[str, float]]:
        """The prior used for empty input: every intent equally likely."""
        p = 1.0 / len(self.labels)
        return [(label, p) for label in self.labels]

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntentModel":
        return cls(labels=d["labels"], weights=np.array(d["weights"]), bias=np.array(d["bias"]))


def train_intent(
    examples: list[NluExample],
    pooled_inputs: np.ndarray,
    epochs: int = 500,
    learning_rate: float = 2.0,
    l2: float = 1e-4,
) -> tuple[IntentModel, list[float]]:
    """Fit the classifier on pre-pooled sentence vectors.

    Requires at least two distinct intents (a single label leaves nothing
    to discriminate). Returns the model and the per-epoch loss trace;
    zero epochs yields the uniform model.
    """
    labels = sorted({ex.intent for ex in examples})
    if len(labels) < 2:
        raise TrainingError(f"need >= 2 distinct intents to train, got {labels}")
    index = {label: i for i, label in enumerate(labels)}
    targets = np.array([index[ex.intent] for ex in examples], dtype=np.int64)
    weights, bias, losses = logistic.fit(
        pooled_inputs, targets, len(labels), epochs=epochs, learning_rate=learning_rate, l2=l2
    )
    return IntentModel(labels, weights, bias), losses
