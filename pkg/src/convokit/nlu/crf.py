"""Linear-chain conditional random field for entity extraction.

Tags are BIO over the entity types seen in training, with ``O`` first in
the canonical order. A path's score is the sum of emission weights for
the features active at each position plus tag-to-tag transition weights;
the partition function is computed by the forward recursion in log space
and decoding by Viterbi with ties broken toward the lower tag index.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from ..errors import TrainingError, ValidationError
from ..training_data import EntitySpan, NluExample
from .tokenizer import Token, tokenize

logger = logging.getLogger(__name__)

OUTSIDE = "O"


def token_features(tokens: list[Token], position: int) -> list[str]:
    """The fixed per-token feature template.

    Lowercased token identity at relative positions -1/0/+1, prefixes and
    suffixes of length 2 and 3, digit/capitalization flags, and
    begin/end-of-sequence markers.
    """
    token = tokens[position]
    lower = token.lower
    feats = [f"word[0]={lower}"]
    if position == 0:
        feats.append("BOS")
    else:
        feats.append(f"word[-1]={tokens[position - 1].lower}")
    if position == len(tokens) - 1:
        feats.append("EOS")
    else:
        feats.append(f"word[+1]={tokens[position + 1].lower}")
    feats.append(f"prefix2={lower[:2]}")
    feats.append(f"prefix3={lower[:3]}")
    feats.append(f"suffix2={lower[-2:]}")
    feats.append(f"suffix3={lower[-3:]}")
    if token.text.isdigit():
        feats.append("is_digit")
    if token.text[:1].isupper():
        feats.append("is_capitalized")
    if token.text.isupper():
        feats.append("is_all_caps")
    return feats


def sequence_features(tokens: list[Token]) -> list[list[str]]:
    return [token_features(tokens, i) for i in range(len(tokens))]


class CrfModel:
    """Tag set, emission weights keyed by feature string, and a dense
    transition matrix."""

    def __init__(
        self,
        tags: list[str],
        feature_index: dict[str, int],
        emission_weights: np.ndarray,
        transition_weights: np.ndarray,
    ):
        if OUTSIDE not in tags:
            raise ValidationError(f"tag set must contain {OUTSIDE!r}")
        self.tags = list(tags)
        self.feature_index = dict(feature_index)
        self.emission_weights = np.asarray(emission_weights, dtype=np.float64)
        self.transition_weights = np.asarray(transition_weights, dtype=np.float64)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def emission_weight(self, feature: str, tag: str) -> float:
        row = self.feature_index.get(feature)
        if row is None:
            return 0.0
        return float(self.emission_weights[row, self.tags.index(tag)])

    def emissions(self, features: list[list[str]]) -> np.ndarray:
        """(length, n_tags) matrix of summed active-feature weights."""
        scores = np.zeros((len(features), self.n_tags))
        for t, feats in enumerate(features):
            for feat in feats:
                row = self.feature_index.get(feat)
                if row is not None:
                    scores[t] += self.emission_weights[row]
        return scores

    def to_dict(self) -> dict:
        features = sorted(self.feature_index, key=self.feature_index.get)
        return {
            "tags": self.tags,
            "features": features,
            "emission_weights": self.emission_weights.tolist(),
            "transition_weights": self.transition_weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrfModel":
        return cls(
            tags=d["tags"],
            feature_index={f: i for i, f in enumerate(d["features"])},
            emission_weights=np.array(d["emission_weights"], dtype=np.float64).reshape(
                len(d["features"]), len(d["tags"])
            ),
            transition_weights=np.array(d["transition_weights"], dtype=np.float64),
        )


def _require_nonempty(emissions: np.ndarray) -> None:
    if emissions.shape[0] == 0:
        raise ValidationError("CRF operations require a sequence of length >= 1")


def log_partition_from_emissions(emissions: np.ndarray, transitions: np.ndarray) -> float:
    """Forward recursion: log of the total exp-score over all tag paths."""
    _require_nonempty(emissions)
    alpha = emissions[0]
    for t in range(1, emissions.shape[0]):
        alpha = logsumexp(alpha[:, None] + transitions, axis=0) + emissions[t]
    return float(logsumexp(alpha))


def log_partition_backward(emissions: np.ndarray, transitions: np.ndarray) -> float:
    """Same quantity via the backward recursion (consistency check)."""
    _require_nonempty(emissions)
    beta = np.zeros(emissions.shape[1])
    for t in range(emissions.shape[0] - 2, -1, -1):
        beta = logsumexp(transitions + emissions[t + 1] + beta, axis=1)
    return float(logsumexp(emissions[0] + beta))


def forward_backward(
    emissions: np.ndarray, transitions: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """Log-space alpha and beta tables plus the log partition."""
    _require_nonempty(emissions)
    n, k = emissions.shape
    alpha = np.zeros((n, k))
    alpha[0] = emissions[0]
    for t in range(1, n):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + transitions, axis=0) + emissions[t]
    beta = np.zeros((n, k))
    for t in range(n - 2, -1, -1):
        beta[t] = logsumexp(transitions + emissions[t + 1] + beta[t + 1], axis=1)
    return alpha, beta, float(logsumexp(alpha[-1]))


def tag_marginals(emissions: np.ndarray, transitions: np.ndarray) -> np.ndarray:
    """Per-position tag probabilities; each row sums to 1."""
    alpha, beta, log_z = forward_backward(emissions, transitions)
    return np.exp(alpha + beta - log_z)


def viterbi_from_emissions(
    emissions: np.ndarray, transitions: np.ndarray
) -> tuple[list[int], float]:
    """Highest-scoring tag path and its score.

    At every backpointer (and at the final position) ties resolve to the
    lowest tag index, so an all-zero model decodes to all-``O``.
    """
    _require_nonempty(emissions)
    n, k = emissions.shape
    delta = emissions[0]
    pointers = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        scores = delta[:, None] + transitions
        pointers[t] = np.argmax(scores, axis=0)
        delta = scores[pointers[t], np.arange(k)] + emissions[t]
    best_last = int(np.argmax(delta))
    path = [best_last]
    for t in range(n - 1, 0, -1):
        path.append(int(pointers[t, path[-1]]))
    path.reverse()
    return path, float(delta[best_last])


def crf_log_partition(model: CrfModel, features: list[list[str]]) -> float:
    """Log partition for one feature sequence under ``model``."""
    return log_partition_from_emissions(model.emissions(features), model.transition_weights)


def crf_decode(model: CrfModel, features: list[list[str]]) -> list[str]:
    """Best tag sequence for one feature sequence."""
    path, _ = viterbi_from_emissions(model.emissions(features), model.transition_weights)
    return [model.tags[i] for i in path]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def spans_to_bio(text: str, tokens: list[Token], spans: tuple[EntitySpan, ...]) -> list[str]:
    """BIO tags per token; spans that cross token boundaries are snapped
    outward to whole tokens with a warning."""
    tags = [OUTSIDE] * len(tokens)
    for span in spans:
        covered = [i for i, tok in enumerate(tokens) if tok.end > span.start and tok.start < span.end]
        if not covered:
            logger.warning("entity span %r in %r covers no tokens; dropped", span.value, text)
            continue
        snapped_start = tokens[covered[0]].start
        snapped_end = tokens[covered[-1]].end
        if (snapped_start, snapped_end) != (span.start, span.end):
            logger.warning(
                "entity span (%d,%d) in %r snapped to token boundaries (%d,%d)",
                span.start,
                span.end,
                text,
                snapped_start,
                snapped_end,
            )
        for j, i in enumerate(covered):
            tags[i] = ("B-" if j == 0 else "I-") + span.entity
    return tags


def bio_to_spans(text: str, tokens: list[Token], tags: list[str]) -> list[EntitySpan]:
    """Merge BIO tags back into character spans using token offsets.

    A dangling ``I-x`` (no preceding ``B-x``) starts a new entity; the span
    value is always re-read from the text, so ``text[start:end] == value``.
    """
    spans: list[EntitySpan] = []
    current: tuple[str, int, int] | None = None  # (entity, start, end)
    for token, tag in zip(tokens, tags):
        if tag == OUTSIDE:
            if current:
                spans.append(_close_span(text, current))
                current = None
            continue
        kind, entity = tag.split("-", 1)
        if current and current[0] == entity and kind == "I":
            current = (entity, current[1], token.end)
        else:
            if current:
                spans.append(_close_span(text, current))
            current = (entity, token.start, token.end)
    if current:
        spans.append(_close_span(text, current))
    return spans


def _close_span(text: str, current: tuple[str, int, int]) -> EntitySpan:
    entity, start, end = current
    return EntitySpan(start=start, end=end, value=text[start:end], entity=entity)


def _empirical_counts(
    features: list[list[str]],
    tag_ids: list[int],
    n_tags: int,
    feature_index: dict[str, int],
) -> tuple[np.ndarray, np.ndarray]:
    emit = np.zeros((len(feature_index), n_tags))
    trans = np.zeros((n_tags, n_tags))
    for t, feats in enumerate(features):
        for feat in feats:
            emit[feature_index[feat], tag_ids[t]] += 1.0
        if t > 0:
            trans[tag_ids[t - 1], tag_ids[t]] += 1.0
    return emit, trans


def _expected_counts(
    features: list[list[str]],
    emissions: np.ndarray,
    transitions: np.ndarray,
    feature_index: dict[str, int],
) -> tuple[np.ndarray, np.ndarray, float]:
    """Expected feature counts under the model, from forward-backward."""
    alpha, beta, log_z = forward_backward(emissions, transitions)
    node_marginals = np.exp(alpha + beta - log_z)
    emit = np.zeros((len(feature_index), transitions.shape[0]))
    for t, feats in enumerate(features):
        for feat in feats:
            emit[feature_index[feat]] += node_marginals[t]
    trans = np.zeros_like(transitions)
    for t in range(1, emissions.shape[0]):
        pair = alpha[t - 1][:, None] + transitions + emissions[t] + beta[t] - log_z
        trans += np.exp(pair)
    return emit, trans, log_z


def path_score(
    emissions: np.ndarray, transitions: np.ndarray, tag_ids: list[int]
) -> float:
    score = 0.0
    for t, tag in enumerate(tag_ids):
        score += emissions[t, tag]
        if t > 0:
            score += transitions[tag_ids[t - 1], tag]
    return float(score)


def crf_objective_and_gradient(
    dataset: list[tuple[list[list[str]], list[int]]],
    tags: list[str],
    feature_index: dict[str, int],
    emission_weights: np.ndarray,
    transition_weights: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean conditional log-likelihood minus the L2 penalty, with its
    gradient (empirical minus expected counts, minus ``l2 * w``)."""
    n_tags = len(tags)
    grad_emit = np.zeros_like(emission_weights)
    grad_trans = np.zeros_like(transition_weights)
    total_ll = 0.0
    model = CrfModel(tags, feature_index, emission_weights, transition_weights)
    for features, tag_ids in dataset:
        emissions = model.emissions(features)
        emp_emit, emp_trans = _empirical_counts(features, tag_ids, n_tags, feature_index)
        exp_emit, exp_trans, log_z = _expected_counts(
            features, emissions, transition_weights, feature_index
        )
        total_ll += path_score(emissions, transition_weights, tag_ids) - log_z
        grad_emit += emp_emit - exp_emit
        grad_trans += emp_trans - exp_trans
    n = len(dataset)
    objective = total_ll / n - 0.5 * l2 * (
        float(np.sum(emission_weights**2)) + float(np.sum(transition_weights**2))
    )
    grad_emit = grad_emit / n - l2 * emission_weights
    grad_trans = grad_trans / n - l2 * transition_weights
    return objective, grad_emit, grad_trans


def train_crf(
    examples: list[NluExample],
    epochs: int = 100,
    learning_rate: float = 0.5,
    l2: float = 1e-4,
) -> tuple[CrfModel, list[float]]:
    """Fit the extractor by gradient ascent on the regularized conditional
    log-likelihood; zero-initialized, so deterministic.

    Returns the model and the per-epoch objective trace. A corpus without
    any entity annotation yields a trivial all-``O`` model with a warning.
    """
    entity_types = sorted({span.entity for ex in examples for span in ex.entities})
    tags = [OUTSIDE]
    for entity in entity_types:
        tags += [f"B-{entity}", f"I-{entity}"]
    if not entity_types:
        logger.warning("no entity annotations in training data; returning a trivial all-O model")
        return CrfModel(tags, {}, np.zeros((0, 1)), np.zeros((1, 1))), []

    tag_ids = {tag: i for i, tag in enumerate(tags)}
    dataset: list[tuple[list[list[str]], list[int]]] = []
    feature_index: dict[str, int] = {}
    for ex in examples:
        tokens = tokenize(ex.text)
        if not tokens:
            continue
        features = sequence_features(tokens)
        bio = spans_to_bio(ex.text, tokens, ex.entities)
        for feats in features:
            for feat in feats:
                feature_index.setdefault(feat, len(feature_index))
        dataset.append((features, [tag_ids[t] for t in bio]))
    if not dataset:
        raise TrainingError("no usable (non-empty) training examples")

    emission_weights = np.zeros((len(feature_index), len(tags)))
    transition_weights = np.zeros((len(tags), len(tags)))
    trace: list[float] = []
    for epoch in range(epochs):
        objective, grad_emit, grad_trans = crf_objective_and_gradient(
            dataset, tags, feature_index, emission_weights, transition_weights, l2
        )
        if not np.isfinite(objective):
            raise TrainingError(f"non-finite objective at epoch {epoch}")
        emission_weights += learning_rate * grad_emit
        transition_weights += learning_rate * grad_trans
        trace.append(objective)
    return CrfModel(tags, feature_index, emission_weights, transition_weights), trace


def extract_entities(model: CrfModel, text: str) -> list[EntitySpan]:
    """Tokenize, decode, and convert BIO tags to character spans."""
    tokens = tokenize(text)
    if not tokens:
        return []
    tags = crf_decode(model, sequence_features(tokens))
    return bio_to_spans(text, tokens, tags)
