"""The understanding pipeline: configurable components behind one
train/process API, persisted as a single JSON artifact."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from ..training_data import EntitySpan, NluExample
from . import crf as crf_mod
from .intent import IntentModel, train_intent
from .tokenizer import tokenize
from .vectors import BOW_BUCKETS, WordVectorTable, load_word_vectors, pool_bow, pool_vectors

TOKENIZER_WHITESPACE = "tokenizer_whitespace"
FEATURIZER_WORDVEC = "featurizer_wordvec"
FEATURIZER_BOW = "featurizer_bow"
CLASSIFIER_SOFTMAX = "classifier_softmax"
EXTRACTOR_CRF = "extractor_crf"

COMPONENT_NAMES = (
    TOKENIZER_WHITESPACE,
    FEATURIZER_WORDVEC,
    FEATURIZER_BOW,
    CLASSIFIER_SOFTMAX,
    EXTRACTOR_CRF,
)
_FEATURIZERS = (FEATURIZER_WORDVEC, FEATURIZER_BOW)


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class PipelineConfig:
    """Ordered component specs; order must respect dependencies
    (tokenizer before featurizer before classifier) and the classifier
    needs exactly one featurizer."""

    components: tuple[ComponentSpec, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.components]
        for name in names:
            if name not in COMPONENT_NAMES:
                raise ValidationError(f"unknown pipeline component: {name!r}")
        featurizers = [n for n in names if n in _FEATURIZERS]
        if CLASSIFIER_SOFTMAX in names:
            if len(featurizers) != 1:
                raise ValidationError(
                    f"the classifier needs exactly one featurizer, found {len(featurizers)}"
                )
            if names.index(featurizers[0]) > names.index(CLASSIFIER_SOFTMAX):
                raise ValidationError("featurizer must come before the classifier")
        if featurizers and TOKENIZER_WHITESPACE not in names:
            raise ValidationError("featurizers require a tokenizer")
        if featurizers and names.index(TOKENIZER_WHITESPACE) > names.index(featurizers[0]):
            raise ValidationError("tokenizer must come before the featurizer")
        if EXTRACTOR_CRF in names and TOKENIZER_WHITESPACE not in names:
            raise ValidationError("the entity extractor requires a tokenizer")

    def get(self, name: str) -> ComponentSpec | None:
        for component in self.components:
            if component.name == name:
                return component
        return None

    def to_dict(self) -> list[dict]:
        return [c.to_dict() for c in self.components]

    @classmethod
    def from_dict(cls, data: list[dict]) -> "PipelineConfig":
        return cls(
            components=tuple(
                ComponentSpec(name=c["name"], params=dict(c.get("params", {}))) for c in data
            )
        )


def default_config(vectors_path: str | None = None) -> PipelineConfig:
    """Sensible default: word vectors when a file is given, hashed
    bag-of-words otherwise."""
    featurizer = (
        ComponentSpec(FEATURIZER_WORDVEC, {"vectors": vectors_path})
        if vectors_path
        else ComponentSpec(FEATURIZER_BOW, {})
    )
    return PipelineConfig(
        components=(
            ComponentSpec(TOKENIZER_WHITESPACE),
            featurizer,
            ComponentSpec(CLASSIFIER_SOFTMAX, {}),
            ComponentSpec(EXTRACTOR_CRF, {}),
        )
    )


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    with open(path, encoding="utf-8") as handle:
        return PipelineConfig.from_dict(json.load(handle))


@dataclass(frozen=True)
class ParseResult:
    """The interpreter's output for one message."""

    text: str
    intent: dict
    intent_ranking: tuple[dict, ...]
    entities: tuple[EntitySpan, ...]

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "intent": dict(self.intent),
            "intent_ranking": [dict(r) for r in self.intent_ranking],
            "entities": [s.to_dict() for s in self.entities],
        }


def _ranking_to_result(text: str, ranking: list[tuple[str, float]], entities: list[EntitySpan]) -> ParseResult:
    ranked = tuple({"name": name, "confidence": conf} for name, conf in ranking)
    return ParseResult(
        text=text, intent=dict(ranked[0]), intent_ranking=ranked, entities=tuple(entities)
    )


class Pipeline:
    """A trained understanding pipeline: tokenize, pool, classify, extract."""

    def __init__(
        self,
        config: PipelineConfig,
        intent_model: IntentModel | None = None,
        crf_model: crf_mod.CrfModel | None = None,
        vector_table: WordVectorTable | None = None,
    ):
        self.config = config
        self.intent_model = intent_model
        self.crf_model = crf_model
        self.vector_table = vector_table

    @property
    def trained(self) -> bool:
        return self.intent_model is not None

    def pool(self, tokens) -> np.ndarray:
        if self.config.get(FEATURIZER_WORDVEC):
            if self.vector_table is None:
                raise ValidationError("word-vector featurizer configured but no vectors loaded")
            return pool_vectors(tokens, self.vector_table)
        return pool_bow(tokens, BOW_BUCKETS)

    def process(self, text: str) -> ParseResult:
        """Run the full pipeline on one message.

        Empty input gets the uniform intent prior and no entities; every
        result satisfies the ParseResult invariants (confidences sum to 1,
        top of the ranking equals ``intent``).
        """
        if not self.trained:
            raise ValidationError("pipeline is not trained")
        tokens = tokenize(text)
        if not tokens:
            return _ranking_to_result(text, self.intent_model.uniform_ranking(), [])
        ranking = self.intent_model.predict(self.pool(tokens))
        entities: list[EntitySpan] = []
        if self.crf_model is not None:
            entities = crf_mod.extract_entities(self.crf_model, text)
        return _ranking_to_result(text, ranking, entities)

    def save(self, path: str | Path) -> None:
        artifact = {
            "config": self.config.to_dict(),
            "intent_model": self.intent_model.to_dict() if self.intent_model else None,
            "crf_model": self.crf_model.to_dict() if self.crf_model else None,
            "vector_table": self.vector_table.to_dict() if self.vector_table else None,
        }
        Path(path).write_text(json.dumps(artifact, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Pipeline":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            config=PipelineConfig.from_dict(data["config"]),
            intent_model=IntentModel.from_dict(data["intent_model"]) if data["intent_model"] else None,
            crf_model=crf_mod.CrfModel.from_dict(data["crf_model"]) if data["crf_model"] else None,
            vector_table=WordVectorTable.from_dict(data["vector_table"])
            if data["vector_table"]
            else None,
        )


def train_pipeline(
    config: PipelineConfig,
    examples: list[NluExample],
    vectors_path: str | Path | None = None,
) -> tuple[Pipeline, dict[str, list[float]]]:
    """Train every trainable component in ``config`` on ``examples``.

    Returns the pipeline and per-component loss traces (``intent`` is the
    classifier's loss, ``crf`` the extractor's objective).
    """
    pipeline = Pipeline(config)
    wordvec = config.get(FEATURIZER_WORDVEC)
    if wordvec is not None:
        path = vectors_path or wordvec.params.get("vectors")
        if not path:
            raise ValidationError("featurizer_wordvec needs a 'vectors' param or explicit path")
        pipeline.vector_table = load_word_vectors(path)

    traces: dict[str, list[float]] = {}
    classifier = config.get(CLASSIFIER_SOFTMAX)
    if classifier is not None:
        pooled = np.stack([pipeline.pool(tokenize(ex.text)) for ex in examples])
        pipeline.intent_model, traces["intent"] = train_intent(
            examples,
            pooled,
            epochs=int(classifier.params.get("epochs", 500)),
            learning_rate=float(classifier.params.get("learning_rate", 2.0)),
            l2=float(classifier.params.get("l2", 1e-4)),
        )
    extractor = config.get(EXTRACTOR_CRF)
    if extractor is not None:
        pipeline.crf_model, traces["crf"] = crf_mod.train_crf(
            examples,
            epochs=int(extractor.params.get("epochs", 100)),
            learning_rate=float(extractor.params.get("learning_rate", 0.5)),
            l2=float(extractor.params.get("l2", 1e-4)),
        )
    return pipeline, traces
