"""Natural language understanding: tokenization, featurization, intent
classification, and CRF entity extraction behind one pipeline API."""

from .crf import CrfModel, crf_decode, crf_log_partition, extract_entities, train_crf
from .intent import IntentModel, train_intent
from .pipeline import (
    ParseResult,
    Pipeline,
    PipelineConfig,
    default_config,
    load_pipeline_config,
    train_pipeline,
)
from .tokenizer import Token, tokenize
from .vectors import WordVectorTable, load_word_vectors, pool_bow, pool_vectors

__all__ = [
    "CrfModel",
    "IntentModel",
    "ParseResult",
    "Pipeline",
    "PipelineConfig",
    "Token",
    "WordVectorTable",
    "crf_decode",
    "crf_log_partition",
    "default_config",
    "extract_entities",
    "load_pipeline_config",
    "load_word_vectors",
    "pool_bow",
    "pool_vectors",
    "tokenize",
    "train_crf",
    "train_intent",
    "train_pipeline",
]
