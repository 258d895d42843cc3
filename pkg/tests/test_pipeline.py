from __future__ import annotations

import pytest

from convokit import ValidationError
from convokit.nlu.pipeline import (
    ComponentSpec,
    ParseResult,
    Pipeline,
    PipelineConfig,
    default_config,
    train_pipeline,
)


@pytest.fixture(scope="module")
def trained(restaurant_nlu_examples, vectors_path):
    config = default_config(str(vectors_path))
    pipeline, traces = train_pipeline(config, restaurant_nlu_examples)
    return pipeline, traces


class TestConfigValidation:
    def test_default_config_valid(self, vectors_path):
        config = default_config(str(vectors_path))
        assert [c.name for c in config.components] == [
            "tokenizer_whitespace",
            "featurizer_wordvec",
            "classifier_softmax",
            "extractor_crf",
        ]

    def test_unknown_component(self):
        with pytest.raises(ValidationError):
            PipelineConfig(components=(ComponentSpec("featurizer_fancy"),))

    def test_classifier_without_featurizer(self):
        with pytest.raises(ValidationError, match="featurizer"):
            PipelineConfig(
                components=(ComponentSpec("tokenizer_whitespace"), ComponentSpec("classifier_softmax"))
            )

    def test_two_featurizers_rejected(self):
        with pytest.raises(ValidationError):
            PipelineConfig(
                components=(
                    ComponentSpec("tokenizer_whitespace"),
                    ComponentSpec("featurizer_wordvec"),
                    ComponentSpec("featurizer_bow"),
                    ComponentSpec("classifier_softmax"),
                )
            )

    def test_order_enforced(self):
        with pytest.raises(ValidationError):
            PipelineConfig(
                components=(
                    ComponentSpec("tokenizer_whitespace"),
                    ComponentSpec("classifier_softmax"),
                    ComponentSpec("featurizer_bow"),
                )
            )


class TestProcess:
    def test_canonical_sentence(self, trained):
        pipeline, _ = trained
        result = pipeline.process("show me chinese restaurants")
        assert result.intent["name"] == "restaurant_search"
        assert result.intent == result.intent_ranking[0]
        spans = [(s.start, s.end, s.value, s.entity) for s in result.entities]
        assert spans == [(8, 15, "chinese", "cuisine")]

    def test_empty_text_uniform_prior(self, trained):
        pipeline, _ = trained
        result = pipeline.process("")
        assert result.entities == ()
        confidences = [r["confidence"] for r in result.intent_ranking]
        assert confidences == pytest.approx([1 / 5] * 5)

    def test_invariants_on_arbitrary_inputs(self, trained):
        pipeline, _ = trained
        for text in ("", "zzz unknown words", "SHOW ME CHINESE RESTAURANTS", "a", "42 42 42"):
            result = pipeline.process(text)
            total = sum(r["confidence"] for r in result.intent_ranking)
            assert total == pytest.approx(1.0, abs=1e-6)
            assert result.intent == result.intent_ranking[0]
            ranked = [r["confidence"] for r in result.intent_ranking]
            assert ranked == sorted(ranked, reverse=True)
            for span in result.entities:
                assert text[span.start : span.end] == span.value

    def test_untrained_pipeline_rejected(self, vectors_path):
        pipeline = Pipeline(default_config(str(vectors_path)))
        with pytest.raises(ValidationError, match="not trained"):
            pipeline.process("hello")

    def test_loss_traces_decrease(self, trained):
        _, traces = trained
        assert traces["intent"][-1] < traces["intent"][0]
        assert traces["crf"][-1] > traces["crf"][0]  # ascent on log-likelihood


class TestBowFallback:
    def test_train_and_process_without_vectors(self, restaurant_nlu_examples):
        config = PipelineConfig(
            components=(
                ComponentSpec("tokenizer_whitespace"),
                ComponentSpec("featurizer_bow"),
                ComponentSpec("classifier_softmax", {"epochs": 150}),
                ComponentSpec("extractor_crf", {"epochs": 30}),
            )
        )
        pipeline, _ = train_pipeline(config, restaurant_nlu_examples)
        result = pipeline.process("show me chinese restaurants")
        assert result.intent["name"] == "restaurant_search"
        assert sum(r["confidence"] for r in result.intent_ranking) == pytest.approx(1.0, abs=1e-6)


class TestPersistence:
    def test_save_load_identical_results(self, trained, tmp_path):
        pipeline, _ = trained
        path = tmp_path / "nlu.json"
        pipeline.save(path)
        clone = Pipeline.load(path)
        for text in ("show me chinese restaurants", "hello there", "in rome please"):
            a, b = pipeline.process(text), clone.process(text)
            assert a.to_dict() == b.to_dict()

    def test_artifact_bytes_stable(self, trained, tmp_path):
        pipeline, _ = trained
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        pipeline.save(first)
        pipeline.save(second)
        assert first.read_bytes() == second.read_bytes()
