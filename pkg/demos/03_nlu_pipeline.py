"""
Training and running the understanding pipeline
================================================

Tokenize, pool word vectors into a sentence representation, classify the
intent with a linear softmax model, and tag entities with a linear-chain
CRF — all trained from the bundled 50-example restaurant corpus.
"""

from pathlib import Path

from convokit import parse_nlu_markdown
from convokit.nlu.pipeline import default_config, train_pipeline

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

examples = parse_nlu_markdown((DATA / "nlu.md").read_text())
print(f"training on {len(examples)} examples, intents:", sorted({e.intent for e in examples}))

config = default_config(str(DATA / "vectors_25d.txt"))
pipeline, traces = train_pipeline(config, examples)
print(f"classifier loss: {traces['intent'][0]:.3f} -> {traces['intent'][-1]:.3f}")
print(f"CRF objective:   {traces['crf'][0]:.3f} -> {traces['crf'][-1]:.3f}")

for text in (
    "show me chinese restaurants",
    "in rome please",
    "good evening",
    "yeah sure",
):
    result = pipeline.process(text)
    spans = ", ".join(f"{s.entity}={s.value}({s.start},{s.end})" for s in result.entities) or "none"
    print(f"\n{text!r}")
    print(f"   intent   {result.intent['name']} ({result.intent['confidence']:.2f})")
    print(f"   entities {spans}")
    runner_up = result.intent_ranking[1]
    print(f"   runner-up {runner_up['name']} ({runner_up['confidence']:.2f})")
