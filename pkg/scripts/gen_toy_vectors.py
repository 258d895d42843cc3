#!/usr/bin/env python3
"""Regenerate the bundled toy word-vector file.

Every token in the restaurant NLU corpus gets a deterministic 25-d unit
vector seeded from its own name, so adding tokens later never shifts the
existing ones. Run from the repository root:

    python3 scripts/gen_toy_vectors.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from convokit.nlu.tokenizer import tokenize  # noqa: E402
from convokit.nlu.vectors import fnv1a_bucket  # noqa: E402
from convokit.training_data import parse_nlu_markdown  # noqa: E402

DIMENSION = 25


def token_vector(token: str) -> np.ndarray:
    rng = np.random.default_rng(fnv1a_bucket(token, 2**31))
    vec = rng.normal(size=DIMENSION)
    return vec / np.linalg.norm(vec)


def main() -> None:
    corpus = (ROOT / "data" / "restaurant" / "nlu.md").read_text(encoding="utf-8")
    vocabulary = sorted(
        {tok.lower for ex in parse_nlu_markdown(corpus) for tok in tokenize(ex.text)}
    )
    out = ROOT / "data" / "restaurant" / "vectors_25d.txt"
    with open(out, "w", encoding="utf-8") as handle:
        for token in vocabulary:
            components = " ".join(f"{v:.5f}" for v in token_vector(token))
            handle.write(f"{token} {components}\n")
    print(f"wrote {len(vocabulary)} vectors ({DIMENSION}d) to {out}")


if __name__ == "__main__":
    main()
