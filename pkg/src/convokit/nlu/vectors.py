"""Sentence featurization: pooled pre-trained word vectors, with a hashed
bag-of-words fallback for vector-free setups."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ParseError
from .tokenizer import Token

BOW_BUCKETS = 2**16

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


class WordVectorTable:
    """Token -> dense vector lookup; all vectors share one dimension and
    lookups are case-folded."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, token: str) -> bool:
        return token.casefold() in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, token: str) -> np.ndarray | None:
        return self._vectors.get(token.casefold())

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "vectors": {t: v.tolist() for t, v in self._vectors.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WordVectorTable":
        return cls(
            dimension=int(d["dimension"]),
            vectors={t: np.asarray(v, dtype=np.float64) for t, v in d["vectors"].items()},
        )


def load_word_vectors(path: str | Path) -> WordVectorTable:
    """Read a GloVe-style text file: one ``token v1 ... vd`` entry per line.

    The dimension is inferred from the first entry; malformed lines are
    rejected with their line number. Duplicate tokens keep the first entry.
    """
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError("expected 'token v1 ... vd'", line=lineno, path=str(path))
            token = parts[0].casefold()
            try:
                values = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"non-numeric vector component: {exc}", line=lineno, path=str(path)) from exc
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise ParseError(
                    f"dimension mismatch: expected {dimension}, got {len(values)}",
                    line=lineno,
                    path=str(path),
                )
            vectors.setdefault(token, values)
    if dimension is None:
        raise ParseError("vector file contains no entries", path=str(path))
    return WordVectorTable(dimension, vectors)


def pool_vectors(tokens: list[Token], table: WordVectorTable) -> np.ndarray:
    """Mean of the tokens' vectors.

    Out-of-vocabulary tokens contribute a zero vector but still count in
    the denominator; empty or all-OOV input pools to the zero vector.
    """
    pooled = np.zeros(table.dimension)
    if not tokens:
        return pooled
    for token in tokens:
        vec = table.get(token.text)
        if vec is not None:
            pooled += vec
    return pooled / len(tokens)


def fnv1a_bucket(token: str, buckets: int = BOW_BUCKETS) -> int:
    """32-bit FNV-1a hash of the case-folded token, reduced modulo ``buckets``."""
    state = _FNV_OFFSET
    for byte in token.casefold().encode("utf-8"):
        state ^= byte
        state = (state * _FNV_PRIME) & 0xFFFFFFFF
    return state % buckets


def pool_bow(tokens: list[Token], buckets: int = BOW_BUCKETS) -> np.ndarray:
    """Hashed bag-of-words pooled the same way as word vectors: each token
    is a one-hot bucket indicator, and the sentence is their mean."""
    pooled = np.zeros(buckets)
    if not tokens:
        return pooled
    for token in tokens:
        pooled[fnv1a_bucket(token.text, buckets)] += 1.0
    return pooled / len(tokens)
