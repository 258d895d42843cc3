"""Whitespace tokenization with character offsets."""

from __future__ import annotations

import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    """A maximal run of non-whitespace with its original offsets."""

    text: str
    start: int
    end: int

    @property
    def lower(self) -> str:
        """Case-folded form used for vector and feature lookups."""
        return self.text.casefold()


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, keeping offsets into the original string.

    Empty input yields an empty list; joining the tokens back with the
    original gaps reproduces the input.
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]
