from __future__ import annotations

from hypothesis import given
from hypothesis import strategies as st

from convokit.nlu.tokenizer import tokenize


def test_canonical_offsets():
    tokens = tokenize("show me chinese restaurants")
    assert [(t.start, t.end) for t in tokens] == [(0, 4), (5, 7), (8, 15), (16, 27)]
    assert tokens[2].text == "chinese"


def test_empty():
    assert tokenize("") == []


def test_leading_and_inner_whitespace():
    tokens = tokenize("  a  b ")
    assert [(t.text, t.start, t.end) for t in tokens] == [("a", 2, 3), ("b", 5, 6)]


def test_lower_is_casefolded():
    (token,) = tokenize("CHInese")
    assert token.lower == "chinese"


@given(st.text(max_size=80))
def test_tokens_reproduce_text_with_gaps(text):
    tokens = tokenize(text)
    for token in tokens:
        assert text[token.start : token.end] == token.text
    # tokens are disjoint and ordered; the gaps are pure whitespace
    cursor = 0
    for token in tokens:
        assert token.start >= cursor
        assert text[cursor : token.start].strip() == ""
        cursor = token.end
    assert text[cursor:].strip() == ""
