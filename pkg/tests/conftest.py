from __future__ import annotations

from pathlib import Path

import pytest

from convokit import Domain, SlotDefinition, load_domain, parse_nlu_markdown, parse_stories

DATA_DIR = Path(__file__).resolve().parents[1] / "data" / "restaurant"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def restaurant_domain() -> Domain:
    return load_domain(DATA_DIR / "domain.json")


@pytest.fixture(scope="session")
def restaurant_stories():
    return parse_stories((DATA_DIR / "stories.md").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def restaurant_nlu_examples():
    return parse_nlu_markdown((DATA_DIR / "nlu.md").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def vectors_path() -> Path:
    return DATA_DIR / "vectors_25d.txt"


@pytest.fixture
def tiny_domain() -> Domain:
    """Small hand-built domain used by unit tests."""
    return Domain(
        intents=("greet", "inform"),
        entities=("cuisine",),
        slots=(
            SlotDefinition(name="cuisine", kind="text"),
            SlotDefinition(name="people", kind="text"),
            SlotDefinition(name="price", kind="text"),
            SlotDefinition(name="location", kind="text"),
        ),
        actions=("action_listen", "utter_ask_cuisine", "utter_greet"),
        templates={
            "utter_ask_cuisine": ("what cuisine?",),
            "utter_greet": ("hi", "hello"),
        },
    )
