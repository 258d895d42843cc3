"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its runtime and enforcing its time budget.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

from __future__ import annotations

import concurrent.futures
import io
import json
import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from convokit import (
    ActionExecuted,
    EntityMention,
    SlotSet,
    Tracker,
    UserUttered,
    build_graph,
    load_events,
    merge_nodes,
    parse_nlu_json,
    parse_nlu_markdown,
    parse_stories,
    persist_events,
    replay,
    serialize_nlu_json,
    serialize_nlu_markdown,
    serialize_stories,
    to_dot,
)
from convokit.logistic import loss_and_gradient
from convokit.nlu.crf import log_partition_from_emissions, viterbi_from_emissions
from convokit.nlu.pipeline import default_config, train_pipeline
from convokit.policy import PolicyConfig, build_history, train_policy_from_stories
from convokit.server import ServiceConfig, create_app
from convokit.teaching import TeachingSession
from convokit.training_data import ActionStep, NluExample, Story, UserStep

from .oracles import brute_force_best_path, brute_force_log_partition, max_relative_gradient_error
from .synthetic_stories import (
    ASK_ACTIONS,
    SEARCH_ACTION,
    SLOTS,
    slot_filling_domain,
    slot_filling_stories,
)


class budget:
    """Times a criterion body, prints its pass/fail line, enforces the cap."""

    def __init__(self, number: int, description: str, seconds: float):
        self.number = number
        self.description = description
        self.seconds = seconds

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.started
        status = "PASS" if exc_type is None and elapsed < self.seconds else "FAIL"
        print(f"{status} criterion {self.number}: {self.description} ({elapsed:.2f}s < {self.seconds:.0f}s)")
        if exc_type is None:
            assert elapsed < self.seconds, f"criterion {self.number} exceeded {self.seconds}s"
        return False


def test_criterion_1_unfilled_slot_preference():
    with budget(1, "policy favours asking about uninformed slots", 60):
        domain = slot_filling_domain()
        stories = slot_filling_stories()
        model, _, _ = train_policy_from_stories(stories, domain, PolicyConfig())

        tracker = Tracker("probe", domain)
        rankings = []
        for slot in SLOTS:  # sequentially inform cuisine, location, people, price
            tracker.apply(ActionExecuted(action_name="action_listen"))
            tracker.apply(
                UserUttered(
                    text="/inform{}",
                    intent="inform",
                    entities=(EntityMention(entity=slot, value=f"any_{slot}"),),
                )
            )
            tracker.apply(SlotSet(slot_name=slot, value=f"any_{slot}"))
            ranking = model.predict(tracker, domain)
            rankings.append(ranking)
            tracker.apply(ActionExecuted(action_name=ranking[0][0]))

        after_cuisine = dict(rankings[0])
        assert after_cuisine[ASK_ACTIONS["cuisine"]] < 0.05
        unfilled_questions = {ASK_ACTIONS[s] for s in SLOTS if s != "cuisine"}
        assert rankings[0][0][0] in unfilled_questions
        assert rankings[-1][0][0] == SEARCH_ACTION


def test_criterion_2_nlu_fixture_reproduction(restaurant_nlu_examples, vectors_path):
    with budget(2, "NLU accuracy >= 0.9 on held-out split and exact span", 30):
        by_intent: dict[str, list[NluExample]] = {}
        for example in restaurant_nlu_examples:
            by_intent.setdefault(example.intent, []).append(example)
        assert len(by_intent) == 5
        assert all(len(group) == 10 for group in by_intent.values())
        train, held = [], []
        for group in by_intent.values():  # deterministic 20% split
            train += group[:-2]
            held += group[-2:]

        pipeline, _ = train_pipeline(default_config(str(vectors_path)), train)
        hits = sum(pipeline.process(ex.text).intent["name"] == ex.intent for ex in held)
        assert hits / len(held) >= 0.9

        result = pipeline.process("show me chinese restaurants")
        spans = [(s.start, s.end, s.entity) for s in result.entities]
        assert spans == [(8, 15, "cuisine")]


def test_criterion_3_crf_oracle_equivalence():
    with budget(3, "forward/Viterbi match brute force on 200 random models", 10):
        rng = np.random.default_rng(1234)
        for _ in range(200):
            length = int(rng.integers(1, 5))
            tags = int(rng.integers(1, 4))
            emissions = rng.normal(size=(length, tags))
            transitions = rng.normal(size=(tags, tags))
            log_z = log_partition_from_emissions(emissions, transitions)
            assert abs(log_z - brute_force_log_partition(emissions, transitions)) < 1e-8
            path, _ = viterbi_from_emissions(emissions, transitions)
            expected, _ = brute_force_best_path(emissions, transitions)
            assert path == expected


def test_criterion_4_gradient_checks():
    with budget(4, "analytic gradients match central finite differences", 5):
        rng = np.random.default_rng(77)

        # intent classifier shape: 3 intents, 5 features
        inputs = rng.normal(size=(8, 5))
        labels = rng.integers(0, 3, size=8)
        weights = rng.normal(size=(3, 5)) * 0.4
        bias = rng.normal(size=3) * 0.4
        _, grad_w, grad_b = loss_and_gradient(weights, bias, inputs, labels, 1e-4)
        err_w = max_relative_gradient_error(
            lambda w: loss_and_gradient(w, bias, inputs, labels, 1e-4)[0], weights, grad_w
        )
        err_b = max_relative_gradient_error(
            lambda b: loss_and_gradient(weights, b, inputs, labels, 1e-4)[0], bias, grad_b
        )
        assert max(err_w, err_b) < 1e-4

        # policy shape: 3 actions over a flattened H=2 x D=6 history
        inputs = rng.normal(size=(10, 12))
        labels = rng.integers(0, 3, size=10)
        weights = rng.normal(size=(3, 12)) * 0.4
        bias = rng.normal(size=3) * 0.4
        _, grad_w, grad_b = loss_and_gradient(weights, bias, inputs, labels, 1e-4)
        err_w = max_relative_gradient_error(
            lambda w: loss_and_gradient(w, bias, inputs, labels, 1e-4)[0], weights, grad_w
        )
        err_b = max_relative_gradient_error(
            lambda b: loss_and_gradient(weights, b, inputs, labels, 1e-4)[0], bias, grad_b
        )
        assert max(err_w, err_b) < 1e-4


MARKDOWN_LISTING = "## intent: restaurant_search\n- show me [chinese](cuisine) restaurants\n"
JSON_LISTING = json.dumps(
    {
        "text": "show me chinese restaurants",
        "intent": "restaurant_search",
        "entities": [{"start": 8, "end": 15, "value": "chinese", "entity": "cuisine"}],
    }
)
STORY_LISTING = (
    "## story_07715946\n"
    "* greet\n"
    "   - utter_ask_howcanhelp\n"
    '* inform{"location":"rome","price":"cheap"}\n'
    "   - utter_on_it\n"
    "   - utter_ask_cuisine\n"
    '* inform{"cuisine":"spanish"}\n'
    "   - utter_ask_numpeople\n"
    '* inform{"people":"six"}\n'
    "   - action_ack_dosearch\n"
)


def _random_identifier(rng: random.Random) -> str:
    return rng.choice("abcdefghij_") + "".join(
        rng.choice("abcdefghij0123456789_") for _ in range(rng.randrange(1, 8))
    )


def _random_examples(rng: random.Random) -> list[NluExample]:
    examples = []
    for _ in range(rng.randrange(1, 4)):
        words = [rng.choice(["show", "book", "find", "near", "nice"]) for _ in range(rng.randrange(1, 5))]
        spans = []
        text_parts = []
        cursor = 0
        for word in words:
            if rng.random() < 0.4:
                entity = _random_identifier(rng)
                from convokit.training_data import EntitySpan

                spans.append(EntitySpan(start=cursor, end=cursor + len(word), value=word, entity=entity))
            text_parts.append(word)
            cursor += len(word) + 1
        examples.append(
            NluExample(text=" ".join(text_parts), intent=_random_identifier(rng), entities=tuple(spans))
        )
    return examples


def _random_stories(rng: random.Random) -> list[Story]:
    stories = []
    for _ in range(rng.randrange(1, 4)):
        steps: list = []
        for _ in range(rng.randrange(1, 6)):
            if rng.random() < 0.5:
                entities = {
                    _random_identifier(rng): rng.choice(["rome", "six", "cheap", "thai"])
                    for _ in range(rng.randrange(0, 3))
                }
                steps.append(UserStep(intent=_random_identifier(rng), entities=entities))
            else:
                steps.append(ActionStep(action_name=_random_identifier(rng)))
        stories.append(Story(name=_random_identifier(rng), steps=tuple(steps)))
    return stories


def test_criterion_5_parser_conformance():
    with budget(5, "canonical listings parse; 1000 fuzzed round-trips stable", 10):
        assert parse_nlu_markdown(MARKDOWN_LISTING) == parse_nlu_json(JSON_LISTING)
        (story,) = parse_stories(STORY_LISTING)
        assert len(story.steps) == 9
        assert story.steps[0] == UserStep("greet", {})
        assert story.steps[-1] == ActionStep("action_ack_dosearch")

        rng = random.Random(2024)
        for _ in range(334):
            examples = _random_examples(rng)
            assert parse_nlu_markdown(serialize_nlu_markdown(examples)) == examples
            assert parse_nlu_json(serialize_nlu_json(examples)) == examples
            stories = _random_stories(rng)
            once = parse_stories(serialize_stories(stories))
            assert parse_stories(serialize_stories(once)) == once == stories


def test_criterion_6_replay_determinism(tiny_domain):
    from .test_events import random_events

    with budget(6, "replay deterministic; persistence round-trip matches", 5):
        rng = random.Random(6)
        for _ in range(100):
            events = random_events(rng, rng.randrange(0, 30))
            first = replay("c", events, tiny_domain)
            second = replay("c", events, tiny_domain)
            assert first.state_snapshot() == second.state_snapshot()
            assert first.events == second.events

            buffer = io.BytesIO()
            persist_events(events, buffer)
            reloaded = load_events(io.BytesIO(buffer.getvalue()))
            assert replay("c", reloaded, tiny_domain).state_snapshot() == first.state_snapshot()


FIG2_FIXTURE = (
    "## first\n* greet\n   - utter_ask_howcanhelp\n"
    '* inform{"cuisine":"spanish"}\n   - utter_on_it\n'
    "\n"
    "## second\n* greet\n   - utter_ask_howcanhelp\n"
    '* inform{"location":"rome"}\n   - utter_on_it\n'
)


def test_criterion_7_graph_merging(restaurant_domain):
    with budget(7, "shared first interaction merges at H=1, never at infinity", 2):
        stories = parse_stories(FIG2_FIXTURE)
        graph = build_graph(stories, restaurant_domain)
        merged = merge_nodes(graph, stories, restaurant_domain, 1)
        assert merged.node_count == graph.node_count - 1
        unmerged = merge_nodes(graph, stories, restaurant_domain, None)
        assert unmerged.node_count == graph.node_count
        assert unmerged.edges == graph.edges
        assert to_dot(merged) == to_dot(merge_nodes(graph, stories, restaurant_domain, 1))


def test_criterion_8_teaching_efficacy(restaurant_domain, restaurant_stories):
    with budget(8, "correction raises the corrected action's probability", 30):
        policy, _, _ = train_policy_from_stories(restaurant_stories, restaurant_domain, PolicyConfig())
        session = TeachingSession(
            domain=restaurant_domain,
            policy=policy,
            seed=0,
            base_stories=restaurant_stories,
            session_id="story_acceptance",
        )
        view = session.feed_message("/greet{}")
        proposed = view["proposal"]["predicted_action"]
        corrected = "utter_ask_cuisine" if proposed != "utter_ask_cuisine" else "utter_ask_price"

        history = build_history(session.tracker, restaurant_domain, session.policy.max_history)
        target = restaurant_domain.action_index(corrected)
        before = session.policy.probabilities_for_history(history)[target]
        session.decide("wrong_action", action=corrected)
        after = session.policy.probabilities_for_history(history)[target]
        assert after > before

        markdown = session.export_stories()
        (story,) = parse_stories(markdown)
        assert list(story.steps) == session.collected_steps


def test_criterion_9_service_contract(
    restaurant_domain, restaurant_stories, restaurant_nlu_examples, vectors_path
):
    with budget(9, "parse normalization; 50 concurrent turns stay linearizable", 30):
        policy, _, _ = train_policy_from_stories(restaurant_stories, restaurant_domain, PolicyConfig())
        nlu, _ = train_pipeline(default_config(str(vectors_path)), restaurant_nlu_examples)
        app = create_app(
            restaurant_domain, policy=policy, nlu=nlu,
            stories=restaurant_stories, config=ServiceConfig(),
        )
        client = TestClient(app)

        for text in ("show me chinese restaurants", "hello", ""):
            body = client.post("/parse", json={"text": text}).json()
            assert sum(r["confidence"] for r in body["intent_ranking"]) == pytest.approx(1.0, abs=1e-6)

        turns = [
            ("/greet{}",),
            ('/inform{"location":"rome","price":"cheap"}',),
            ('/inform{"cuisine":"spanish"}',),
            ('/inform{"people":"six"}',),
            ("/affirm{}",),
        ]
        conversation_ids = [f"conv_{i}" for i in range(10)]
        requests = [
            (cid, turn, text)
            for cid in conversation_ids
            for turn, (text,) in enumerate(turns)
        ]

        # per conversation the engine must order turns; issue each
        # conversation's messages in order but interleaved across threads
        def send(request):
            cid, turn, text = request
            response = client.post(f"/conversations/{cid}/messages", json={"text": text})
            assert response.status_code == 200, response.text
            return cid

        with concurrent.futures.ThreadPoolExecutor(max_workers=10) as pool:
            for turn in range(len(turns)):
                batch = [r for r in requests if r[1] == turn]
                list(pool.map(send, batch))

        for cid in conversation_ids:
            body = client.get(f"/conversations/{cid}/tracker").json()
            assert body["slots"] == {
                "location": "rome", "price": "cheap", "cuisine": "spanish", "people": "six",
            }
            events = body["events"]
            user_texts = [e["text"] for e in events if e["type"] == "user_uttered"]
            assert user_texts == [t[0] for t in turns]  # isolation, in order
            # serial interleaving: every turn's events are contiguous; an
            # executed action always closes the segment before the next user event
            last_kind = None
            for event in events:
                if event["type"] == "user_uttered":
                    assert last_kind in (None, "action_executed")
                last_kind = event["type"]
            assert events[-1]["type"] == "action_executed"
            assert events[-1]["action"] == "action_listen"
