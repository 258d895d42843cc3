from __future__ import annotations

import concurrent.futures
import json

import pytest
from fastapi.testclient import TestClient

from convokit import parse_stories
from convokit.nlu.pipeline import default_config, train_pipeline
from convokit.policy import PolicyConfig, train_policy_from_stories
from convokit.server import ServiceConfig, create_app


@pytest.fixture(scope="module")
def service(restaurant_domain, restaurant_stories, restaurant_nlu_examples, vectors_path):
    policy, _, _ = train_policy_from_stories(restaurant_stories, restaurant_domain, PolicyConfig())
    nlu, _ = train_pipeline(default_config(str(vectors_path)), restaurant_nlu_examples)
    app = create_app(
        restaurant_domain,
        policy=policy,
        nlu=nlu,
        stories=restaurant_stories,
        config=ServiceConfig(max_body_bytes=4096),
    )
    return app


@pytest.fixture()
def client(service):
    return TestClient(service)


class TestParse:
    def test_canonical_sentence(self, client):
        response = client.post("/parse", json={"text": "show me chinese restaurants"})
        assert response.status_code == 200
        body = response.json()
        assert body["intent"]["name"] == "restaurant_search"
        assert body["entities"][0]["start"] == 8
        assert body["entities"][0]["end"] == 15
        assert sum(r["confidence"] for r in body["intent_ranking"]) == pytest.approx(1.0, abs=1e-6)

    def test_empty_text(self, client):
        response = client.post("/parse", json={"text": ""})
        assert response.status_code == 200
        assert response.json()["entities"] == []

    def test_missing_text_field(self, client):
        assert client.post("/parse", json={}).status_code == 400

    def test_malformed_json(self, client):
        response = client.post("/parse", content=b"{not json", headers={"content-type": "application/json"})
        assert response.status_code == 400

    def test_oversize_body(self, client):
        big = json.dumps({"text": "x" * 10000})
        response = client.post("/parse", content=big, headers={"content-type": "application/json"})
        assert response.status_code == 413

    def test_no_model_gives_503(self, restaurant_domain):
        app = create_app(restaurant_domain)
        response = TestClient(app).post("/parse", json={"text": "hi"})
        assert response.status_code == 503


class TestConversations:
    def test_greet_turn(self, client):
        response = client.post("/conversations/t1/messages", json={"text": "/greet{}"})
        assert response.status_code == 200
        body = response.json()
        assert body["responses"] == [{"text": "how can I help you?"}]
        assert body["actions"][-1] == "action_listen"

    def test_bad_id(self, client):
        assert client.post("/conversations/bad id!/messages", json={"text": "hi"}).status_code == 400

    def test_bad_dialogue_act(self, client):
        response = client.post("/conversations/t2/messages", json={"text": "/unknown_intent{}"})
        assert response.status_code == 400

    def test_tracker_snapshot(self, client):
        client.post("/conversations/t3/messages", json={"text": "/greet{}"})
        client.post("/conversations/t3/messages", json={"text": '/inform{"location":"rome","price":"cheap"}'})
        client.post("/conversations/t3/messages", json={"text": '/inform{"cuisine":"spanish"}'})
        client.post("/conversations/t3/messages", json={"text": '/inform{"people":"six"}'})
        response = client.get("/conversations/t3/tracker")
        assert response.status_code == 200
        body = response.json()
        assert body["slots"] == {"location": "rome", "price": "cheap", "cuisine": "spanish", "people": "six"}
        assert body["latest_message"]["intent"] == "inform"
        assert body["events"][0]["type"] == "action_executed"

    def test_fresh_conversation_null_slots(self, client):
        client.post("/conversations/t4/messages", json={"text": "/greet{}"})
        slots = client.get("/conversations/t4/tracker").json()["slots"]
        assert all(v is None for v in slots.values())

    def test_unknown_conversation_404(self, client):
        assert client.get("/conversations/never-seen/tracker").status_code == 404

    def test_isolated_parallel_conversations(self, client):
        cuisines = {f"iso{i}": f"cuisine_{i}" for i in range(4)}
        with concurrent.futures.ThreadPoolExecutor(max_workers=4) as pool:
            futures = [
                pool.submit(
                    client.post,
                    f"/conversations/{cid}/messages",
                    json={"text": "/inform" + json.dumps({"cuisine": value})},
                )
                for cid, value in cuisines.items()
            ]
            for f in futures:
                assert f.result().status_code in (200, 409)
        for cid, value in cuisines.items():
            slots = client.get(f"/conversations/{cid}/tracker").json()["slots"]
            assert slots["cuisine"] == value


class TestTeaching:
    def run_flow(self, client):
        session_id = client.post("/teach/sessions").json()["session_id"]
        view = client.post(f"/teach/sessions/{session_id}/message", json={"text": "/greet{}"}).json()
        return session_id, view

    def test_create_message_view(self, client):
        session_id, view = self.run_flow(client)
        assert view["proposal"]["predicted_action"] == "utter_ask_howcanhelp"
        got = client.get(f"/teach/sessions/{session_id}").json()
        assert got["proposal"] == view["proposal"]
        probs = [p for _, p in got["proposal"]["ranking"]]
        assert probs == sorted(probs, reverse=True)

    def test_get_is_side_effect_free(self, client):
        session_id, _ = self.run_flow(client)
        first = client.get(f"/teach/sessions/{session_id}").json()
        second = client.get(f"/teach/sessions/{session_id}").json()
        assert first == second

    def test_confirm_then_export(self, client):
        session_id, _ = self.run_flow(client)
        view = client.post(
            f"/teach/sessions/{session_id}/decision", json={"choice": "confirm"}
        ).json()
        assert view["exportable"]
        response = client.post(f"/teach/sessions/{session_id}/decision", json={"choice": "export"})
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/markdown")
        (story,) = parse_stories(response.text)
        assert story.name == session_id

    def test_unknown_session_404(self, client):
        assert client.get("/teach/sessions/ghost").status_code == 404
        assert client.post("/teach/sessions/ghost/message", json={"text": "x"}).status_code == 404

    def test_decision_state_mismatch_409(self, client):
        session_id = client.post("/teach/sessions").json()["session_id"]
        response = client.post(f"/teach/sessions/{session_id}/decision", json={"choice": "confirm"})
        assert response.status_code == 409

    def test_unknown_action_400(self, client):
        session_id, _ = self.run_flow(client)
        response = client.post(
            f"/teach/sessions/{session_id}/decision",
            json={"choice": "wrong_action", "action": "utter_nope"},
        )
        assert response.status_code == 400

    def test_bad_choice_400(self, client):
        session_id, _ = self.run_flow(client)
        response = client.post(f"/teach/sessions/{session_id}/decision", json={"choice": "banana"})
        assert response.status_code == 400


class TestLoopCap:
    def test_capped_turn_reports_409_with_actions(self, restaurant_domain, restaurant_stories):
        import numpy as np

        from convokit.policy import PolicyModel, train_policy_from_stories

        trained, _, _ = train_policy_from_stories(restaurant_stories, restaurant_domain)
        looping = PolicyModel(
            weights=np.zeros_like(trained.weights),
            bias=np.array([10.0 if a == "utter_on_it" else 0.0 for a in restaurant_domain.actions]),
            config=trained.config,
            fingerprint=trained.fingerprint,
            action_names=trained.action_names,
        )
        app = create_app(restaurant_domain, policy=looping, stories=restaurant_stories)
        response = TestClient(app).post("/conversations/loop/messages", json={"text": "/greet{}"})
        assert response.status_code == 409
        body = response.json()
        assert body["capped"] is True
        assert len(body["actions"]) == 10


class TestServiceConfig:
    def test_file_and_env_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "service.json"
        path.write_text(json.dumps({"port": 7000, "domain_path": "/a/domain.json"}), encoding="utf-8")
        monkeypatch.setenv("CONVOKIT_PORT", "7777")
        monkeypatch.setenv("CONVOKIT_DOMAIN", "/b/domain.json")
        config = ServiceConfig.from_file(path)
        assert config.port == 7777
        assert config.domain_path == "/b/domain.json"
        assert config.max_body_bytes == 1_048_576  # default preserved


class TestGraphEndpoint:
    def test_merged_dot(self, client):
        response = client.get("/graph?max_history=1")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/vnd.graphviz")
        assert response.text.startswith("digraph stories {")

    def test_default_is_one(self, client):
        assert client.get("/graph").text == client.get("/graph?max_history=1").text

    def test_large_window_equals_unmerged(self, client):
        big = client.get("/graph?max_history=9999").text
        assert big.count(" -> ") >= client.get("/graph?max_history=1").text.count(" -> ")

    def test_non_integer_rejected(self, client):
        assert client.get("/graph?max_history=abc").status_code == 400

    def test_zero_rejected(self, client):
        assert client.get("/graph?max_history=0").status_code == 400
