"""
The HTTP service
================

Everything the library does is reachable over HTTP: parsing, conversation
turns, tracker inspection, teaching sessions, and graph export. Here the
app runs in-process via the test client; `convokit serve` runs the same
app under uvicorn.
"""

from pathlib import Path

from fastapi.testclient import TestClient

from convokit import load_domain, parse_nlu_markdown, parse_stories
from convokit.nlu.pipeline import default_config, train_pipeline
from convokit.policy import PolicyConfig, train_policy_from_stories
from convokit.server import ServiceConfig, create_app

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

domain = load_domain(DATA / "domain.json")
stories = parse_stories((DATA / "stories.md").read_text())
examples = parse_nlu_markdown((DATA / "nlu.md").read_text())

policy, _, _ = train_policy_from_stories(stories, domain, PolicyConfig())
nlu, _ = train_pipeline(default_config(str(DATA / "vectors_25d.txt")), examples)

app = create_app(domain, policy=policy, nlu=nlu, stories=stories, config=ServiceConfig())
client = TestClient(app)

print("POST /parse")
body = client.post("/parse", json={"text": "show me chinese restaurants"}).json()
print("   intent:", body["intent"], "| entities:", body["entities"])

print("\nPOST /conversations/demo/messages (plain text goes through the NLU)")
body = client.post("/conversations/demo/messages", json={"text": "hello there"}).json()
print("   responses:", [r["text"] for r in body["responses"]])

client.post("/conversations/demo/messages", json={"text": '/inform{"cuisine":"spanish"}'})
print("\nGET /conversations/demo/tracker")
body = client.get("/conversations/demo/tracker").json()
print("   slots:", body["slots"])

print("\nteaching session over HTTP")
session_id = client.post("/teach/sessions").json()["session_id"]
view = client.post(f"/teach/sessions/{session_id}/message", json={"text": "/greet{}"}).json()
print("   proposal:", view["proposal"]["predicted_action"])
client.post(f"/teach/sessions/{session_id}/decision", json={"choice": "confirm"})
export = client.post(f"/teach/sessions/{session_id}/decision", json={"choice": "export"})
print("   exported markdown:", export.text.strip().splitlines()[0], "…")

print("\nGET /graph?max_history=1")
dot = client.get("/graph?max_history=1").text
print("   ", dot.splitlines()[0], f"({dot.count(' -> ')} edges)")
