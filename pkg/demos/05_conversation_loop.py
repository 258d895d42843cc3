"""
The full message loop
=====================

Interpret the message, update the tracker, then predict-and-execute
actions until the policy chooses to listen. Custom actions read the
tracker and answer with events of their own.
"""

from pathlib import Path

from convokit import (
    ActionRegistry,
    BotUttered,
    DialogueEngine,
    load_domain,
    parse_stories,
)
from convokit.policy import PolicyConfig, train_policy_from_stories

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

domain = load_domain(DATA / "domain.json")
stories = parse_stories((DATA / "stories.md").read_text())
policy, _, _ = train_policy_from_stories(stories, domain, PolicyConfig())


def do_search(tracker, domain):
    wanted = {name: value for name, value in tracker.slots.items() if value is not None}
    summary = ", ".join(f"{k}={v}" for k, v in sorted(wanted.items()))
    return [BotUttered(text=f"found 3 places matching {summary}")]


registry = ActionRegistry(default_noop=True)
registry.register("action_ack_dosearch", do_search)

engine = DialogueEngine(domain=domain, policy=policy, registry=registry, seed=1)

conversation = [
    "/greet{}",
    '/inform{"location":"rome","price":"cheap"}',
    '/inform{"cuisine":"spanish"}',
    '/inform{"people":"six"}',
]
for text in conversation:
    result = engine.handle_message("table-for-six", text)
    print(f"user: {text}")
    for response in result.responses:
        print(f"bot:  {response}")
    print(f"      (actions: {' -> '.join(result.actions_taken)})\n")

tracker = engine.store.get("table-for-six")
print("final slots:", {k: v for k, v in tracker.slots.items()})
print("event log length:", len(tracker.events))
