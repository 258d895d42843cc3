"""
Machine teaching: correcting the policy as it runs
===================================================

Every proposed action is confirmed or corrected by the teacher; each
decision becomes a new training point and the policy is fine-tuned on
the spot. The taught conversation exports as a regular story.
"""

from pathlib import Path

from convokit import load_domain, parse_stories
from convokit.policy import PolicyConfig, build_history, train_policy_from_stories
from convokit.teaching import TeachingSession

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

domain = load_domain(DATA / "domain.json")
stories = parse_stories((DATA / "stories.md").read_text())
policy, _, _ = train_policy_from_stories(stories, domain, PolicyConfig())

session = TeachingSession(
    domain=domain, policy=policy, seed=0, base_stories=stories, session_id="story_taught_demo"
)

view = session.feed_message("/greet{}")
proposal = view["proposal"]
print("bot proposes:", proposal["predicted_action"])
print("top of the ranking:")
for action, probability in proposal["ranking"][:3]:
    print(f"   {action:28s} {probability:.3f}")

print("\nteacher confirms.")
view = session.decide("confirm")
proposal = view["proposal"]
print("next proposal:", proposal["predicted_action"])

# Suppose the teacher wants the bot to ask for the cuisine instead.
history = build_history(session.tracker, domain, session.policy.max_history)
target = domain.action_index("utter_ask_cuisine")
before = session.policy.probabilities_for_history(history)[target]
session.decide("wrong_action", action="utter_ask_cuisine")
after = session.policy.probabilities_for_history(history)[target]
print(f"\np(utter_ask_cuisine) at that state: {before:.3f} -> {after:.3f} after partial retrain")

markdown = session.export_stories()
print("\nexported story:\n")
print(markdown)
print("re-parses cleanly:", parse_stories(markdown)[0].name == "story_taught_demo")
