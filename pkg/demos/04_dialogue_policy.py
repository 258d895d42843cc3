"""
Featurized dialogue state and the action policy
================================================

A tracker state becomes one dense vector (last action, latest intent,
entity flags, slot features); the last H states are stacked and a linear
softmax model over the flattened stack picks the next action.
"""

from pathlib import Path

import numpy as np

from convokit import (
    ActionExecuted,
    Tracker,
    UserUttered,
    load_domain,
    parse_stories,
)
from convokit.policy import (
    PolicyConfig,
    build_history,
    featurize_state,
    state_dimension,
    stories_to_dataset,
    train_policy_from_stories,
)

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "restaurant"

domain = load_domain(DATA / "domain.json")
stories = parse_stories((DATA / "stories.md").read_text())

print("state vector width D =", state_dimension(domain))
tracker = Tracker("demo", domain)
tracker.apply(ActionExecuted(action_name="action_listen"))
tracker.apply(UserUttered(text="/greet{}", intent="greet"))
vec = featurize_state(tracker, domain)
print("nonzero coordinates after listen+greet:", np.flatnonzero(vec).tolist())

history = build_history(tracker, domain, max_history=5)
print("history shape (H x D):", history.shape, "- zero-padded rows:", int((~history.any(axis=1)).sum()))

dataset = stories_to_dataset(stories, domain, 5)
print(f"\n{len(stories)} stories -> {len(dataset)} labeled (history, action) points")

model, losses, _ = train_policy_from_stories(stories, domain, PolicyConfig())
print(f"policy loss {losses[0]:.3f} -> {losses[-1]:.3f} over {len(losses)} epochs")

print("\nranking after the greeting:")
for action, probability in model.predict(tracker, domain)[:4]:
    print(f"   {action:28s} {probability:.3f}")
