"""
The three training-data formats
===============================

NLU examples come as markdown or JSON (both parse to the same values);
dialogues come as markdown stories. Every format round-trips through its
serializer.
"""

from pathlib import Path

from convokit import (
    load_domain,
    parse_nlu_json,
    parse_nlu_markdown,
    parse_stories,
    serialize_nlu_json,
    serialize_stories,
    story_to_events,
)

ROOT = Path(__file__).resolve().parents[1]

markdown = "## intent: restaurant_search\n- show me [chinese](cuisine) restaurants\n"
(example,) = parse_nlu_markdown(markdown)
print("markdown example ->", example.text)
print("entity span      ->", example.entities[0].to_dict())

same_as_json = parse_nlu_json(serialize_nlu_json([example]))
print("json round-trip equals markdown parse:", same_as_json == [example])

stories = parse_stories((ROOT / "data" / "restaurant" / "stories.md").read_text())
print(f"\nparsed {len(stories)} stories; first one:")
story = stories[0]
for step in story.steps:
    print("   ", step)

domain = load_domain(ROOT / "data" / "restaurant" / "domain.json")
events = story_to_events(story, domain)
print(f"\nas events ({len(events)} total, listens inserted before user turns):")
for event in events[:6]:
    print("   ", event.to_dict()["type"], "-", {k: v for k, v in event.to_dict().items() if k not in ("type", "timestamp")})

print("\nserializer round-trip stable:", parse_stories(serialize_stories(stories)) == stories)
