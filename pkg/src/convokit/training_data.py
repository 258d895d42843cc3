"""Parsers and serializers for the three training-data formats.

* NLU markdown: ``## intent:<name>`` sections with ``- <text>`` examples,
  entities annotated inline as ``[value](entity)``.
* NLU JSON: an array (or single object) of ``{text, intent, entities}``.
* Story markdown: ``## <name>`` headers, ``* intent{...}`` user steps and
  ``- action`` action steps; a blank line or the next header ends a story.

All parsers report errors with 1-based line numbers. Parse/serialize
round-trips are stable for every format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .domain import ACTION_LISTEN, Domain
from .errors import ParseError, ValidationError
from .events import ActionExecuted, EntityMention, Event, SlotSet, UserUttered


@dataclass(frozen=True)
class EntitySpan:
    """A typed character span: ``text[start:end] == value`` always holds."""

    start: int
    end: int
    value: str
    entity: str

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "value": self.value, "entity": self.entity}


@dataclass(frozen=True)
class NluExample:
    """One annotated utterance."""

    text: str
    intent: str
    entities: tuple[EntitySpan, ...] = ()

    def __post_init__(self) -> None:
        last_end = 0
        for span in sorted(self.entities, key=lambda s: s.start):
            if not (0 <= span.start < span.end <= len(self.text)):
                raise ValidationError(
                    f"entity span ({span.start},{span.end}) out of bounds for {self.text!r}"
                )
            if span.start < last_end:
                raise ValidationError(f"overlapping entity spans in {self.text!r}")
            if self.text[span.start : span.end] != span.value:
                raise ValidationError(
                    f"span/value mismatch in {self.text!r}: "
                    f"text[{span.start}:{span.end}] == {self.text[span.start:span.end]!r}, "
                    f"annotation says {span.value!r}"
                )
            last_end = span.end


@dataclass(frozen=True)
class UserStep:
    """A story step: user dialogue act with entity key-value pairs."""

    intent: str
    entities: dict[str, str] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, UserStep)
            and self.intent == other.intent
            and self.entities == other.entities
        )

    def __hash__(self) -> int:
        return hash((self.intent, tuple(sorted(self.entities.items()))))


@dataclass(frozen=True)
class ActionStep:
    """A story step: the system executed an action."""

    action_name: str


Step = UserStep | ActionStep


@dataclass(frozen=True)
class Story:
    """A named training dialogue: a non-empty sequence of steps."""

    name: str
    steps: tuple[Step, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("story name must be non-empty")
        if not self.steps:
            raise ValidationError(f"story {self.name!r} has no steps")


# ---------------------------------------------------------------------------
# NLU markdown
# ---------------------------------------------------------------------------


def _strip_annotations(line: str, lineno: int) -> tuple[str, list[EntitySpan]]:
    """Convert inline ``[value](entity)`` annotations into spans against the
    stripped surface text."""
    out: list[str] = []
    spans: list[EntitySpan] = []
    i = 0
    pos = 0  # position in the stripped text
    while i < len(line):
        ch = line[i]
        if ch != "[":
            out.append(ch)
            pos += 1
            i += 1
            continue
        close = line.find("]", i + 1)
        if close < 0:
            raise ParseError("unclosed '[' in entity annotation", line=lineno)
        value = line[i + 1 : close]
        if "[" in value:
            raise ParseError("nested entity annotations are not supported", line=lineno)
        if close + 1 >= len(line) or line[close + 1] != "(":
            raise ParseError("expected '(' after ']' in entity annotation", line=lineno)
        paren = line.find(")", close + 2)
        if paren < 0:
            raise ParseError("unclosed '(' in entity annotation", line=lineno)
        entity = line[close + 2 : paren]
        if not entity:
            raise ParseError("empty entity name in annotation", line=lineno)
        spans.append(EntitySpan(start=pos, end=pos + len(value), value=value, entity=entity))
        out.append(value)
        pos += len(value)
        i = paren + 1
    return "".join(out), spans


def parse_nlu_markdown(text: str) -> list[NluExample]:
    """Parse the markdown NLU format into examples."""
    examples: list[NluExample] = []
    intent: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("##"):
            header = line[2:].strip()
            if not header.startswith("intent:"):
                raise ParseError(f"unsupported section header: {line!r}", line=lineno)
            intent = header[len("intent:") :].strip()
            if not intent:
                raise ParseError("empty intent name in header", line=lineno)
            continue
        if line.startswith("- "):
            if intent is None:
                raise ParseError("example line before any '## intent:' header", line=lineno)
            stripped, spans = _strip_annotations(line[2:].strip(), lineno)
            examples.append(NluExample(text=stripped, intent=intent, entities=tuple(spans)))
            continue
        raise ParseError(f"unrecognized line: {line!r}", line=lineno)
    return examples


def serialize_nlu_markdown(examples: list[NluExample]) -> str:
    """Inverse of :func:`parse_nlu_markdown`, grouping examples by intent."""
    lines: list[str] = []
    current: str | None = None
    for ex in examples:
        if ex.intent != current:
            if lines:
                lines.append("")
            lines.append(f"## intent:{ex.intent}")
            current = ex.intent
        text = ex.text
        for span in sorted(ex.entities, key=lambda s: s.start, reverse=True):
            text = text[: span.start] + f"[{span.value}]({span.entity})" + text[span.end :]
        lines.append(f"- {text}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# NLU JSON
# ---------------------------------------------------------------------------


def _example_from_obj(obj: dict, where: str) -> NluExample:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object, got {type(obj).__name__}")
    for key in ("text", "intent"):
        if key not in obj:
            raise ParseError(f"{where}: missing key {key!r}")
    spans = []
    for ent in obj.get("entities", []):
        for key in ("start", "end", "value", "entity"):
            if key not in ent:
                raise ParseError(f"{where}: entity missing key {key!r}")
        spans.append(
            EntitySpan(
                start=int(ent["start"]),
                end=int(ent["end"]),
                value=ent["value"],
                entity=ent["entity"],
            )
        )
    try:
        return NluExample(text=obj["text"], intent=obj["intent"], entities=tuple(spans))
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def parse_nlu_json(text: str) -> list[NluExample]:
    """Parse the JSON NLU format (an array of examples, or one object)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ParseError("NLU JSON must be an object or an array of objects")
    return [_example_from_obj(obj, f"example {i}") for i, obj in enumerate(data)]


def serialize_nlu_json(examples: list[NluExample]) -> str:
    payload = [
        {
            "text": ex.text,
            "intent": ex.intent,
            "entities": [s.to_dict() for s in ex.entities],
        }
        for ex in examples
    ]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# Story markdown
# ---------------------------------------------------------------------------


def parse_stories(text: str) -> list[Story]:
    """Parse story markdown into :class:`Story` values."""
    stories: list[Story] = []
    name: str | None = None
    steps: list[Step] = []
    header_line = 0

    def close(lineno: int) -> None:
        nonlocal name, steps
        if name is None:
            return
        if not steps:
            raise ParseError(f"story {name!r} has an empty body", line=header_line)
        stories.append(Story(name=name, steps=tuple(steps)))
        name, steps = None, []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            close(lineno)
            continue
        if line.startswith("##"):
            close(lineno)
            name = line[2:].strip()
            if not name:
                raise ParseError("empty story name", line=lineno)
            header_line = lineno
            continue
        if line.startswith("* "):
            if name is None:
                raise ParseError("user step outside a story", line=lineno)
            steps.append(_parse_user_step(line[2:].strip(), lineno))
            continue
        if line.startswith("- "):
            if name is None:
                raise ParseError("action step outside a story", line=lineno)
            action = line[2:].strip()
            if not action:
                raise ParseError("empty action name", line=lineno)
            steps.append(ActionStep(action_name=action))
            continue
        raise ParseError(f"unrecognized story line: {line!r}", line=lineno)
    close(len(text.splitlines()) + 1)
    return stories


def _parse_user_step(body: str, lineno: int) -> UserStep:
    brace = body.find("{")
    if brace < 0:
        intent, payload = body, "{}"
    else:
        intent, payload = body[:brace].strip(), body[brace:]
    if not intent:
        raise ParseError("user step missing an intent name", line=lineno)
    try:
        parsed = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid entity payload: {exc.msg}", line=lineno) from exc
    if not isinstance(parsed, dict):
        raise ParseError("entity payload must be a JSON object", line=lineno)
    entities: dict[str, str] = {}
    for key, value in parsed.items():
        if isinstance(value, (dict, list)):
            raise ParseError(f"entity value for {key!r} must be a scalar", line=lineno)
        entities[key] = value if isinstance(value, str) else json.dumps(value)
    return UserStep(intent=intent, entities=entities)


def format_user_step(step: UserStep) -> str:
    """Render a user step the way story files write it: ``intent{...}``."""
    if not step.entities:
        return step.intent
    payload = json.dumps(step.entities, separators=(",", ":"), ensure_ascii=False)
    return f"{step.intent}{payload}"


def serialize_stories(stories: list[Story]) -> str:
    blocks = []
    for story in stories:
        lines = [f"## {story.name}"]
        for step in story.steps:
            if isinstance(step, UserStep):
                lines.append(f"* {format_user_step(step)}")
            else:
                lines.append(f"   - {step.action_name}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# ---------------------------------------------------------------------------
# Story -> event conversion
# ---------------------------------------------------------------------------


def story_to_events(story: Story, domain: Domain) -> list[Event]:
    """Expand a story into the event log it describes.

    A listen action is inserted before every user step (transcripts show
    the bot listening before each message, stories leave it implicit);
    entities whose name matches a slot produce SlotSet events.
    """
    events: list[Event] = []
    for i, step in enumerate(story.steps):
        if isinstance(step, UserStep):
            if domain.intent_index(step.intent) is None:
                raise ValidationError(
                    f"story {story.name!r} step {i}: unknown intent {step.intent!r}"
                )
            mentions = []
            for key, value in step.entities.items():
                if domain.entity_index(key) is None:
                    raise ValidationError(
                        f"story {story.name!r} step {i}: unknown entity {key!r}"
                    )
                mentions.append(EntityMention(entity=key, value=value))
            events.append(ActionExecuted(action_name=ACTION_LISTEN))
            events.append(
                UserUttered(
                    text=f"/{format_user_step(step)}",
                    intent=step.intent,
                    confidence=1.0,
                    entities=tuple(mentions),
                )
            )
            for mention in mentions:
                if domain.slot_index(mention.entity) is not None:
                    events.append(SlotSet(slot_name=mention.entity, value=mention.value))
        else:
            if domain.action_index(step.action_name) is None:
                raise ValidationError(
                    f"story {story.name!r} step {i}: unknown action {step.action_name!r}"
                )
            events.append(ActionExecuted(action_name=step.action_name))
    return events
