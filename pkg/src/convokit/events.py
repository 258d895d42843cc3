"""Conversation events and the per-conversation tracker.

Events are immutable facts; the tracker's derived state (slots, latest
message, latest action) is a pure function of its event log and can always
be rebuilt by replay. The log itself is append-only: ``Restarted`` resets
derived state but never removes history.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Iterable

from .domain import ACTION_LISTEN, Domain
from .errors import EventError, ParseError


def _now() -> float:
    return time.time()


@dataclass(frozen=True)
class EntityMention:
    """An entity attached to a user message.

    Offsets are present when the mention came out of the extractor and
    absent for direct ``/intent{...}`` dialogue acts.
    """

    entity: str
    value: str
    start: int | None = None
    end: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"entity": self.entity, "value": self.value}
        if self.start is not None:
            d["start"] = self.start
        if self.end is not None:
            d["end"] = self.end
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EntityMention":
        return cls(
            entity=d["entity"],
            value=d["value"],
            start=d.get("start"),
            end=d.get("end"),
        )


@dataclass(frozen=True)
class Event:
    """Base class for all events. ``timestamp`` is seconds since epoch."""

    timestamp: float = field(default_factory=_now, kw_only=True)

    type_name = ""

    def payload(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        d = {"type": self.type_name, "timestamp": self.timestamp}
        d.update(self.payload())
        return d


@dataclass(frozen=True)
class UserUttered(Event):
    text: str = ""
    intent: str = ""
    confidence: float = 1.0
    entities: tuple[EntityMention, ...] = ()

    type_name = "user_uttered"

    def payload(self) -> dict:
        return {
            "text": self.text,
            "intent": self.intent,
            "confidence": self.confidence,
            "entities": [e.to_dict() for e in self.entities],
        }


@dataclass(frozen=True)
class ActionExecuted(Event):
    action_name: str = ""

    type_name = "action_executed"

    def payload(self) -> dict:
        return {"action": self.action_name}


@dataclass(frozen=True)
class BotUttered(Event):
    text: str = ""

    type_name = "bot_uttered"

    def payload(self) -> dict:
        return {"text": self.text}


@dataclass(frozen=True)
class SlotSet(Event):
    slot_name: str = ""
    value: str | float | int | None = None

    type_name = "slot_set"

    def payload(self) -> dict:
        return {"slot": self.slot_name, "value": self.value}


@dataclass(frozen=True)
class AllSlotsReset(Event):
    type_name = "all_slots_reset"


@dataclass(frozen=True)
class Restarted(Event):
    type_name = "restarted"


_EVENT_TYPES: dict[str, type[Event]] = {
    cls.type_name: cls
    for cls in (UserUttered, ActionExecuted, BotUttered, SlotSet, AllSlotsReset, Restarted)
}


def event_from_dict(d: dict) -> Event:
    """Rebuild an event from its JSON form; raises KeyError on missing keys."""
    type_name = d["type"]
    cls = _EVENT_TYPES.get(type_name)
    if cls is None:
        raise ValueError(f"unknown event type: {type_name!r}")
    ts = float(d["timestamp"])
    if cls is UserUttered:
        return UserUttered(
            text=d["text"],
            intent=d["intent"],
            confidence=float(d.get("confidence", 1.0)),
            entities=tuple(EntityMention.from_dict(e) for e in d.get("entities", [])),
            timestamp=ts,
        )
    if cls is ActionExecuted:
        return ActionExecuted(action_name=d["action"], timestamp=ts)
    if cls is BotUttered:
        return BotUttered(text=d["text"], timestamp=ts)
    if cls is SlotSet:
        return SlotSet(slot_name=d["slot"], value=d["value"], timestamp=ts)
    return cls(timestamp=ts)


class Tracker:
    """Event log plus state derived exclusively by replaying it.

    All mutation goes through :meth:`apply`; callers must serialize
    operations on a single tracker externally (the engine holds one lock
    per conversation). Distinct trackers are independent.
    """

    def __init__(self, conversation_id: str, domain: Domain):
        self.conversation_id = conversation_id
        self.domain = domain
        self.events: list[Event] = []
        self._reset_derived()

    def _reset_derived(self) -> None:
        self.slots: dict[str, str | float | int | None] = {
            name: None for name in self.domain.slot_names
        }
        self.latest_message: UserUttered | None = None
        self.latest_action: str | None = None

    # -- event application -------------------------------------------------

    def _validate(self, event: Event) -> None:
        if isinstance(event, SlotSet) and event.slot_name not in self.slots:
            raise EventError(f"unknown slot in SlotSet: {event.slot_name!r}")

    def apply(self, event: Event) -> "Tracker":
        """Append ``event`` and update derived state; returns self."""
        self._validate(event)
        self.events.append(event)
        self._derive(event)
        return self

    def _derive(self, event: Event) -> None:
        if isinstance(event, UserUttered):
            self.latest_message = event
        elif isinstance(event, ActionExecuted):
            self.latest_action = event.action_name
        elif isinstance(event, SlotSet):
            self.slots[event.slot_name] = event.value
        elif isinstance(event, AllSlotsReset):
            for name in self.slots:
                self.slots[name] = None
        elif isinstance(event, Restarted):
            self._reset_derived()

    @property
    def is_listening(self) -> bool:
        """True when the last executed action was the listen action."""
        return self.latest_action == ACTION_LISTEN

    # -- snapshots and rebuilds ---------------------------------------------

    def state_snapshot(self) -> dict:
        """Derived state as plain data, for comparison and HTTP exposure."""
        return {
            "slots": dict(self.slots),
            "latest_action": self.latest_action,
            "latest_message": self.latest_message.to_dict() if self.latest_message else None,
            "is_listening": self.is_listening,
        }

    def copy(self) -> "Tracker":
        return replay(self.conversation_id, list(self.events), self.domain)

    def rewind_to(self, n_events: int) -> None:
        """Truncate the log to its first ``n_events`` entries and re-derive.

        Deliberate exception to append-only semantics; only machine
        teaching's intent-correction flow may call this.
        """
        kept = self.events[:n_events]
        self.events = []
        self._reset_derived()
        for event in kept:
            self.apply(event)


def replay(conversation_id: str, events: Iterable[Event], domain: Domain) -> Tracker:
    """Build a tracker by applying ``events`` in order to a fresh one.

    The first invalid event aborts the replay, reporting its index.
    """
    tracker = Tracker(conversation_id, domain)
    for i, event in enumerate(events):
        try:
            tracker.apply(event)
        except EventError as exc:
            raise EventError(str(exc), index=i) from exc
    return tracker


# -- persistence: one JSON object per line ---------------------------------


def persist_events(events: Iterable[Event], sink: BinaryIO) -> None:
    """Write events to ``sink`` as line-delimited JSON (UTF-8)."""
    for event in events:
        line = json.dumps(event.to_dict(), separators=(",", ":"), sort_keys=True)
        sink.write(line.encode("utf-8") + b"\n")


def load_events(source: BinaryIO) -> list[Event]:
    """Inverse of :func:`persist_events`; corrupt lines raise with their number."""
    events = []
    for lineno, raw in enumerate(source.read().splitlines(), start=1):
        line = raw.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        try:
            data = json.loads(line)
            events.append(event_from_dict(data))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"corrupt event line: {exc}", line=lineno) from exc
    return events
