"""The conversation loop: interpret a message, update the tracker, then
predict and execute actions until the policy says listen.

Actions never mutate the tracker directly; they return events which the
engine appends. Turns for the same conversation are serialized by a
per-conversation lock; distinct conversations proceed in parallel.
"""

from __future__ import annotations

import json
import logging
import random
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .domain import ACTION_LISTEN, Domain
from .errors import DirectActError, ValidationError
from .events import (
    ActionExecuted,
    BotUttered,
    EntityMention,
    Event,
    SlotSet,
    Tracker,
    UserUttered,
    load_events,
    persist_events,
)
from .policy import PolicyModel

logger = logging.getLogger(__name__)

MAX_ACTIONS_PER_TURN = 10  # an untrained policy can cycle; cap the loop

DIRECT_ACT_RE = re.compile(r"/([a-z_][a-z0-9_]*)\s*(\{.*\})?\s*$", re.DOTALL)

ActionHandler = Callable[[Tracker, Domain], list[Event]]


class Interpreter(Protocol):
    """Anything that can turn text into a ParseResult-shaped object."""

    def process(self, text: str): ...


@dataclass(frozen=True)
class TurnResult:
    """What one handle_message call did."""

    responses: tuple[str, ...]
    actions_taken: tuple[str, ...]
    events_appended: int
    capped: bool = False

    def to_dict(self) -> dict:
        return {
            "responses": [{"text": t} for t in self.responses],
            "actions": list(self.actions_taken),
            "events_appended": self.events_appended,
            "capped": self.capped,
        }


class ActionRegistry:
    """Resolves action names to handlers.

    ``action_listen`` and ``utter_*`` template actions are built in;
    custom handlers are registered by name. With ``default_noop`` set,
    unknown custom actions resolve to a do-nothing handler (used by the
    server and teaching so arbitrary domains stay executable).
    """

    def __init__(self, default_noop: bool = False):
        self._handlers: dict[str, ActionHandler] = {}
        self.default_noop = default_noop

    def register(self, name: str, handler: ActionHandler) -> None:
        self._handlers[name] = handler

    def get(self, name: str) -> ActionHandler | None:
        return self._handlers.get(name)


def execute_action(
    name: str,
    tracker: Tracker,
    domain: Domain,
    registry: ActionRegistry,
    rng: random.Random,
) -> list[Event]:
    """Run one action and return the events it produced.

    ``utter_*`` picks a template variant uniformly with ``rng``; custom
    handlers get a read-only view (a replayed copy) of the tracker and
    their returned events are validated against the domain.
    """
    if name == ACTION_LISTEN:
        return []
    handler = registry.get(name)
    if handler is None:
        if name.startswith("utter_"):
            variants = domain.templates.get(name)
            if not variants:
                raise ValidationError(f"no template for action {name!r}")
            return [BotUttered(text=rng.choice(variants))]
        if registry.default_noop:
            logger.info("custom action %r has no handler; executing as a no-op", name)
            return []
        raise ValidationError(f"unregistered action: {name!r}")
    events = handler(tracker.copy(), domain)
    for event in events:
        if isinstance(event, SlotSet) and domain.slot_index(event.slot_name) is None:
            raise ValidationError(
                f"action {name!r} returned SlotSet for unknown slot {event.slot_name!r}"
            )
    return list(events)


def parse_direct_act(text: str, domain: Domain) -> tuple[str, list[EntityMention]]:
    """Parse a ``/intent{"k":"v"}`` dialogue act; the payload is optional."""
    match = DIRECT_ACT_RE.fullmatch(text.strip())
    if not match:
        raise DirectActError(f"malformed dialogue act: {text!r}")
    intent, payload = match.group(1), match.group(2)
    if domain.intent_index(intent) is None:
        raise DirectActError(f"unknown intent in dialogue act: {intent!r}")
    mentions: list[EntityMention] = []
    if payload:
        try:
            data = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise DirectActError(f"invalid JSON in dialogue act: {exc.msg}") from exc
        if not isinstance(data, dict):
            raise DirectActError("dialogue act payload must be a JSON object")
        for key, value in data.items():
            mentions.append(
                EntityMention(entity=key, value=value if isinstance(value, str) else json.dumps(value))
            )
    return intent, mentions


def interpret_message(
    text: str, domain: Domain, interpreter: Interpreter | None
) -> UserUttered:
    """Turn raw text into a UserUttered event.

    Text starting with ``/`` is a direct dialogue act (confidence 1.0,
    interpreter bypassed); anything else goes through the interpreter.
    """
    if text.startswith("/"):
        intent, mentions = parse_direct_act(text, domain)
        return UserUttered(text=text, intent=intent, confidence=1.0, entities=tuple(mentions))
    if interpreter is None:
        raise ValidationError("no interpreter configured and message is not a direct act")
    result = interpreter.process(text)
    mentions = tuple(
        EntityMention(entity=s.entity, value=s.value, start=s.start, end=s.end)
        for s in result.entities
    )
    return UserUttered(
        text=text,
        intent=result.intent["name"],
        confidence=float(result.intent["confidence"]),
        entities=mentions,
    )


class TrackerStore:
    """In-memory tracker map with optional per-conversation event-log
    persistence (line-delimited JSON files, append-only)."""

    def __init__(self, domain: Domain, persist_dir: str | Path | None = None):
        self.domain = domain
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self._trackers: dict[str, Tracker] = {}
        self._persisted_counts: dict[str, int] = {}
        self._lock = threading.Lock()

    def _log_path(self, conversation_id: str) -> Path | None:
        if self.persist_dir is None:
            return None
        return self.persist_dir / f"{conversation_id}.jsonl"

    def get(self, conversation_id: str) -> Tracker | None:
        """The tracker for an existing conversation, or None."""
        with self._lock:
            tracker = self._trackers.get(conversation_id)
            if tracker is not None:
                return tracker
            path = self._log_path(conversation_id)
            if path is not None and path.exists():
                with open(path, "rb") as handle:
                    events = load_events(handle)
                tracker = Tracker(conversation_id, self.domain)
                for event in events:
                    tracker.apply(event)
                self._trackers[conversation_id] = tracker
                self._persisted_counts[conversation_id] = len(events)
                return tracker
            return None

    def get_or_create(self, conversation_id: str) -> Tracker:
        tracker = self.get(conversation_id)
        if tracker is None:
            with self._lock:
                tracker = self._trackers.setdefault(
                    conversation_id, Tracker(conversation_id, self.domain)
                )
        return tracker

    def save(self, tracker: Tracker) -> None:
        """Append any not-yet-persisted events to the conversation's log file."""
        path = self._log_path(tracker.conversation_id)
        if path is None:
            return
        with self._lock:
            done = self._persisted_counts.get(tracker.conversation_id, 0)
            pending = tracker.events[done:]
            if pending:
                self.persist_dir.mkdir(parents=True, exist_ok=True)
                with open(path, "ab") as handle:
                    persist_events(pending, handle)
            self._persisted_counts[tracker.conversation_id] = len(tracker.events)

    def conversation_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._trackers)


@dataclass
class DialogueEngine:
    """Bundles the trained models and runs turns."""

    domain: Domain
    policy: PolicyModel
    interpreter: Interpreter | None = None
    registry: ActionRegistry = field(default_factory=ActionRegistry)
    store: TrackerStore = None  # type: ignore[assignment]
    seed: int = 0

    def __post_init__(self) -> None:
        self.policy.check_domain(self.domain)
        if self.store is None:
            self.store = TrackerStore(self.domain)
        self.rng = random.Random(self.seed)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def conversation_lock(self, conversation_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(conversation_id, threading.Lock())

    def handle_message(self, conversation_id: str, text: str) -> TurnResult:
        """Run one full turn; same-conversation turns are serialized."""
        with self.conversation_lock(conversation_id):
            tracker = self.store.get_or_create(conversation_id)
            before = len(tracker.events)
            if not tracker.events:
                # a conversation opens with the bot listening, matching the
                # implicit listen every training story starts with
                tracker.apply(ActionExecuted(action_name=ACTION_LISTEN))

            user_event = interpret_message(text, self.domain, self.interpreter)
            tracker.apply(user_event)
            for mention in user_event.entities:
                if self.domain.slot_index(mention.entity) is not None:
                    tracker.apply(SlotSet(slot_name=mention.entity, value=mention.value))

            responses: list[str] = []
            actions_taken: list[str] = []
            capped = False
            while True:
                ranking = self.policy.predict(tracker, self.domain)
                action = ranking[0][0]
                if action != ACTION_LISTEN and len(actions_taken) >= MAX_ACTIONS_PER_TURN:
                    logger.warning(
                        "conversation %r: loop cap hit after %d actions; forcing listen",
                        conversation_id,
                        len(actions_taken),
                    )
                    capped = True
                    tracker.apply(ActionExecuted(action_name=ACTION_LISTEN))
                    break
                tracker.apply(ActionExecuted(action_name=action))
                if action == ACTION_LISTEN:
                    actions_taken.append(action)
                    break
                events = execute_action(action, tracker, self.domain, self.registry, self.rng)
                for event in events:
                    tracker.apply(event)
                    if isinstance(event, BotUttered):
                        responses.append(event.text)
                actions_taken.append(action)

            self.store.save(tracker)
            return TurnResult(
                responses=tuple(responses),
                actions_taken=tuple(actions_taken),
                events_appended=len(tracker.events) - before,
                capped=capped,
            )
