"""The static conversational universe: intents, entities, slots, actions, templates.

A :class:`Domain` is loaded once from a JSON file and is immutable afterwards;
every featurization and classifier label index is defined by the order in
which names appear in that file.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, ValidationError

ACTION_LISTEN = "action_listen"

IDENTIFIER_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")

SLOT_KINDS = ("binary", "categorical", "float", "text")


def _check_identifier(name: object, what: str) -> str:
    if not isinstance(name, str) or not IDENTIFIER_RE.match(name):
        raise ValidationError(f"invalid {what} name: {name!r} (must match [a-z_][a-z0-9_]*)")
    return name


def _check_unique(names: list[str], what: str) -> None:
    seen = set()
    for name in names:
        if name in seen:
            raise ValidationError(f"duplicate {what} name: {name!r}")
        seen.add(name)


@dataclass(frozen=True)
class SlotDefinition:
    """One slot: a named piece of conversation memory with a featurization kind.

    ``categories`` is required (with >= 2 distinct entries) iff
    ``kind == "categorical"``; ``thresholds`` is an optional strictly
    ascending list of bucket boundaries, only meaningful for float slots.
    """

    name: str
    kind: str = "text"
    categories: tuple[str, ...] = ()
    thresholds: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        _check_identifier(self.name, "slot")
        if self.kind not in SLOT_KINDS:
            raise ValidationError(f"slot {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            if len(set(self.categories)) < 2:
                raise ValidationError(
                    f"categorical slot {self.name!r} needs >= 2 distinct categories"
                )
            if len(set(self.categories)) != len(self.categories):
                raise ValidationError(f"categorical slot {self.name!r} has duplicate categories")
        elif self.categories:
            raise ValidationError(f"slot {self.name!r}: categories only allowed for categorical kind")
        if self.thresholds:
            if self.kind != "float":
                raise ValidationError(f"slot {self.name!r}: thresholds only allowed for float kind")
            if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
                raise ValidationError(f"slot {self.name!r}: thresholds must be strictly ascending")

    @property
    def feature_width(self) -> int:
        """Number of state-vector elements this slot contributes."""
        if self.kind == "categorical":
            return len(self.categories)
        if self.kind == "float" and self.thresholds:
            return len(self.thresholds) + 1
        return 1

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "kind": self.kind}
        if self.categories:
            d["categories"] = list(self.categories)
        if self.thresholds:
            d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SlotDefinition":
        if not isinstance(d, dict) or "name" not in d:
            raise ValidationError(f"slot definition must be an object with a name, got {d!r}")
        return cls(
            name=d["name"],
            kind=d.get("kind", "text"),
            categories=tuple(d.get("categories") or ()),
            thresholds=tuple(float(t) for t in (d.get("thresholds") or ())),
        )


@dataclass(frozen=True)
class Domain:
    """Validated, immutable universe of intents, entities, slots, actions
    and response templates.

    Ordering is canonical: the position of a name in its list is its
    classifier/featurization index, stable for as long as the file does
    not change. ``action_listen`` is prepended when the file omits it.
    """

    intents: tuple[str, ...] = ()
    entities: tuple[str, ...] = ()
    slots: tuple[SlotDefinition, ...] = ()
    actions: tuple[str, ...] = ()
    templates: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.intents:
            _check_identifier(name, "intent")
        for name in self.entities:
            _check_identifier(name, "entity")
        for name in self.actions:
            _check_identifier(name, "action")
        if ACTION_LISTEN not in self.actions:
            object.__setattr__(self, "actions", (ACTION_LISTEN,) + tuple(self.actions))
        _check_unique(list(self.intents), "intent")
        _check_unique(list(self.entities), "entity")
        _check_unique([s.name for s in self.slots], "slot")
        _check_unique(list(self.actions), "action")
        for action in self.actions:
            if action.startswith("utter_"):
                variants = self.templates.get(action)
                if not variants:
                    raise ValidationError(f"action {action!r} has no response template")
        for action, variants in self.templates.items():
            if not variants:
                raise ValidationError(f"template {action!r} has an empty variant list")
        object.__setattr__(self, "_intent_index", {n: i for i, n in enumerate(self.intents)})
        object.__setattr__(self, "_entity_index", {n: i for i, n in enumerate(self.entities)})
        object.__setattr__(self, "_slot_index", {s.name: i for i, s in enumerate(self.slots)})
        object.__setattr__(self, "_action_index", {n: i for i, n in enumerate(self.actions)})

    # -- canonical index lookups ------------------------------------------

    def action_index(self, name: str) -> int | None:
        """0-based position of ``name`` in the canonical action order,
        or None when the action is not declared (never confuse with 0)."""
        return self._action_index.get(name)

    def intent_index(self, name: str) -> int | None:
        return self._intent_index.get(name)

    def entity_index(self, name: str) -> int | None:
        return self._entity_index.get(name)

    def slot_index(self, name: str) -> int | None:
        return self._slot_index.get(name)

    @property
    def slot_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots)

    def slot(self, name: str) -> SlotDefinition:
        idx = self.slot_index(name)
        if idx is None:
            raise ValidationError(f"unknown slot: {name!r}")
        return self.slots[idx]

    def fingerprint(self) -> str:
        """Hash of the canonical orders; policies trained against a domain
        refuse to predict when this changes. Templates are excluded: they
        affect wording, not featurization."""
        payload = {
            "intents": list(self.intents),
            "entities": list(self.entities),
            "slots": [s.to_dict() for s in self.slots],
            "actions": list(self.actions),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def to_dict(self) -> dict:
        return {
            "intents": list(self.intents),
            "entities": list(self.entities),
            "slots": [s.to_dict() for s in self.slots],
            "actions": list(self.actions),
            "templates": {k: list(v) for k, v in self.templates.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        if not isinstance(d, dict):
            raise ValidationError("domain must be a JSON object")
        for key in ("intents", "entities", "slots", "actions"):
            value = d.get(key, [])
            if not isinstance(value, list):
                raise ValidationError(f"domain key {key!r} must be a list")
        templates_raw = d.get("templates", {})
        if not isinstance(templates_raw, dict):
            raise ValidationError("domain key 'templates' must be an object")
        templates = {}
        for action, variants in templates_raw.items():
            if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
                raise ValidationError(f"template {action!r} must map to a list of strings")
            templates[action] = tuple(variants)
        return cls(
            intents=tuple(d.get("intents", [])),
            entities=tuple(d.get("entities", [])),
            slots=tuple(SlotDefinition.from_dict(s) for s in d.get("slots", [])),
            actions=tuple(d.get("actions", [])),
            templates=templates,
        )


def load_domain(path: str | Path) -> Domain:
    """Load and validate a domain JSON file.

    Raises :class:`ParseError` (with line/column) on malformed JSON and
    :class:`ValidationError` on invariant violations.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno, path=str(path)) from exc
    return Domain.from_dict(data)
