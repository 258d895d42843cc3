"""Interactive machine teaching: the human confirms or corrects every
action the policy proposes, each decision becomes a training point, and
the policy is partially retrained on the spot.

One session drives one live tracker and one live policy. Corrections of
the *intent* rewind the log to the last listen (the one sanctioned
exception to append-only event logs) and are recorded in the session's
audit trail. The collected steps always serialize to a parseable story.
"""

from __future__ import annotations

import logging
import random
import time
import uuid
from dataclasses import dataclass

from .domain import ACTION_LISTEN, Domain
from .engine import ActionRegistry, execute_action, interpret_message
from .errors import ProtocolError, ValidationError
from .events import ActionExecuted, BotUttered, SlotSet, Tracker, UserUttered
from .nlu.pipeline import Pipeline
from .policy import PolicyModel, build_history, stories_to_dataset, train_policy
from .training_data import ActionStep, Step, Story, UserStep, serialize_stories

logger = logging.getLogger(__name__)

PARTIAL_RETRAIN_EPOCHS = 10
PARTIAL_RETRAIN_LR_FACTOR = 0.1

CHOICE_CONFIRM = "confirm"
CHOICE_WRONG_ACTION = "wrong_action"
CHOICE_WRONG_INTENT = "wrong_intent"
CHOICE_EXPORT = "export"


@dataclass(frozen=True)
class Proposal:
    """The policy's suggestion for the next action, with the full ranking."""

    predicted_action: str
    ranking: tuple[tuple[str, float], ...]


class TeachingSession:
    """State machine: awaiting-message <-> proposal-pending.

    ``base_stories`` seed the retraining dataset so corrections fine-tune
    against the original corpus instead of forgetting it.
    """

    def __init__(
        self,
        domain: Domain,
        policy: PolicyModel,
        nlu: Pipeline | None = None,
        seed: int = 0,
        base_stories: list[Story] | None = None,
        session_id: str | None = None,
        registry: ActionRegistry | None = None,
    ):
        policy.check_domain(domain)
        self.domain = domain
        self.policy = policy
        self.nlu = nlu
        self.session_id = session_id or f"story_{uuid.uuid4().hex[:8]}"
        self.rng = random.Random(seed)
        self.registry = registry or ActionRegistry(default_noop=True)
        self.base_stories = list(base_stories or [])
        self._dataset = stories_to_dataset(self.base_stories, domain, policy.max_history)
        self._new_points = 0
        self.tracker = Tracker(f"teach/{self.session_id}", domain)
        self.tracker.apply(ActionExecuted(action_name=ACTION_LISTEN))
        self.collected_steps: list[Step] = []
        self.pending: Proposal | None = None
        self.audit: list[dict] = []

    # -- state -----------------------------------------------------------

    @property
    def awaiting_message(self) -> bool:
        return self.pending is None

    def view(self) -> dict:
        """Plain-data snapshot for the CLI and the HTTP/UI layer."""
        history = []
        for event in self.tracker.events:
            if isinstance(event, ActionExecuted):
                history.append({"kind": "action", "name": event.action_name})
            elif isinstance(event, UserUttered):
                history.append({"kind": "user", "text": event.text, "intent": event.intent})
            elif isinstance(event, BotUttered):
                history.append({"kind": "bot", "text": event.text})
        return {
            "session_id": self.session_id,
            "history": history,
            "slots": dict(self.tracker.slots),
            "proposal": {
                "predicted_action": self.pending.predicted_action,
                "ranking": [[name, prob] for name, prob in self.pending.ranking],
            }
            if self.pending
            else None,
            "menu": "decision" if self.pending else "awaiting_message",
            "exportable": bool(self.collected_steps),
            "audit": list(self.audit),
        }

    # -- teaching flow -----------------------------------------------------

    def feed_message(self, text: str) -> dict:
        """Interpret one user message and produce a proposal."""
        if not self.awaiting_message:
            raise ProtocolError("a proposal is pending; decide on it before sending a message")
        user_event = interpret_message(text, self.domain, self.nlu)
        self._record_user_event(user_event)
        self._propose()
        return self.view()

    def _record_user_event(self, user_event: UserUttered) -> None:
        self.tracker.apply(user_event)
        entities: dict[str, str] = {}
        for mention in user_event.entities:
            value = mention.value if isinstance(mention.value, str) else str(mention.value)
            entities[mention.entity] = value
            if self.domain.slot_index(mention.entity) is not None:
                self.tracker.apply(SlotSet(slot_name=mention.entity, value=mention.value))
        self.collected_steps.append(UserStep(intent=user_event.intent, entities=entities))

    def _propose(self) -> None:
        ranking = self.policy.predict(self.tracker, self.domain)
        self.pending = Proposal(predicted_action=ranking[0][0], ranking=tuple(ranking))

    def decide(self, choice: str, action: str | None = None, act: str | None = None) -> dict:
        """Apply one menu decision; returns the next view (or, for export,
        a view carrying the story markdown under ``"export"``)."""
        if choice == CHOICE_EXPORT:
            markdown = self.export_stories()
            view = self.view()
            view["export"] = markdown
            return view
        if choice == CHOICE_WRONG_INTENT:
            if self.pending is None:
                raise ProtocolError("no message pending; send a message first")
            if not act:
                raise ValidationError("wrong_intent needs the corrected dialogue act")
            self._correct_intent(act)
            return self.view()
        if choice in (CHOICE_CONFIRM, CHOICE_WRONG_ACTION):
            if self.pending is None:
                raise ProtocolError("no proposal pending; send a message first")
            if choice == CHOICE_CONFIRM:
                chosen = self.pending.predicted_action
            else:
                if not action:
                    raise ValidationError("wrong_action needs the corrected action name")
                chosen = action
            if self.domain.action_index(chosen) is None:
                raise ValidationError(f"unknown action: {chosen!r}")
            self._apply_decision(chosen)
            return self.view()
        raise ValidationError(f"unknown choice: {choice!r}")

    def _apply_decision(self, chosen: str) -> None:
        history = build_history(self.tracker, self.domain, self.policy.max_history)
        self._dataset.append((history, self.domain.action_index(chosen)))
        self._new_points += 1

        self.tracker.apply(ActionExecuted(action_name=chosen))
        if chosen != ACTION_LISTEN:
            events = execute_action(chosen, self.tracker, self.domain, self.registry, self.rng)
            for event in events:
                self.tracker.apply(event)
            self.collected_steps.append(ActionStep(action_name=chosen))

        self._partial_retrain()
        if chosen == ACTION_LISTEN:
            self.pending = None
        else:
            self._propose()

    def _partial_retrain(self) -> None:
        """Warm-start fine-tune on the full augmented dataset: fast enough
        to stay interactive, stable against forgetting at this scale."""
        self.policy, _ = train_policy(
            self._dataset,
            self.domain,
            config=self.policy.config,
            warm_start=self.policy,
            epochs=PARTIAL_RETRAIN_EPOCHS,
            learning_rate=self.policy.config.learning_rate * PARTIAL_RETRAIN_LR_FACTOR,
        )

    def _correct_intent(self, act: str) -> None:
        """Replace the last user message: rewind the log to the last listen,
        then record the corrected dialogue act and a fresh proposal."""
        last_listen = None
        for i, event in enumerate(self.tracker.events):
            if isinstance(event, ActionExecuted) and event.action_name == ACTION_LISTEN:
                last_listen = i
        if last_listen is None or self.tracker.latest_message is None:
            raise ProtocolError("no user message to correct")
        replaced = self.tracker.latest_message.intent
        self.tracker.rewind_to(last_listen + 1)
        if self.collected_steps and isinstance(self.collected_steps[-1], UserStep):
            self.collected_steps.pop()
        if not act.startswith("/"):
            act = "/" + act
        user_event = interpret_message(act, self.domain, None)
        self._record_user_event(user_event)
        self.audit.append(
            {
                "kind": "intent_corrected",
                "was": replaced,
                "now": user_event.intent,
                "timestamp": time.time(),
            }
        )
        self._propose()

    def export_stories(self) -> str:
        """The taught conversation as story markdown, named after the session."""
        if not self.collected_steps:
            raise ValidationError("nothing to export: no steps recorded yet")
        story = Story(name=self.session_id, steps=tuple(self.collected_steps))
        return serialize_stories([story])

    # -- introspection used by tests and the efficacy check ----------------

    @property
    def dataset_size(self) -> int:
        return len(self._dataset)

    @property
    def new_points(self) -> int:
        return self._new_points


def start_session(
    domain: Domain,
    policy: PolicyModel,
    nlu: Pipeline | None = None,
    seed: int = 0,
    base_stories: list[Story] | None = None,
    session_id: str | None = None,
    registry: ActionRegistry | None = None,
) -> TeachingSession:
    """Open a teaching session: fresh tracker with the opening listen
    applied, awaiting the first user message."""
    return TeachingSession(
        domain=domain,
        policy=policy,
        nlu=nlu,
        seed=seed,
        base_stories=base_stories,
        session_id=session_id,
        registry=registry,
    )
