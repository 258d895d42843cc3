"""HTTP exposure of parsing, conversation turns, tracker inspection,
teaching sessions, and graph export.

Handlers validate request bodies by hand so error statuses stay exactly
as documented: 400 malformed body, 404 unknown resource, 409 state
conflicts (loop cap, teaching protocol), 413 oversize, 503 model missing.
Same-conversation requests are serialized by the engine; teaching
sessions take one decision at a time under a per-session lock.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import anyio.to_thread
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .domain import Domain, load_domain
from .engine import ActionRegistry, DialogueEngine, TrackerStore
from .errors import DirectActError, ProtocolError, ValidationError
from .graph import stories_to_dot
from .nlu.pipeline import Pipeline
from .policy import PolicyModel
from .teaching import TeachingSession
from .training_data import Story, parse_stories

logger = logging.getLogger(__name__)

CONVERSATION_ID_RE = re.compile(r"[A-Za-z0-9_-]{1,64}\Z")

ENV_PORT = "CONVOKIT_PORT"
ENV_DOMAIN = "CONVOKIT_DOMAIN"
ENV_NLU = "CONVOKIT_NLU_MODEL"
ENV_POLICY = "CONVOKIT_POLICY_MODEL"


@dataclass
class ServiceConfig:
    """Startup settings; a JSON config file plus env overrides."""

    host: str = "127.0.0.1"
    port: int = 5005
    domain_path: str | None = None
    nlu_path: str | None = None
    policy_path: str | None = None
    stories_path: str | None = None
    persist_dir: str | None = None
    max_body_bytes: int = 1_048_576
    workers: int = 1
    cors_origin: str | None = None
    ui_dir: str | None = None
    seed: int = 42

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        config = cls(**data)
        return config.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        if os.environ.get(ENV_PORT):
            self.port = int(os.environ[ENV_PORT])
        for env, attr in ((ENV_DOMAIN, "domain_path"), (ENV_NLU, "nlu_path"), (ENV_POLICY, "policy_path")):
            if os.environ.get(env):
                setattr(self, attr, os.environ[env])
        return self


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "detail": detail})


async def _read_json_body(request: Request, limit: int) -> dict:
    length = request.headers.get("content-length")
    if length is not None and int(length) > limit:
        raise _BodyError(413, "body_too_large", f"request body exceeds {limit} bytes")
    raw = await request.body()
    if len(raw) > limit:
        raise _BodyError(413, "body_too_large", f"request body exceeds {limit} bytes")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _BodyError(400, "malformed_json", exc.msg) from exc
    if not isinstance(data, dict):
        raise _BodyError(400, "malformed_body", "request body must be a JSON object")
    return data


class _BodyError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        self.status, self.code, self.detail = status, code, detail


@dataclass
class ServiceState:
    domain: Domain
    policy: PolicyModel | None
    nlu: Pipeline | None
    stories: list[Story] = field(default_factory=list)
    engine: DialogueEngine | None = None
    sessions: dict[str, TeachingSession] = field(default_factory=dict)
    session_locks: dict[str, threading.Lock] = field(default_factory=dict)
    sessions_guard: threading.Lock = field(default_factory=threading.Lock)
    seed: int = 42
    session_counter: int = 0


def create_app(
    domain: Domain,
    policy: PolicyModel | None = None,
    nlu: Pipeline | None = None,
    stories: list[Story] | None = None,
    config: ServiceConfig | None = None,
    registry: ActionRegistry | None = None,
) -> FastAPI:
    """Build the service around already-loaded models."""
    config = config or ServiceConfig()
    state = ServiceState(
        domain=domain, policy=policy, nlu=nlu, stories=list(stories or []), seed=config.seed
    )
    if policy is not None:
        state.engine = DialogueEngine(
            domain=domain,
            policy=policy,
            interpreter=nlu,
            registry=registry or ActionRegistry(default_noop=True),
            store=TrackerStore(domain, config.persist_dir),
            seed=config.seed,
        )
    app = FastAPI(title="convokit", docs_url=None, redoc_url=None)
    app.state.service = state
    limit = config.max_body_bytes

    if config.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(_BodyError)
    async def body_error_handler(request: Request, exc: _BodyError):
        return _error(exc.status, exc.code, exc.detail)

    # -- parsing ---------------------------------------------------------

    @app.post("/parse")
    async def parse(request: Request):
        body = await _read_json_body(request, limit)
        if "text" not in body or not isinstance(body["text"], str):
            return _error(400, "missing_text", "body must carry a string 'text' field")
        if state.nlu is None or not state.nlu.trained:
            return _error(503, "model_not_loaded", "no trained NLU pipeline is loaded")
        return JSONResponse(state.nlu.process(body["text"]).to_dict())

    # -- conversations -----------------------------------------------------

    @app.post("/conversations/{conversation_id}/messages")
    async def post_message(conversation_id: str, request: Request):
        if not CONVERSATION_ID_RE.match(conversation_id):
            return _error(400, "bad_conversation_id", "id must match [A-Za-z0-9_-]{1,64}")
        body = await _read_json_body(request, limit)
        if "text" not in body or not isinstance(body["text"], str):
            return _error(400, "missing_text", "body must carry a string 'text' field")
        if state.engine is None:
            return _error(503, "model_not_loaded", "no policy model is loaded")
        try:
            # run in the threadpool: distinct conversations proceed in
            # parallel while the engine serializes same-id turns
            result = await anyio.to_thread.run_sync(
                partial(state.engine.handle_message, conversation_id, body["text"])
            )
        except DirectActError as exc:
            return _error(400, "bad_dialogue_act", str(exc))
        payload = {
            "responses": [{"text": t} for t in result.responses],
            "actions": list(result.actions_taken),
        }
        if result.capped:
            payload["capped"] = True
            return JSONResponse(status_code=409, content=payload)
        return JSONResponse(payload)

    @app.get("/conversations/{conversation_id}/tracker")
    async def get_tracker(conversation_id: str):
        if not CONVERSATION_ID_RE.match(conversation_id):
            return _error(400, "bad_conversation_id", "id must match [A-Za-z0-9_-]{1,64}")
        if state.engine is None:
            return _error(503, "model_not_loaded", "no policy model is loaded")
        tracker = state.engine.store.get(conversation_id)
        if tracker is None:
            return _error(404, "unknown_conversation", f"no conversation {conversation_id!r}")

        def snapshot_under_lock():
            # never expose a torn state: snapshot between turns
            with state.engine.conversation_lock(conversation_id):
                return tracker.state_snapshot(), [e.to_dict() for e in tracker.events]

        snapshot, events = await anyio.to_thread.run_sync(snapshot_under_lock)
        return JSONResponse(
            {
                "slots": snapshot["slots"],
                "latest_message": snapshot["latest_message"],
                "latest_action": snapshot["latest_action"],
                "events": events,
            }
        )

    # -- teaching ----------------------------------------------------------

    def _session(session_id: str) -> tuple[TeachingSession, threading.Lock] | None:
        with state.sessions_guard:
            session = state.sessions.get(session_id)
            if session is None:
                return None
            return session, state.session_locks[session_id]

    @app.post("/teach/sessions")
    async def create_session():
        if state.policy is None:
            return _error(503, "model_not_loaded", "no policy model is loaded")
        with state.sessions_guard:
            state.session_counter += 1
            session_id = f"teach_{state.session_counter:04d}"
            session = TeachingSession(
                domain=state.domain,
                policy=state.policy,
                nlu=state.nlu,
                seed=state.seed,
                base_stories=state.stories,
                session_id=session_id,
            )
            state.sessions[session_id] = session
            state.session_locks[session_id] = threading.Lock()
        return JSONResponse({"session_id": session_id})

    @app.get("/teach/sessions/{session_id}")
    async def get_session(session_id: str):
        found = _session(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no teaching session {session_id!r}")
        session, lock = found
        with lock:
            return JSONResponse(session.view())

    @app.post("/teach/sessions/{session_id}/message")
    async def session_message(session_id: str, request: Request):
        found = _session(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no teaching session {session_id!r}")
        body = await _read_json_body(request, limit)
        if "text" not in body or not isinstance(body["text"], str):
            return _error(400, "missing_text", "body must carry a string 'text' field")
        session, lock = found

        def feed():
            with lock:
                return session.feed_message(body["text"])

        try:
            return JSONResponse(await anyio.to_thread.run_sync(feed))
        except ProtocolError as exc:
            return _error(409, "protocol_violation", str(exc))
        except (DirectActError, ValidationError) as exc:
            return _error(400, "bad_message", str(exc))

    @app.post("/teach/sessions/{session_id}/decision")
    async def session_decision(session_id: str, request: Request):
        found = _session(session_id)
        if found is None:
            return _error(404, "unknown_session", f"no teaching session {session_id!r}")
        body = await _read_json_body(request, limit)
        choice = body.get("choice")
        if choice not in ("confirm", "wrong_action", "wrong_intent", "export"):
            return _error(400, "bad_choice", "choice must be confirm|wrong_action|wrong_intent|export")
        session, lock = found

        def decide():
            with lock:
                if choice == "export":
                    return session.export_stories()
                return session.decide(choice, action=body.get("action"), act=body.get("act"))

        try:
            outcome = await anyio.to_thread.run_sync(decide)
        except ProtocolError as exc:
            return _error(409, "protocol_violation", str(exc))
        except (DirectActError, ValidationError) as exc:
            return _error(400, "bad_decision", str(exc))
        if choice == "export":
            return PlainTextResponse(outcome, media_type="text/markdown")
        return JSONResponse(outcome)

    # -- graph -------------------------------------------------------------

    @app.get("/graph")
    async def graph(request: Request):
        raw = request.query_params.get("max_history", "1")
        try:
            max_history = int(raw)
        except ValueError:
            return _error(400, "bad_max_history", f"max_history must be an integer, got {raw!r}")
        if max_history < 1:
            return _error(400, "bad_max_history", "max_history must be >= 1")
        dot = stories_to_dot(state.stories, state.domain, max_history)
        return Response(content=dot, media_type="text/vnd.graphviz")

    # -- static teaching UI -------------------------------------------------

    ui_dir = config.ui_dir or str(Path(__file__).resolve().parents[2] / "frontend" / "dist")
    if Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def create_app_from_config(config: ServiceConfig) -> FastAPI:
    """Load artifacts named in the config and build the app."""
    if not config.domain_path:
        raise ValidationError("service config needs a domain path")
    domain = load_domain(config.domain_path)
    policy = PolicyModel.load(config.policy_path) if config.policy_path else None
    nlu = Pipeline.load(config.nlu_path) if config.nlu_path else None
    stories: list[Story] = []
    if config.stories_path:
        stories = parse_stories(Path(config.stories_path).read_text(encoding="utf-8"))
    return create_app(domain, policy=policy, nlu=nlu, stories=stories, config=config)


def run_service(config: ServiceConfig) -> None:
    """Blocking entry point used by the CLI's serve subcommand."""
    import uvicorn

    app = create_app_from_config(config)
    uvicorn.run(app, host=config.host, port=config.port, workers=1, log_level="info")
