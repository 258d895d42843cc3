"""Command-line entry point: train both models, chat, teach, visualize, serve.

Exit codes: 0 success, 1 validation/usage error, 2 runtime error. Every
error path prints one line of the form ``[E_CODE] message`` to stderr so
scripts can grep for the code. All subcommands honor ``--seed`` (falling
back to the ``CONVOKIT_SEED`` env var, then 42) for reproducible output.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .domain import load_domain
from .engine import ActionRegistry, DialogueEngine, TrackerStore
from .errors import (
    ConvokitError,
    DirectActError,
    FingerprintMismatchError,
    ParseError,
    ProtocolError,
    TrainingError,
    ValidationError,
)
from .graph import stories_to_dot
from .nlu.pipeline import Pipeline, default_config, load_pipeline_config, train_pipeline
from .policy import PolicyConfig, PolicyModel, train_policy_from_stories
from .teaching import TeachingSession
from .training_data import parse_nlu_json, parse_nlu_markdown, parse_stories

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = EXIT_VALIDATION):
        self.code = code
        self.exit_code = exit_code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"[E_USAGE] {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _default_seed() -> int:
    return int(os.environ.get("CONVOKIT_SEED", "42"))


def _load_nlu_data(path: str):
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        examples = parse_nlu_json(text)
    else:
        examples = parse_nlu_markdown(text)
    if not examples:
        raise _CliError("E_DATA", f"no training examples in {path}")
    return examples


def _load_stories(path: str):
    stories = parse_stories(Path(path).read_text(encoding="utf-8"))
    if not stories:
        raise _CliError("E_DATA", f"no stories in {path}")
    return stories


# -- subcommands -------------------------------------------------------------


def cmd_train_nlu(args) -> int:
    examples = _load_nlu_data(args.data)
    if args.config:
        config = load_pipeline_config(args.config)
    else:
        config = default_config(args.vectors)
    pipeline, traces = train_pipeline(config, examples, vectors_path=args.vectors)
    for component, losses in traces.items():
        for epoch, loss in enumerate(losses):
            print(f"{component} epoch {epoch:4d} loss {loss:.6f}")
    pipeline.save(args.out)
    print(f"wrote NLU pipeline to {args.out} ({len(examples)} examples)")
    return EXIT_OK


def cmd_train_core(args) -> int:
    if args.max_history < 1:
        raise _CliError("E_USAGE", "--max-history must be >= 1")
    domain = load_domain(args.domain)
    stories = _load_stories(args.stories)
    config = PolicyConfig(max_history=args.max_history, seed=args.seed)
    model, losses, n_points = train_policy_from_stories(stories, domain, config)
    for epoch, loss in enumerate(losses):
        print(f"policy epoch {epoch:4d} loss {loss:.6f}")
    model.save(args.out)
    print(f"wrote policy to {args.out} ({n_points} labeled points, H={args.max_history})")
    return EXIT_OK


def _build_engine(args, persist_dir=None) -> DialogueEngine:
    domain = load_domain(args.domain)
    policy = PolicyModel.load(args.policy)
    nlu = Pipeline.load(args.nlu) if getattr(args, "nlu", None) else None
    return DialogueEngine(
        domain=domain,
        policy=policy,
        interpreter=nlu,
        registry=ActionRegistry(default_noop=True),
        store=TrackerStore(domain, persist_dir),
        seed=args.seed,
    )


def cmd_shell(args) -> int:
    engine = _build_engine(args)
    print("convokit shell — type a message, /intent{...} acts work too; ctrl-d quits")
    while True:
        try:
            text = input(">> ").strip()
        except EOFError:
            print()
            return EXIT_OK
        if not text:
            continue
        try:
            result = engine.handle_message("shell", text)
        except (DirectActError, ValidationError) as exc:
            print(f"[E_INPUT] {exc}", file=sys.stderr)
            continue
        for response in result.responses:
            print(response)
        if result.capped:
            print("[E_LOOP_CAP] turn aborted after too many actions", file=sys.stderr)


def _render_teaching_view(view: dict) -> None:
    print("------")
    print("Chat history:\n")
    history = view["history"]
    if not history:
        print("    bot did:\t[]\n")
    for item in history:
        if item["kind"] == "action":
            print(f"    bot did:\t{item['name']}\n")
        elif item["kind"] == "user":
            print(f"    user said:\t{item['text']}\n")
            print(f"        whose intent is:\t{item['intent']}\n")
        else:
            print(f"    bot said:\t{item['text']}\n")
    slots = ", ".join(f"{name}: {value}" for name, value in view["slots"].items())
    print(f"we currently have slots:  {slots}\n")
    print("------")


def cmd_teach(args) -> int:
    domain = load_domain(args.domain)
    policy = PolicyModel.load(args.policy)
    nlu = Pipeline.load(args.nlu) if args.nlu else None
    stories = _load_stories(args.stories) if args.stories else []
    session = TeachingSession(
        domain=domain, policy=policy, nlu=nlu, seed=args.seed, base_stories=stories
    )
    action_list = list(domain.actions)
    while True:
        view = session.view()
        if view["proposal"] is None:
            try:
                text = input("Your input ->  ").strip()
            except EOFError:
                print()
                return EXIT_OK
            if not text:
                continue
            try:
                view = session.feed_message(text)
            except (DirectActError, ValidationError) as exc:
                print(f"[E_INPUT] {exc}", file=sys.stderr)
                continue
        _render_teaching_view(view)
        predicted = view["proposal"]["predicted_action"]
        print(f"The bot wants to [{predicted}] due to the intent. Is this correct?\n")
        print("\t1.\tYes")
        print("\t2.\tNo, intent is right but the action is wrong")
        print("\t3.\tThe intent is wrong")
        print("\t0.\tExport current conversations as stories and quit")
        try:
            choice = input(">> ").strip()
        except EOFError:
            print()
            return EXIT_OK
        if choice == "1":
            session.decide("confirm")
        elif choice == "2":
            probabilities = dict(view["proposal"]["ranking"])
            print("------")
            print("what is the next action for the bot?\n")
            for index, name in enumerate(action_list):
                print(f"{index:10d}{name:>40s}    {probabilities.get(name, 0.0):.2f}")
            picked = input(">> ").strip()
            try:
                index = int(picked)
                chosen = action_list[index]
            except (ValueError, IndexError):
                print(f"[E_INPUT] not an action index: {picked!r}", file=sys.stderr)
                continue
            session.decide("wrong_action", action=chosen)
        elif choice == "3":
            act = input("corrected dialogue act (e.g. /greet{}) >> ").strip()
            try:
                session.decide("wrong_intent", act=act)
            except (DirectActError, ValidationError) as exc:
                print(f"[E_INPUT] {exc}", file=sys.stderr)
        elif choice == "0":
            markdown = session.export_stories()
            out = args.out or "taught_stories.md"
            Path(out).write_text(markdown, encoding="utf-8")
            print(f"exported taught stories to {out}")
            return EXIT_OK
        else:
            print("[E_INPUT] choose 1, 2, 3 or 0", file=sys.stderr)


def cmd_visualize(args) -> int:
    if args.max_history < 1:
        raise _CliError("E_USAGE", "--max-history must be >= 1")
    domain = load_domain(args.domain)
    stories = _load_stories(args.stories)
    dot = stories_to_dot(stories, domain, args.max_history)
    Path(args.out).write_text(dot, encoding="utf-8")
    print(f"wrote story graph to {args.out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import ServiceConfig, run_service

    if args.config:
        config = ServiceConfig.from_file(args.config)
    else:
        config = ServiceConfig().with_env_overrides()
    for attr, value in (
        ("domain_path", args.domain),
        ("nlu_path", args.nlu),
        ("policy_path", args.policy),
        ("stories_path", args.stories),
        ("persist_dir", args.persist_dir),
    ):
        if value:
            setattr(config, attr, value)
    if args.port:
        config.port = args.port
    config.seed = args.seed
    run_service(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convokit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-nlu", help="train the understanding pipeline")
    p.add_argument("--data", required=True, help="NLU markdown (.md) or JSON (.json) corpus")
    p.add_argument("--config", help="pipeline config JSON (default: sensible pipeline)")
    p.add_argument("--vectors", help="word-vector text file (GloVe format)")
    p.add_argument("--out", required=True, help="output artifact path")
    p.set_defaults(func=cmd_train_nlu)

    p = sub.add_parser("train-core", help="train the dialogue policy")
    p.add_argument("--stories", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-history", type=int, default=5)
    p.set_defaults(func=cmd_train_core)

    p = sub.add_parser("shell", help="chat with a trained bot")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--nlu", help="NLU artifact; without it only /intent{...} acts work")
    p.set_defaults(func=cmd_shell)

    p = sub.add_parser("teach", help="interactive machine teaching")
    p.add_argument("--domain", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--nlu")
    p.add_argument("--stories", help="base corpus to retrain against")
    p.add_argument("--out", help="path for exported stories (default taught_stories.md)")
    p.set_defaults(func=cmd_teach)

    p = sub.add_parser("visualize", help="write the story graph as DOT")
    p.add_argument("--stories", required=True)
    p.add_argument("--domain", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-history", type=int, default=1)
    p.set_defaults(func=cmd_visualize)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--domain")
    p.add_argument("--nlu")
    p.add_argument("--policy")
    p.add_argument("--stories")
    p.add_argument("--persist-dir")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=_default_seed())
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"[{exc.code}] {exc}", file=sys.stderr)
        return exc.exit_code
    except ParseError as exc:
        print(f"[E_PARSE] {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, TrainingError, DirectActError, ProtocolError) as exc:
        print(f"[E_VALIDATION] {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FingerprintMismatchError as exc:
        print(f"[E_FINGERPRINT] {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"[E_NOT_FOUND] {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvokitError as exc:
        print(f"[E_RUNTIME] {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
