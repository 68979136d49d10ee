"""Command-line entry points.

``run`` executes a pipeline locally and writes the manifest and transcript;
with ``--interactive`` it also embeds the HTTP service so the review console
can steer the run. ``serve`` hosts the service standalone, and ``submit``
is a thin client that posts a story to a running service.

Exit codes: 0 success, 1 usage error, 2 run failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .director import Director, RunFailure, StartupError
from .planning import PlanningError

DEFAULT_LISTEN = "127.0.0.1:8420"
LISTEN_ENV_VAR = "SHOWRUNNER_LISTEN"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="showrunner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a pipeline locally")
    run.add_argument("story", help="path to the story script (plain text)")
    run.add_argument("config", help="path to the run configuration (JSON)")
    run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    run.add_argument("--out", default=None, help="output directory (default: runs/<run_id>)")
    run.add_argument("--interactive", action="store_true", help="pause on review checkpoints")
    run.add_argument(
        "--listen",
        default=None,
        help=f"host:port for the embedded service in interactive mode "
        f"(default ${LISTEN_ENV_VAR} or {DEFAULT_LISTEN})",
    )

    serve = sub.add_parser("serve", help="host the HTTP service")
    serve.add_argument(
        "--listen",
        default=None,
        help=f"host:port to bind (default ${LISTEN_ENV_VAR} or {DEFAULT_LISTEN})",
    )

    submit = sub.add_parser("submit", help="post a story to a running service")
    submit.add_argument("story", help="path to the story script")
    submit.add_argument("config", help="path to the run configuration (JSON)")
    submit.add_argument("--server", required=True, help="base URL of the service")
    submit.add_argument("--seed", type=int, default=None)
    submit.add_argument("--interactive", action="store_true")
    return parser


def _resolve_listen(value: str | None) -> tuple[str, int]:
    listen = value or os.environ.get(LISTEN_ENV_VAR) or DEFAULT_LISTEN
    host, _, port = listen.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"listen address '{listen}' is not host:port")
    return host, int(port)


def _load_inputs(story_path: str, config_path: str) -> tuple[str, RunConfig]:
    story_file = Path(story_path)
    if not story_file.is_file():
        raise ConfigError(f"story file not found: {story_path}")
    story_text = story_file.read_text(encoding="utf-8")
    config = load_config(config_path)
    return story_text, config


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        story_text, config = _load_inputs(args.story, args.config)
        if args.seed is not None:
            config = config.with_overrides(seed=args.seed)
        if args.interactive:
            config = config.with_overrides(interactive=True)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    director = Director(config)
    try:
        director.prepare(story_text=story_text)
    except (StartupError, PlanningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    server = None
    if args.interactive:
        try:
            host, port = _resolve_listen(args.listen)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        server = _start_embedded_service(director, host, port)
        print(f"review console endpoint: http://{host}:{port}/runs/{director.run_id}")

    exit_code = 0
    try:
        director.execute()
    except RunFailure as failure:
        print(f"run failed: {json.dumps(failure.report, sort_keys=True)}", file=sys.stderr)
        exit_code = 2
    finally:
        if server is not None:
            server.should_exit = True

    out_dir = Path(args.out) if args.out else Path("runs") / director.run_id
    paths = director.write_outputs(out_dir)
    if exit_code == 0:
        print(f"run {director.run_id} completed")
        print(f"manifest: {paths['manifest']}")
    print(f"transcript: {paths['transcript']}")
    return exit_code


def _start_embedded_service(director: Director, host: str, port: int):
    import uvicorn

    from .service.app import create_app
    from .service.manager import RunManager

    manager = RunManager()
    manager.register(director)
    app = create_app(manager)
    server = uvicorn.Server(
        uvicorn.Config(app, host=host, port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True, name="embedded-service")
    thread.start()
    return server


def _cmd_serve(args: argparse.Namespace) -> int:
    try:
        host, port = _resolve_listen(args.listen)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")
    return 0


def _cmd_submit(args: argparse.Namespace) -> int:
    try:
        story_text, config = _load_inputs(args.story, args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    import httpx

    body = {
        "story_text": story_text,
        "config": config.to_dict(),
        "interactive": args.interactive,
    }
    if args.seed is not None:
        body["seed"] = args.seed
    try:
        response = httpx.post(f"{args.server.rstrip('/')}/runs", json=body, timeout=30.0)
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if response.status_code != 200:
        print(f"error: service returned {response.status_code}: {response.text}", file=sys.stderr)
        return 2
    print(json.dumps(response.json(), sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1

    if args.command == "run":
        return _cmd_run(args)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "submit":
        return _cmd_submit(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
