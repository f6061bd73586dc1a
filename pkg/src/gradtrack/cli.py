"""Thin command-line client for the experiment service.

All computation runs behind the HTTP service API.  By default the client
mounts the service in-process (no socket); pass --server to talk to a
running instance instead.  Subcommands: simulate, track, sweep, diagnose,
selftest, serve.

Exit codes: 0 success, 1 configuration (or connection) error, 2 excessive
trial failures / failed run.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradtrack",
        description="Track time-varying optimizers from noisy gradient measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, needs_config: bool = True) -> None:
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config file")
            p.add_argument("--seed", type=int, default=None, help="override run.seed")
            p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--server", default=None, help="base URL of a running service")

    add_common(sub.add_parser("simulate", help="dump ground-truth trajectory bundles"))
    add_common(sub.add_parser("track", help="single end-to-end run per configured N"))
    sweep = sub.add_parser("sweep", help="seeded Monte Carlo sweep")
    add_common(sweep)
    sweep.add_argument("--trials", type=int, default=None, help="override run.trials")
    add_common(sub.add_parser("diagnose", help="forecast-error bound components"))
    add_common(sub.add_parser("selftest", help="noiseless exact-recovery suite"), needs_config=False)
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


class ServiceClient:
    """POSTs to a remote service or to an in-process app instance."""

    def __init__(self, server: str | None):
        if server is None:
            # the in-process mount is an implementation detail; keep its
            # import-time deprecation chatter off the user's stderr
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())
        else:
            self._client = httpx.Client(base_url=server, timeout=None)

    def post(self, path: str, payload: dict) -> httpx.Response:
        return self._client.post(path, json=payload)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _request(client: ServiceClient, path: str, payload: dict) -> tuple[dict | None, int]:
    try:
        resp = client.post(path, payload)
    except httpx.HTTPError as err:
        return None, _fail(f"cannot reach service: {err}", EXIT_CONFIG)
    if resp.status_code == 200:
        return resp.json(), EXIT_OK
    try:
        detail = resp.json().get("detail", {})
    except ValueError:
        detail = {}
    message = detail.get("message", resp.text) if isinstance(detail, dict) else str(detail)
    code = detail.get("code", "") if isinstance(detail, dict) else ""
    exit_code = EXIT_CONFIG if resp.status_code == 422 else EXIT_RUN
    return None, _fail(f"{code or resp.status_code}: {message}", exit_code)


def _write_files(out_dir: str, files: dict[str, str], quiet: bool) -> None:
    base = Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        path = base / name
        path.write_text(content)
        if not quiet:
            print(f"wrote {path}")


def _artifact_command(args: argparse.Namespace, path: str) -> int:
    try:
        config_text = Path(args.config).read_text()
    except OSError as err:
        return _fail(f"cannot read config file {args.config}: {err}", EXIT_CONFIG)
    payload: dict = {"config_text": config_text}
    if args.seed is not None:
        payload["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        payload["trials"] = args.trials
    body, exit_code = _request(ServiceClient(args.server), path, payload)
    if body is None:
        return exit_code
    out_dir = args.out or body["out_dir"]
    _write_files(out_dir, body["files"], args.quiet)
    if path == "/v1/sweep":
        if not args.quiet:
            for cell in body["summary"]["per_N"]:
                mean = cell["mean_rmse"]
                mean_txt = "n/a" if mean is None else f"{mean:.6g}"
                print(
                    f"N={cell['N']}: mean_rmse={mean_txt} "
                    f"ok={cell['trials_ok']} failed={cell['trials_failed']}"
                )
        if not body["ok"]:
            return _fail(
                f"{body['failed_fraction']:.0%} of trials failed (budget 10%)", EXIT_RUN
            )
    return EXIT_OK


def _selftest_command(args: argparse.Namespace) -> int:
    body, exit_code = _request(ServiceClient(args.server), "/v1/selftest", {})
    if body is None:
        return exit_code
    if not args.quiet or not body["ok"]:
        for line in body["lines"]:
            print(line)
    return EXIT_OK if body["ok"] else EXIT_CONFIG


def _serve_command(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _serve_command(args)
    if args.command == "selftest":
        return _selftest_command(args)
    paths = {
        "simulate": "/v1/simulate",
        "track": "/v1/track",
        "sweep": "/v1/sweep",
        "diagnose": "/v1/diagnose",
    }
    return _artifact_command(args, paths[args.command])


if __name__ == "__main__":
    sys.exit(main())
