"""``vidbus`` command line.

Exit codes:
    0  success
    1  unexpected error
    2  invalid flags, bad configuration, missing master key, validation failure
    3  listener port already in use
    4  authentication or authorization failure
    5  daemon unreachable
"""

from __future__ import annotations

import argparse
import errno
import json
import logging
import signal
import sys
import threading
from pathlib import Path
from typing import Optional, Sequence

from vidbus import config as config_mod
from vidbus.auth import Authenticator, check_password_policy
from vidbus.client import ClientError, HttpClient, TransportError
from vidbus.errors import InvalidConfig, InvalidSpec, IoError, KeyUnavailable, VidbusError
from vidbus.registry import SystemType, generate_key_hex
from vidbus.sim import PolicyKind, compare, run, standard_scenario, write_report
from vidbus.store import RecordFile

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_PORT, EXIT_AUTH, EXIT_TRANSPORT = 0, 1, 2, 3, 4, 5


class CliExit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code
        self.message = message


def _policies(value: str) -> list[PolicyKind]:
    names = ["rr", "wrr", "pq", "hybrid"] if value == "all" else value.split(",")
    try:
        return [PolicyKind.parse(n.strip()) for n in names]
    except InvalidSpec as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def _unit_interval(value: str) -> float:
    x = float(value)
    if not 0.0 < x:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vidbus", description="Video service bus with differentiated-services scheduling")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("serve", help="run the daemon")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--host", help="override both listener hosts")
    s.add_argument("--http-port", type=int)
    s.add_argument("--tcp-port", type=int)
    s.add_argument("--drain-timeout", type=float, default=30.0)

    s = sub.add_parser("simulate", help="run seeded scheduling simulations")
    s.add_argument("--policy", type=_policies, default=[PolicyKind.HYBRID],
                   help="rr, wrr, pq, hybrid, a comma-separated list, or 'all'")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--txns", type=_positive_int, default=10_000)
    s.add_argument("--queues", type=int, default=3, help="queues per bank")
    s.add_argument("--util", type=_unit_interval, default=0.9, help="offered load / capacity")
    s.add_argument("--pq-share", type=float, default=0.2, help="fraction of PQ-class traffic")
    s.add_argument("--report", type=Path, default=Path("sim-report"), help="output directory")
    s.add_argument("--json", action="store_true")

    s = sub.add_parser("bootstrap-admin", help="create a user directly in the store (daemon stopped)")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--username", required=True)
    s.add_argument("--password", required=True)
    s.add_argument("--usertype", default="admin")

    sub.add_parser("keygen", help="print a fresh master key (hex)")

    a = sub.add_parser("admin", help="administer a running daemon over HTTP")
    a.add_argument("--url", default="http://127.0.0.1:8080")
    a.add_argument("--token")
    a.add_argument("--username")
    a.add_argument("--password")
    a.add_argument("--json", action="store_true")
    asub = a.add_subparsers(dest="action", required=True)
    u = asub.add_parser("add-user")
    u.add_argument("new_username")
    u.add_argument("--new-password", required=True)
    u.add_argument("--usertype", required=True, choices=["admin", "commander", "operator", "viewer"])
    src = asub.add_parser("add-source")
    src.add_argument("--id")
    src.add_argument("--name", required=True)
    src.add_argument("--type", required=True, choices=[t.value for t in SystemType])
    src.add_argument("--region", required=True)
    src.add_argument("--poll-url")
    src.add_argument("--params", required=True, help="access parameters as a JSON object")
    asub.add_parser("list-sources")
    asub.add_parser("show-metrics")
    return p


def cmd_keygen(args) -> int:
    print(generate_key_hex())
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        spec, cfg = standard_scenario(
            seed=args.seed,
            txn_count=args.txns,
            utilization=args.util,
            pq_share=args.pq_share,
            queues_per_bank=args.queues,
        )
        if len(args.policy) >= 2:
            reports = compare(spec, args.policy, cfg, args.report)
        else:
            args.report.mkdir(parents=True, exist_ok=True)
            reports = [run(spec, args.policy[0], cfg)]
            write_report(reports[0], args.report / f"report_{reports[0].policy}.json")
    except (InvalidSpec, InvalidConfig) as exc:
        raise CliExit(EXIT_USAGE, exc.message)
    except (IoError, OSError) as exc:
        raise CliExit(EXIT_ERROR, str(exc))
    if args.json:
        print(json.dumps([{k: v for k, v in r.to_dict().items() if k != "classes"} for r in reports], indent=2))
    else:
        for r in reports:
            pq, wrr = r.pq_class, r.wrr_class
            print(
                f"{r.policy:<7} trace_hash={r.trace_hash} "
                f"pq_mean={_fmt(pq.mean)} pq_p95={_fmt(pq.p95)} "
                f"wrr_mean={_fmt(wrr.mean)} wrr_p95={_fmt(wrr.p95)}"
            )
    return EXIT_OK


def _fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.6f}"


def _load_config(path: Path) -> config_mod.Config:
    try:
        return config_mod.load(path)
    except InvalidConfig as exc:
        raise CliExit(EXIT_USAGE, f"bad config: {exc.message}")


def cmd_bootstrap_admin(args) -> int:
    cfg = _load_config(args.config)
    users = RecordFile(cfg.path(cfg.registry.users_path))
    auth = Authenticator(users, cfg.auth.priorities, iterations=cfg.auth.password_iterations)
    try:
        auth.add_user(args.username, args.password, args.usertype)
    except VidbusError as exc:
        raise CliExit(EXIT_USAGE, exc.message)
    finally:
        users.close()
    print(f"created {args.usertype} {args.username}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from vidbus.daemon import Daemon

    cfg = _load_config(args.config)
    if args.host:
        cfg.http.host = cfg.tcp.host = args.host
    if args.http_port is not None:
        cfg.http.port = args.http_port
    if args.tcp_port is not None:
        cfg.tcp.port = args.tcp_port
    try:
        daemon = Daemon(cfg)
    except KeyUnavailable as exc:
        raise CliExit(EXIT_USAGE, exc.message)
    except VidbusError as exc:
        raise CliExit(EXIT_USAGE, exc.message)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise CliExit(EXIT_PORT, f"port in use: {exc}")
        raise CliExit(EXIT_ERROR, str(exc))

    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    daemon.start()
    print(json.dumps({"event": "ready", "http": daemon.http.authority, "tcp": daemon.tcp.authority}), flush=True)
    while not stop.wait(0.5):
        pass
    snapshot = daemon.stop(args.drain_timeout)
    print(json.dumps({"event": "shutdown", "metrics": snapshot.to_dict()}, sort_keys=True), flush=True)
    return EXIT_OK


def _client(args) -> HttpClient:
    client = HttpClient(args.url, args.token)
    if not client.token:
        if not (args.username and args.password):
            raise CliExit(EXIT_AUTH, "need --token or --username/--password")
        client.login(args.username, args.password)
    return client


def _table(rows: list[dict], columns: Sequence[str]) -> str:
    widths = {c: max([len(c)] + [len(str(r.get(c, ""))) for r in rows]) for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).ljust(widths[c]) for c in columns))
    return "\n".join(lines)


def cmd_admin(args) -> int:
    if args.action == "add-user":
        try:
            check_password_policy(args.new_password)
        except VidbusError as exc:
            raise CliExit(EXIT_USAGE, exc.message)
    if args.action == "add-source":
        try:
            params = json.loads(args.params)
        except ValueError as exc:
            raise CliExit(EXIT_USAGE, f"--params is not JSON: {exc}")
        if not isinstance(params, dict):
            raise CliExit(EXIT_USAGE, "--params must be a JSON object")

    try:
        client = _client(args)
        if args.action == "add-user":
            reply = client.request(
                "POST", "/admin/users",
                {"username": args.new_username, "password": args.new_password, "usertype": args.usertype},
            )
            rows, cols = [reply], ["username", "usertype"]
        elif args.action == "add-source":
            source = {"name": args.name, "system_type": args.type, "region": args.region}
            if args.id:
                source["id"] = args.id
            if args.poll_url:
                source["poll_url"] = args.poll_url
            reply = client.request("POST", "/admin/sources", {"source": source, "params": params})
            rows, cols = [reply], ["id"]
        elif args.action == "list-sources":
            reply = client.request("GET", "/admin/sources")
            rows = reply["items"]
            cols = ["id", "name", "system_type", "region", "status", "params_version"]
        else:
            reply = client.request("GET", "/metrics")
            rows = [reply["totals"]]
            cols = ["submitted", "completed", "in_flight", "rejected", "queued", "in_service"]
    except ClientError as exc:
        if exc.status in (401, 403):
            raise CliExit(EXIT_AUTH, str(exc))
        raise CliExit(EXIT_USAGE if exc.status == 400 else EXIT_ERROR, str(exc))
    except TransportError as exc:
        raise CliExit(EXIT_TRANSPORT, str(exc))

    if args.json:
        print(json.dumps(reply, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(_table(rows, cols))
    return EXIT_OK


COMMANDS = {
    "serve": cmd_serve,
    "simulate": cmd_simulate,
    "bootstrap-admin": cmd_bootstrap_admin,
    "keygen": cmd_keygen,
    "admin": cmd_admin,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliExit as exc:
        if exc.message:
            print(f"vidbus: {exc.message}", file=sys.stderr)
        return exc.code
