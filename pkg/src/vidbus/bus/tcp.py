"""Newline-delimited JSON listener.

Request, one UTF-8 JSON object per line::

    {"op": "login" | "search" | "get_params" | "list_sources" | "add_source"
           | "update_source" | "add_user" | "metrics" | "health",
     "token": "...", "body": {...}, "message_id": "..."?}

Reply, one line per request and in request order::

    {"body": {...}, "correlation_id": "<message_id>", "status": "ok" | "error"}

``body`` holds the handler's document verbatim (the same bytes the HTTP
listener would return), or an error document when status is "error".
"""

from __future__ import annotations

import json
import socketserver
import threading
import uuid
from typing import Optional

from vidbus import errors
from vidbus.bus.gateway import Gateway, error_document
from vidbus.bus.router import EndpointBinding
from vidbus.bus.services import dumps

# op -> (handler, scheduled)
OPS = {
    "login": ("login", True),
    "search": ("search", True),
    "get_params": ("get_params", True),
    "list_sources": ("list_sources", True),
    "add_source": ("add_source", True),
    "update_source": ("update_source", True),
    "add_user": ("add_user", True),
    "metrics": ("metrics", False),
    "health": ("health", False),
}
MAX_LINE = 1 << 20


def tcp_bindings(authority: str) -> list[EndpointBinding]:
    return [
        EndpointBinding(f"tcp://{authority}/{op}", handler, scheduled=scheduled)
        for op, (handler, scheduled) in OPS.items()
    ]


def frame_reply(correlation_id: str, ok: bool, body: bytes) -> bytes:
    return (
        b'{"body":' + body
        + b',"correlation_id":' + dumps(correlation_id)
        + b',"status":' + (b'"ok"' if ok else b'"error"')
        + b"}\n"
    )


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    request_queue_size = 128


class TcpListener:
    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int = 7070, authority: Optional[str] = None):
        self.gateway = gateway
        self._server = _Server((host, port), self._handler_class())
        bound_host, bound_port = self._server.server_address[:2]
        self.authority = authority or f"{bound_host}:{bound_port}"
        self.port = bound_port
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, name="vidbus-tcp", daemon=True
        )

    def bindings(self) -> list[EndpointBinding]:
        return tcp_bindings(self.authority)

    def start(self) -> "TcpListener":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def handle_line(self, line: bytes) -> bytes:
        message_id = uuid.uuid4().hex
        try:
            try:
                req = json.loads(line)
            except ValueError as exc:
                raise errors.BadRequest(f"line is not JSON: {exc}") from exc
            if not isinstance(req, dict):
                raise errors.BadRequest("request must be a JSON object")
            if isinstance(req.get("message_id"), str) and req["message_id"]:
                message_id = req["message_id"]
            op = req.get("op")
            if op not in OPS:
                raise errors.NoSuchEndpoint(f"unknown op {op!r}")
            doc = req.get("body") or {}
            if not isinstance(doc, dict):
                raise errors.BadRequest("body must be a JSON object")
            if req.get("token") is not None:
                doc["token"] = req["token"]
            reply = self.gateway.call(f"tcp://{self.authority}/{op}", doc, message_id)
            return frame_reply(reply.correlation_id, True, reply.body)
        except Exception as exc:
            return frame_reply(message_id, False, error_document(exc))

    def _handler_class(self):
        listener = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                while True:
                    line = self.rfile.readline(MAX_LINE)
                    if not line:
                        return
                    if not line.strip():
                        continue
                    self.wfile.write(listener.handle_line(line))
                    self.wfile.flush()

        return Handler
