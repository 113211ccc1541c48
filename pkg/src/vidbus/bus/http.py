"""HTTP listener.

Routes (JSON bodies, JSON replies)::

    POST /user_login              {"username", "password"}
    POST /resources/search        {"token", "region", "keyword"?, "system_type"?}
    GET  /resources/{id}/params   token via "Authorization: Bearer" or ?token=
    GET  /admin/sources           list every source (any valid token)
    POST /admin/sources           {"token", "source": {...}, "params": {...}}
    PUT  /admin/sources/{id}      {"token", "source"?, "params"?}
    POST /admin/users             {"token", "username", "password", "usertype"}
    GET  /metrics                 scheduler metrics snapshot
    GET  /healthz                 {"status": "ok"}

Errors come back as {"error": <code>, "message": ...} with a matching status;
scheduler backpressure is 503 with ``Retry-After``.
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from vidbus import errors
from vidbus.bus.gateway import Gateway, error_document, http_status
from vidbus.bus.router import EndpointBinding

# (method, path pattern, binding path, handler, scheduled)
ROUTES = [
    ("POST", r"/user_login", "/user_login", "login", True),
    ("POST", r"/resources/search", "/resources/search", "search", True),
    ("GET", r"/resources/(?P<id>[^/]+)/params", "/resources/params", "get_params", True),
    ("GET", r"/admin/sources", "/admin/sources/list", "list_sources", True),
    ("POST", r"/admin/sources", "/admin/sources", "add_source", True),
    ("PUT", r"/admin/sources/(?P<id>[^/]+)", "/admin/sources/update", "update_source", True),
    ("POST", r"/admin/users", "/admin/users", "add_user", True),
    ("GET", r"/metrics", "/metrics", "metrics", False),
    ("GET", r"/healthz", "/healthz", "health", False),
]
_COMPILED = [(m, re.compile(p + r"/?"), b) for m, p, b, _, _ in ROUTES]
MAX_BODY = 1 << 20


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    # The stdlib default of 5 resets bursts of clients before they reach us.
    request_queue_size = 128


def http_bindings(authority: str) -> list[EndpointBinding]:
    return [
        EndpointBinding(f"http://{authority}{path}", handler, scheduled=scheduled)
        for _, _, path, handler, scheduled in ROUTES
    ]


class HttpListener:
    def __init__(self, gateway: Gateway, host: str = "127.0.0.1", port: int = 8080, authority: Optional[str] = None):
        self.gateway = gateway
        self._server = _Server((host, port), self._handler_class())
        bound_host, bound_port = self._server.server_address[:2]
        self.authority = authority or f"{bound_host}:{bound_port}"
        self.port = bound_port
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, name="vidbus-http", daemon=True
        )

    def bindings(self) -> list[EndpointBinding]:
        return http_bindings(self.authority)

    def start(self) -> "HttpListener":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def _handler_class(self):
        listener = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, *args):
                pass

            def do_GET(self):
                self._handle("GET")

            def do_POST(self):
                self._handle("POST")

            def do_PUT(self):
                self._handle("PUT")

            def _handle(self, method: str):
                try:
                    address, doc = self._parse(method)
                    reply = listener.gateway.call(address, doc)
                    self._send(200, reply.body)
                except Exception as exc:
                    self._send(http_status(exc), error_document(exc), overloaded=isinstance(exc, errors.Overloaded))

            def _parse(self, method: str) -> tuple[str, dict]:
                # Drain the body first so keep-alive connections stay in sync.
                doc = self._body() if method in ("POST", "PUT") else {}
                url = urlsplit(self.path)
                for m, pattern, binding_path in _COMPILED:
                    match = pattern.fullmatch(url.path)
                    if m == method and match:
                        break
                else:
                    raise errors.NoSuchEndpoint(f"no route for {method} {url.path}")
                doc.update(match.groupdict())
                if "token" not in doc:
                    token = self._token(url.query)
                    if token:
                        doc["token"] = token
                return f"http://{listener.authority}{binding_path}", doc

            def _body(self) -> dict:
                length = int(self.headers.get("Content-Length") or 0)
                if length > MAX_BODY:
                    raise errors.BadRequest("request body too large")
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    doc = json.loads(raw)
                except ValueError as exc:
                    raise errors.BadRequest(f"body is not JSON: {exc}") from exc
                if not isinstance(doc, dict):
                    raise errors.BadRequest("body must be a JSON object")
                return doc

            def _token(self, query: str) -> Optional[str]:
                auth = self.headers.get("Authorization", "")
                if auth.startswith("Bearer "):
                    return auth[7:].strip()
                values = parse_qs(query).get("token")
                return values[0] if values else None

            def _send(self, status: int, body: bytes, overloaded: bool = False):
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                if overloaded:
                    self.send_header("Retry-After", "1")
                self.end_headers()
                self.wfile.write(body)

        return Handler
