"""Minimal HTTP and TCP clients for the daemon's external interfaces."""

from __future__ import annotations

import json
import socket
import urllib.error
import urllib.request
from typing import Optional


class ClientError(Exception):
    """The daemon answered with an error document."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(f"{status} {code}: {message}")
        self.status = status
        self.code = code
        self.message = message


class TransportError(Exception):
    """The daemon could not be reached."""


class HttpClient:
    def __init__(self, base_url: str, token: Optional[str] = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout

    def raw(self, method: str, path: str, doc: Optional[dict] = None) -> tuple[int, bytes]:
        data = None if doc is None else json.dumps(doc).encode()
        req = urllib.request.Request(self.base_url + path, data=data, method=method)
        req.add_header("Content-Type", "application/json")
        if self.token:
            req.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as exc:
            return exc.code, exc.read()
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"cannot reach {self.base_url}: {exc}") from exc

    def request(self, method: str, path: str, doc: Optional[dict] = None) -> dict:
        status, body = self.raw(method, path, doc)
        try:
            reply = json.loads(body) if body else {}
        except ValueError:
            raise ClientError(status, "BadReply", body[:200].decode(errors="replace")) from None
        if status >= 400:
            raise ClientError(status, reply.get("error", "Error"), reply.get("message", ""))
        return reply

    def login(self, username: str, password: str) -> dict:
        reply = self.request("POST", "/user_login", {"username": username, "password": password})
        self.token = reply["token"]
        return reply


class TcpClient:
    """One connection; requests are answered in order, one JSON line each."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot reach {host}:{port}: {exc}") from exc
        self._rfile = self._sock.makefile("rb")

    def send_raw(self, request: dict) -> bytes:
        self._sock.sendall(json.dumps(request).encode() + b"\n")
        line = self._rfile.readline()
        if not line:
            raise TransportError("connection closed")
        return line

    def call(self, op: str, body: Optional[dict] = None, token: Optional[str] = None, **extra) -> dict:
        req = {"op": op, "body": body or {}, **extra}
        if token:
            req["token"] = token
        return json.loads(self.send_raw(req))

    def close(self) -> None:
        self._rfile.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
