"""A stand-in video system that serves its status/params document over HTTP GET."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class MockSource:
    def __init__(self, params: dict, status: str = "Online", host: str = "127.0.0.1", port: int = 0):
        self.params = dict(params)
        self.status = status
        self._lock = threading.Lock()
        source = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                with source._lock:
                    body = json.dumps({"status": source.status, "params": source.params}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/status"

    def set_params(self, **changes) -> None:
        with self._lock:
            self.params = {**self.params, **changes}

    def start(self) -> "MockSource":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
