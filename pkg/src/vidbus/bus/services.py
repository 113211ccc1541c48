"""Bus handlers for login, search, parameter access and administration.

Every handler takes an Envelope whose body is a JSON object and returns a
canonical JSON document (sorted keys, compact separators, UTF-8), so the same
request yields the same bytes whichever protocol carried it.
"""

from __future__ import annotations

import json
from typing import Callable

from vidbus.auth import Authenticator, Session, UserType
from vidbus.bus.router import Bus, Envelope
from vidbus.errors import BadRequest, Forbidden
from vidbus.registry import Registry
from vidbus.scheduler import Scheduler


def dumps(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


def loads(body: bytes) -> dict:
    try:
        doc = json.loads(body or b"{}")
    except ValueError as exc:
        raise BadRequest(f"body is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BadRequest("body must be a JSON object")
    return doc


def _field(doc: dict, name: str, kind=str):
    value = doc.get(name)
    if not isinstance(value, kind):
        raise BadRequest(f"missing or invalid field {name!r}")
    return value


def json_handler(fn: Callable[[dict], object]) -> Callable[[Envelope], bytes]:
    def handle(envelope: Envelope) -> bytes:
        return dumps(fn(loads(envelope.body)))

    handle.__name__ = fn.__name__
    return handle


class Services:
    def __init__(self, auth: Authenticator, registry: Registry, scheduler: Scheduler):
        self.auth = auth
        self.registry = registry
        self.scheduler = scheduler

    def _session(self, doc: dict) -> Session:
        return self.auth.validate(doc.get("token"))

    def _admin(self, doc: dict) -> Session:
        session = self._session(doc)
        if session.usertype is not UserType.ADMIN:
            raise Forbidden("admin privileges required")
        return session

    def login(self, doc: dict) -> dict:
        session = self.auth.login(_field(doc, "username"), _field(doc, "password"))
        return {"status": "ok", "usertype": session.usertype.value, "token": session.token}

    def lookup_user(self, doc: dict) -> dict:
        found = self.auth.lookup(_field(doc, "username"))
        if found is None:
            return {"found": False, "username": doc["username"], "usertype": None}
        return {"found": True, **found}

    def search(self, doc: dict) -> dict:
        self._session(doc)
        region = doc.get("region") or ""
        if not isinstance(region, str):
            raise BadRequest("region must be a string")
        try:
            items = self.registry.search(region, doc.get("keyword"), doc.get("system_type"))
        except ValueError as exc:
            raise BadRequest(str(exc)) from exc
        return {"items": items}

    def get_params(self, doc: dict) -> dict:
        session = self._session(doc)
        source_id = _field(doc, "id")
        params = self.registry.get_access_params(source_id, session)
        src = self.registry.get(source_id)
        return {"id": source_id, "params_version": src.params_version, "params": params}

    def list_sources(self, doc: dict) -> dict:
        self._session(doc)
        return {"items": self.registry.search()}

    def add_source(self, doc: dict) -> dict:
        self._admin(doc)
        source = _field(doc, "source", dict)
        params = _field(doc, "params", dict)
        return {"id": self.registry.register_source(source, params)}

    def update_source(self, doc: dict) -> dict:
        self._admin(doc)
        src = self.registry.update_source(_field(doc, "id"), doc.get("source"), doc.get("params"))
        return src.summary()

    def add_user(self, doc: dict) -> dict:
        self._admin(doc)
        rec = self.auth.add_user(_field(doc, "username"), _field(doc, "password"), _field(doc, "usertype"))
        return {"username": rec.username, "usertype": rec.usertype.value}

    def metrics(self, doc: dict) -> dict:
        return self.scheduler.snapshot_metrics().to_dict()

    def health(self, doc: dict) -> dict:
        return {"status": "ok"}

    def install(self, bus: Bus) -> None:
        for name in (
            "login",
            "lookup_user",
            "search",
            "get_params",
            "list_sources",
            "add_source",
            "update_source",
            "add_user",
            "metrics",
            "health",
        ):
            bus.add_handler(name, json_handler(getattr(self, name)))
