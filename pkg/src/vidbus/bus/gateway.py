"""Protocol-neutral entry point shared by the HTTP and TCP listeners."""

from __future__ import annotations

import logging
import uuid
from typing import Optional

from vidbus import errors
from vidbus.auth import Authenticator
from vidbus.bus.router import DEFAULT_PRIORITY, Ack, Bus, Envelope, ExchangePattern
from vidbus.bus.services import dumps

log = logging.getLogger(__name__)

HTTP_STATUS = {
    errors.BadRequest: 400,
    errors.InvalidTransaction: 400,
    errors.WeakPassword: 400,
    errors.InvalidUserType: 400,
    errors.AuthFailed: 401,
    errors.TokenInvalid: 401,
    errors.TokenExpired: 401,
    errors.Forbidden: 403,
    errors.NoSuchEndpoint: 404,
    errors.NoSuchSource: 404,
    errors.DuplicateSource: 409,
    errors.DuplicateUser: 409,
    errors.Overloaded: 503,
    errors.KeyUnavailable: 503,
    errors.StoreUnavailable: 503,
    errors.Timeout: 504,
}


def http_status(exc: BaseException) -> int:
    for cls in type(exc).__mro__:
        if cls in HTTP_STATUS:
            return HTTP_STATUS[cls]
    return 500


def error_document(exc: BaseException) -> bytes:
    if isinstance(exc, errors.VidbusError):
        return dumps({"error": exc.code, "message": exc.message})
    log.exception("unhandled error", exc_info=exc)
    return dumps({"error": "InternalError", "message": "internal error"})


class Gateway:
    """Wraps a request document into an Envelope and dispatches it.

    The envelope priority comes from the caller's session; requests without a
    valid token (login, health) get ``default_priority``.
    """

    def __init__(self, bus: Bus, auth: Authenticator, default_priority: int = DEFAULT_PRIORITY):
        self.bus = bus
        self.auth = auth
        self.default_priority = default_priority

    def priority_of(self, token: Optional[str]) -> int:
        if not token:
            return self.default_priority
        try:
            return self.auth.validate(token).priority
        except errors.VidbusError:
            return self.default_priority

    def call(
        self,
        address: str,
        doc: dict,
        message_id: Optional[str] = None,
        pattern: ExchangePattern = ExchangePattern.REQUEST_RESPONSE,
    ) -> Envelope | Ack:
        envelope = Envelope(
            source_endpoint=address,
            body=dumps(doc),
            exchange_pattern=pattern,
            priority=self.priority_of(doc.get("token")),
            message_id=message_id or uuid.uuid4().hex,
        )
        return self.bus.dispatch(envelope)
