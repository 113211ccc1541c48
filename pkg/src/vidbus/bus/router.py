"""Endpoint bindings, envelopes and the scheduler-backed dispatcher."""

from __future__ import annotations

import enum
import logging
import threading
import uuid
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Callable, Optional, Union
from urllib.parse import urlsplit

from vidbus.errors import (
    AddressInUse,
    InvalidAddress,
    InvalidTransaction,
    NoSuchEndpoint,
    Overloaded,
    QueueFull,
    Timeout,
)
from vidbus.scheduler import Scheduler, Transaction

log = logging.getLogger(__name__)

SCHEMES = ("http", "tcp", "vm")
DEFAULT_PRIORITY = 5
DEFAULT_TIMEOUT = 30.0


class ExchangePattern(str, enum.Enum):
    REQUEST_RESPONSE = "request-response"
    ONE_WAY = "one-way"


@dataclass(frozen=True)
class Envelope:
    source_endpoint: str
    body: bytes
    exchange_pattern: ExchangePattern = ExchangePattern.REQUEST_RESPONSE
    priority: int = DEFAULT_PRIORITY
    headers: dict = field(default_factory=dict)
    message_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    correlation_id: Optional[str] = None

    @property
    def reply_route(self) -> Optional[str]:
        if self.exchange_pattern is ExchangePattern.REQUEST_RESPONSE:
            return self.message_id
        return None


@dataclass(frozen=True)
class Ack:
    message_id: str


@dataclass(frozen=True)
class EndpointBinding:
    address: str
    handler: str
    enabled: bool = True
    # Control endpoints (health, metrics) bypass the scheduler so they stay
    # answerable while the queues are saturated.
    scheduled: bool = True


Handler = Callable[[Envelope], bytes]


def check_address(address: str) -> None:
    parts = urlsplit(address)
    if parts.scheme not in SCHEMES or not parts.netloc:
        raise InvalidAddress(f"malformed endpoint address {address!r}")
    if parts.scheme == "vm" and parts.path not in ("", "/"):
        raise InvalidAddress(f"named queue address takes no path: {address!r}")


@dataclass
class _Pending:
    binding: EndpointBinding
    envelope: Envelope
    future: Future


class Bus:
    """Routes envelopes to named handlers through the scheduler.

    Handlers run only on the bus's own worker threads; ``dispatch`` blocks the
    calling (listener) thread until the correlated reply is ready.
    """

    def __init__(
        self,
        scheduler: Scheduler,
        workers: int = 4,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.scheduler = scheduler
        self.timeout = timeout
        self.worker_count = workers
        self._handlers: dict[str, Handler] = {}
        self._bindings: dict[str, EndpointBinding] = {}
        self._pending: dict[str, _Pending] = {}
        self._lock = threading.Lock()
        self._work = threading.Condition()
        self._stop = threading.Event()
        self._accepting = True
        self._threads: list[threading.Thread] = []

    # -- configuration ---------------------------------------------------

    def add_handler(self, name: str, fn: Handler) -> None:
        self._handlers[name] = fn

    def register_endpoint(self, binding: EndpointBinding) -> None:
        check_address(binding.address)
        with self._lock:
            if binding.address in self._bindings:
                raise AddressInUse(f"{binding.address} already bound")
            self._bindings[binding.address] = binding

    def unregister_endpoint(self, address: str) -> None:
        with self._lock:
            self._bindings.pop(address, None)

    def bindings(self) -> list[EndpointBinding]:
        with self._lock:
            return list(self._bindings.values())

    # -- dispatch ----------------------------------------------------------

    def dispatch(self, envelope: Envelope) -> Union[Envelope, Ack]:
        binding = self._bindings.get(envelope.source_endpoint)
        if binding is None or not binding.enabled:
            raise NoSuchEndpoint(f"no endpoint at {envelope.source_endpoint}")
        handler = self._handlers.get(binding.handler)
        if handler is None:
            raise NoSuchEndpoint(f"endpoint {binding.address} has no handler {binding.handler!r}")

        if not binding.scheduled:
            return self._reply(envelope, handler(envelope))

        if not self._accepting:
            raise Overloaded("bus is shutting down")
        pending = _Pending(binding, envelope, Future())
        txn = Transaction(
            id=envelope.message_id,
            priority=envelope.priority,
            payload=envelope.body,
            submitted_at=self.scheduler.clock(),
            reply_route=envelope.reply_route,
        )
        with self._lock:
            if envelope.message_id in self._pending:
                raise InvalidTransaction(f"duplicate message id {envelope.message_id}")
            self._pending[envelope.message_id] = pending
        try:
            self.scheduler.submit(txn)
        except QueueFull as exc:
            with self._lock:
                self._pending.pop(envelope.message_id, None)
            raise Overloaded(f"scheduler queue full, retry later ({exc.message})") from exc
        except Exception:
            with self._lock:
                self._pending.pop(envelope.message_id, None)
            raise
        with self._work:
            self._work.notify()

        if envelope.exchange_pattern is ExchangePattern.ONE_WAY:
            return Ack(envelope.message_id)
        try:
            body = pending.future.result(timeout=self.timeout)
        except FutureTimeout:
            raise Timeout(f"no reply to {envelope.message_id} within {self.timeout}s") from None
        return self._reply(envelope, body)

    @staticmethod
    def _reply(request: Envelope, body: bytes) -> Envelope:
        return Envelope(
            source_endpoint=request.source_endpoint,
            body=body,
            exchange_pattern=request.exchange_pattern,
            priority=request.priority,
            correlation_id=request.message_id,
        )

    def send_named_queue(
        self,
        name: str,
        body: bytes,
        pattern: ExchangePattern = ExchangePattern.REQUEST_RESPONSE,
        priority: int = DEFAULT_PRIORITY,
    ) -> Union[Envelope, Ack]:
        address = name if name.startswith("vm://") else f"vm://{name}"
        return self.dispatch(Envelope(address, body, pattern, priority))

    # -- workers -----------------------------------------------------------

    def start(self) -> "Bus":
        self._stop.clear()
        self._accepting = True
        for wid in range(self.worker_count):
            t = threading.Thread(target=self._work_loop, args=(wid,), name=f"vidbus-worker-{wid}", daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def _work_loop(self, wid: int) -> None:
        while not self._stop.is_set():
            txn = self.scheduler.next_work(wid)
            if txn is None:
                with self._work:
                    self._work.wait(0.05)
                continue
            with self._lock:
                pending = self._pending.pop(txn.id)
            result = error = None
            try:
                result = self._handlers[pending.binding.handler](pending.envelope)
            except BaseException as exc:
                error = exc
            # Complete before replying so a client that saw its reply also sees it counted.
            self.scheduler.complete(txn.id, wid, self.scheduler.clock())
            if error is not None:
                if pending.envelope.exchange_pattern is ExchangePattern.ONE_WAY:
                    log.warning("one-way handler %s failed: %s", pending.binding.handler, error)
                pending.future.set_exception(error)
            else:
                pending.future.set_result(result)

    def shutdown(self, drain_timeout: float = 30.0) -> bool:
        """Reject new work, let in-flight transactions finish, stop workers.

        Returns True when everything drained within ``drain_timeout``.
        """
        self._accepting = False
        drained = self._stop.wait(0) or self._wait_drained(drain_timeout)
        self._stop.set()
        with self._work:
            self._work.notify_all()
        for t in self._threads:
            t.join(timeout=5)
        self._threads.clear()
        return drained

    def _wait_drained(self, timeout: float) -> bool:
        waited = 0.0
        while self.scheduler.in_flight() > 0:
            if waited >= timeout:
                return False
            self._stop.wait(0.01)
            waited += 0.01
        return True
