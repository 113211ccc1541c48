"""Wires registry, auth, scheduler, bus and listeners into one process."""

from __future__ import annotations

import logging
import threading
from typing import Mapping, Optional

from vidbus.auth import Authenticator
from vidbus.bus import Bus, vm_bindings
from vidbus.bus.gateway import Gateway
from vidbus.bus.http import HttpListener
from vidbus.bus.services import Services
from vidbus.bus.tcp import TcpListener
from vidbus.config import Config
from vidbus.registry import Poller, Registry, Sealer, load_master_key
from vidbus.scheduler import MetricsSnapshot, Scheduler
from vidbus.store import RecordFile

log = logging.getLogger(__name__)


class Daemon:
    """Builds every component from ``config``; listeners bind on construction.

    Raises KeyUnavailable without a master key and OSError when a port is taken.
    """

    def __init__(self, config: Config, environ: Optional[Mapping[str, str]] = None):
        self.config = config
        key = load_master_key(config.registry.master_key_env, environ)
        self.users = RecordFile(config.path(config.registry.users_path))
        self.sources = RecordFile(config.path(config.registry.sources_path))
        self.auth = Authenticator(
            self.users,
            config.auth.priorities,
            config.auth.session_lifetime,
            iterations=config.auth.password_iterations,
        )
        self.registry = Registry(self.sources, Sealer(key))
        self.scheduler = Scheduler(config.scheduler)
        self.bus = Bus(self.scheduler, config.bus.workers, config.bus.timeout)
        Services(self.auth, self.registry, self.scheduler).install(self.bus)
        self.gateway = Gateway(self.bus, self.auth, config.bus.default_priority)
        self.http = HttpListener(self.gateway, config.http.host, config.http.port)
        try:
            self.tcp = TcpListener(self.gateway, config.tcp.host, config.tcp.port)
        except OSError:
            self.http.stop()
            raise
        for binding in self.http.bindings() + self.tcp.bindings() + vm_bindings():
            self.bus.register_endpoint(binding)
        self.poller = Poller(self.registry, config.registry.poll_interval)
        self._stop_sampling = threading.Event()
        self._sampler = threading.Thread(target=self._sample_loop, name="vidbus-sampler", daemon=True)

    def _sample_loop(self) -> None:
        period = self.config.scheduler.sample_period
        while not self._stop_sampling.wait(period):
            self.scheduler.sample(self.scheduler.clock())

    def start(self) -> "Daemon":
        self.bus.start()
        self._sampler.start()
        self.poller.start()
        self.http.start()
        self.tcp.start()
        log.info("listening http=%s tcp=%s", self.http.authority, self.tcp.authority)
        return self

    def stop(self, drain_timeout: float = 30.0) -> MetricsSnapshot:
        """Reject new work, finish in-flight transactions, then close everything."""
        drained = self.bus.shutdown(drain_timeout)
        if not drained:
            log.warning("shutdown timed out with %d transactions in flight", self.scheduler.in_flight())
        self.http.stop()
        self.tcp.stop()
        self.poller.stop()
        self._stop_sampling.set()
        self.users.close()
        self.sources.close()
        return self.scheduler.snapshot_metrics()
