import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from vidbus.bus import Ack, Bus, EndpointBinding, Envelope, ExchangePattern, vm_bindings
from vidbus.bus.services import Services
from vidbus.errors import AddressInUse, InvalidAddress, NoSuchEndpoint, Overloaded, Timeout
from vidbus.scheduler import Scheduler, SchedulerConfig


@pytest.fixture
def bus():
    b = Bus(Scheduler(SchedulerConfig(pq_queues=2, wrr_queues=2)), workers=4, timeout=5).start()
    b.add_handler("echo", lambda env: env.body)
    yield b
    b.shutdown(drain_timeout=2)


def test_register_duplicate_address(bus):
    bus.register_endpoint(EndpointBinding("http://host/user_login", "echo"))
    with pytest.raises(AddressInUse):
        bus.register_endpoint(EndpointBinding("http://host/user_login", "other"))


@pytest.mark.parametrize("address", ["ftp://x/y", "user_login", "http:///nohost", "vm://query/extra", ""])
def test_malformed_address(bus, address):
    with pytest.raises(InvalidAddress):
        bus.register_endpoint(EndpointBinding(address, "echo"))


def test_unknown_endpoint(bus):
    with pytest.raises(NoSuchEndpoint):
        bus.dispatch(Envelope("vm://nowhere", b"{}"))
    with pytest.raises(NoSuchEndpoint):
        bus.send_named_queue("nowhere", b"{}")


def test_disabled_endpoint(bus):
    bus.register_endpoint(EndpointBinding("vm://off", "echo", enabled=False))
    with pytest.raises(NoSuchEndpoint):
        bus.send_named_queue("off", b"x")


def test_vm_query_user_lookup(auth, registry):
    sched = Scheduler(SchedulerConfig())
    b = Bus(sched, workers=2).start()
    Services(auth, registry, sched).install(b)
    for binding in vm_bindings():
        b.register_endpoint(binding)
    try:
        reply = b.send_named_queue("query", json.dumps({"username": "cmd1"}).encode())
        assert json.loads(reply.body) == {"found": True, "username": "cmd1", "usertype": "commander"}
        assert reply.correlation_id is not None
        missing = b.send_named_queue("vm://query", b'{"username": "ghost"}')
        assert json.loads(missing.body)["found"] is False
    finally:
        b.shutdown(2)


def test_concurrent_sends_correlate(bus):
    bus.register_endpoint(EndpointBinding("vm://echo", "echo"))

    def send(i):
        env = Envelope("vm://echo", f"msg-{i}".encode(), priority=i % 10)
        return env, bus.dispatch(env)

    with ThreadPoolExecutor(max_workers=20) as pool:
        results = list(pool.map(send, range(100)))
    assert len(results) == 100
    for req, reply in results:
        assert reply.correlation_id == req.message_id
        assert reply.body == req.body
    assert len({r.correlation_id for _, r in results}) == 100


def test_one_way_acks_before_handler_finishes(bus):
    started, release, done = threading.Event(), threading.Event(), threading.Event()

    def slow(env):
        started.set()
        release.wait(5)
        done.set()
        return b""

    bus.add_handler("slow", slow)
    bus.register_endpoint(EndpointBinding("vm://slow", "slow"))
    ack = bus.dispatch(Envelope("vm://slow", b"x", ExchangePattern.ONE_WAY))
    assert isinstance(ack, Ack)
    assert not done.is_set()
    release.set()
    assert done.wait(5)


def test_handler_error_propagates(bus):
    def boom(env):
        raise ValueError("bad")

    bus.add_handler("boom", boom)
    bus.register_endpoint(EndpointBinding("vm://boom", "boom"))
    with pytest.raises(ValueError):
        bus.send_named_queue("boom", b"")
    t = bus.scheduler.snapshot_metrics().totals
    assert t.completed == 1 and t.in_flight == 0


def test_overloaded_on_queue_full():
    sched = Scheduler(SchedulerConfig(pq_queues=1, wrr_queues=1, queue_capacity_bytes=10))
    b = Bus(sched, workers=1, timeout=5)  # not started: nothing drains
    b.add_handler("echo", lambda env: env.body)
    b.register_endpoint(EndpointBinding("vm://echo", "echo"))
    b.dispatch(Envelope("vm://echo", bytes(10), ExchangePattern.ONE_WAY, priority=9))
    with pytest.raises(Overloaded):
        b.dispatch(Envelope("vm://echo", bytes(1), ExchangePattern.ONE_WAY, priority=9))
    t = sched.snapshot_metrics().totals
    assert (t.submitted, t.rejected, t.in_flight) == (2, 1, 1)


def test_timeout():
    b = Bus(Scheduler(SchedulerConfig()), workers=1, timeout=0.2).start()
    gate = threading.Event()
    b.add_handler("stuck", lambda env: gate.wait(5) and b"")
    b.register_endpoint(EndpointBinding("vm://stuck", "stuck"))
    t0 = time.monotonic()
    with pytest.raises(Timeout):
        b.send_named_queue("stuck", b"")
    assert time.monotonic() - t0 < 2
    gate.set()
    assert b.shutdown(2)


def test_unscheduled_binding_bypasses_queues():
    sched = Scheduler(SchedulerConfig())
    b = Bus(sched, workers=1)  # no workers running
    b.add_handler("echo", lambda env: b"ok")
    b.register_endpoint(EndpointBinding("http://h/healthz", "echo", scheduled=False))
    assert b.dispatch(Envelope("http://h/healthz", b"")).body == b"ok"
    assert sched.snapshot_metrics().totals.submitted == 0


def test_shutdown_drains_then_rejects(bus):
    gate = threading.Event()
    bus.add_handler("wait", lambda env: gate.wait(5) and b"done")
    bus.register_endpoint(EndpointBinding("vm://wait", "wait"))
    for _ in range(3):
        bus.dispatch(Envelope("vm://wait", b"", ExchangePattern.ONE_WAY))
    threading.Timer(0.2, gate.set).start()
    assert bus.shutdown(drain_timeout=5)
    t = bus.scheduler.snapshot_metrics().totals
    assert t.completed == 3 and t.in_flight == 0
    with pytest.raises(Overloaded):
        bus.send_named_queue("wait", b"")
