import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from vidbus.auth import Authenticator  # noqa: E402
from vidbus.config import from_dict  # noqa: E402
from vidbus.registry import Registry, Sealer  # noqa: E402
from vidbus.store import RecordFile  # noqa: E402

KEY_HEX = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff"
FAST_ITERATIONS = 1000

USERS = [
    ("admin1", "adminPass1", "admin"),
    ("cmd1", "commandPass1", "commander"),
    ("op1", "operatorPass1", "operator"),
    ("view1", "viewerPass1", "viewer"),
]

SOURCES = [
    ({"id": "src-001", "name": "淮阴区交通路口1", "system_type": "traffic", "region": "淮阴区"},
     {"endpoint": "rtsp://10.0.0.11:554/live", "protocol": "rtsp", "username": "cam", "password": "S3cretCam-001", "codec": "h264"}),
    ({"id": "src-002", "name": "淮阴区治安卡口", "system_type": "public_security", "region": "淮阴区"},
     {"endpoint": "rtsp://10.0.0.12:554/live", "protocol": "rtsp", "username": "cam", "password": "S3cretCam-002", "codec": "h265"}),
    ({"id": "src-003", "name": "淮阴区城管广场", "system_type": "city_management", "region": "淮阴区"},
     {"endpoint": "http://10.0.0.13/stream", "protocol": "http-flv", "username": "viewer", "password": "S3cretCam-003", "codec": "h264"}),
    ({"id": "src-004", "name": "清江浦区交通枢纽", "system_type": "traffic", "region": "清江浦区"},
     {"endpoint": "rtsp://10.0.1.14:554/main", "protocol": "rtsp", "username": "ops", "password": "S3cretCam-004", "codec": "h264"}),
    ({"id": "src-005", "name": "Mobile command post", "system_type": "mobile_command", "region": "淮安区"},
     {"endpoint": "rtmp://10.0.2.15/live", "protocol": "rtmp", "username": "mcp", "password": "S3cretCam-005", "codec": "h264"}),
]


@pytest.fixture
def key():
    return bytes.fromhex(KEY_HEX)


@pytest.fixture
def sealer(key):
    return Sealer(key)


@pytest.fixture
def user_store(tmp_path):
    store = RecordFile(tmp_path / "users.jsonl")
    yield store
    store.close()


@pytest.fixture
def source_store(tmp_path):
    store = RecordFile(tmp_path / "sources.jsonl")
    yield store
    store.close()


@pytest.fixture
def auth(user_store):
    a = Authenticator(user_store, iterations=FAST_ITERATIONS)
    for name, pw, utype in USERS:
        a.add_user(name, pw, utype)
    return a


@pytest.fixture
def registry(source_store, sealer):
    reg = Registry(source_store, sealer)
    for desc, params in SOURCES:
        reg.register_source(desc, params)
    return reg


def daemon_config(tmp_path, **scheduler):
    return from_dict(
        {
            "http": {"port": 0},
            "tcp": {"port": 0},
            "scheduler": {"pq_queues": 2, "wrr_queues": 3, **scheduler},
            "bus": {"workers": 3, "timeout": 10.0},
            "registry": {"poll_interval": 60.0},
            "auth": {"password_iterations": FAST_ITERATIONS},
        },
        base_dir=tmp_path,
    )


def seed_daemon(daemon):
    for name, pw, utype in USERS:
        daemon.auth.add_user(name, pw, utype)
    for desc, params in SOURCES:
        daemon.registry.register_source(desc, params)


@pytest.fixture
def daemon(tmp_path):
    from vidbus.daemon import Daemon

    d = Daemon(daemon_config(tmp_path), environ={"VIDBUS_MASTER_KEY": KEY_HEX})
    seed_daemon(d)
    d.start()
    yield d
    d.stop(drain_timeout=5)


# (number, title, passed, seconds, budget, note) appended by the acceptance suite
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, secs, budget, note in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        line = f"{verdict} [{num}] {title} ({secs:.2f}s / budget {budget:g}s)"
        terminalreporter.write_line(line + (f" - {note}" if note else ""))
