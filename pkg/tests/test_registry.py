import time

import pytest
from conftest import SOURCES, USERS
from regtools import flip_ciphertext_bit, leaks

from vidbus.errors import CorruptRecord, DuplicateSource, Forbidden, KeyUnavailable, NoSuchSource
from vidbus.registry import Change, Registry, Sealer, SourceStatus, load_master_key
from vidbus.registry.mock import MockSource
from vidbus.store import RecordFile


def linear_search(region, keyword=None, system_type=None):
    out = []
    for desc, _ in SOURCES:
        if region and desc["region"] != region:
            continue
        if keyword and keyword.casefold() not in desc["name"].casefold():
            continue
        if system_type and desc["system_type"] != system_type:
            continue
        out.append(desc["id"])
    return sorted(out)


def ids(items):
    return [s["id"] for s in items]


@pytest.mark.parametrize("region,keyword,stype", [
    ("淮阴区", None, None),
    ("nonexistent-region", None, None),
    ("", "交通", None),
    ("", None, "traffic"),
    ("淮阴区", "交通", None),
    ("", "MOBILE", None),
    ("", None, None),
])
def test_search_matches_linear_scan(registry, region, keyword, stype):
    assert ids(registry.search(region, keyword, stype)) == linear_search(region, keyword, stype)


def test_search_fixture_counts(registry):
    assert len(registry.search("淮阴区")) == 3
    assert registry.search("nonexistent-region") == []
    assert ids(registry.search("", keyword="交通")) == ["src-001", "src-004"]


def test_summaries_exclude_params(registry):
    for item in registry.search(""):
        assert "params" not in item
        assert not any("S3cretCam" in str(v) for v in item.values())


def test_register_searchable_and_duplicate(registry):
    registry.register_source({"id": "new", "name": "n", "system_type": "provider", "region": "r"}, {"a": 1})
    assert ids(registry.search("r")) == ["new"]
    with pytest.raises(DuplicateSource):
        registry.register_source({"id": "new", "name": "n", "system_type": "provider", "region": "r"}, {})


def test_no_key_configured(source_store):
    reg = Registry(source_store, None)
    with pytest.raises(KeyUnavailable):
        reg.register_source(SOURCES[0][0], SOURCES[0][1])
    with pytest.raises(KeyUnavailable):
        load_master_key("VIDBUS_MASTER_KEY", environ={})
    with pytest.raises(KeyUnavailable):
        load_master_key("VIDBUS_MASTER_KEY", environ={"VIDBUS_MASTER_KEY": "abcd"})


def session_for(auth, usertype):
    name, pw, _ = next(u for u in USERS if u[2] == usertype)
    return auth.login(name, pw)


@pytest.mark.parametrize("usertype", ["admin", "commander", "operator"])
def test_params_for_privileged(registry, auth, usertype):
    assert registry.get_access_params("src-002", session_for(auth, usertype)) == SOURCES[1][1]


def test_params_forbidden_for_viewer(registry, auth):
    with pytest.raises(Forbidden):
        registry.get_access_params("src-002", session_for(auth, "viewer"))


def test_params_unknown_source(registry, auth):
    with pytest.raises(NoSuchSource):
        registry.get_access_params("nope", session_for(auth, "admin"))


def test_store_has_no_plaintext(registry, source_store):
    assert leaks(source_store.path) == []


def test_tamper_detected(registry, source_store, sealer, auth, tmp_path):
    source_store.close()
    flip_ciphertext_bit(source_store.path, "src-003", bit=13)
    store = RecordFile(source_store.path)
    reg = Registry(store, sealer)
    admin = session_for(auth, "admin")
    with pytest.raises(CorruptRecord):
        reg.get_access_params("src-003", admin)
    assert reg.get_access_params("src-001", admin) == SOURCES[0][1]
    store.close()


def test_ciphertext_bound_to_record(registry, sealer):
    sealed = registry._params["src-001"]
    with pytest.raises(CorruptRecord):
        sealer.unseal(sealed, b"src-002")


def test_wrong_key_fails(registry, source_store):
    other = Registry(source_store, Sealer(bytes(32)))
    with pytest.raises(CorruptRecord):
        other.sealer.unseal(other._params["src-001"], b"src-001")


def test_update_bumps_only_on_change(registry):
    same = registry.update_source("src-001", params=dict(SOURCES[0][1]))
    assert same.params_version == 1
    changed = registry.update_source("src-001", params={**SOURCES[0][1], "endpoint": "rtsp://10.0.0.11:8554/live"})
    assert changed.params_version == 2
    renamed = registry.update_source("src-001", fields={"name": "renamed"})
    assert (renamed.name, renamed.params_version) == ("renamed", 2)


def test_reload_from_store(registry, source_store, sealer, auth):
    reg = Registry(source_store, sealer)
    assert ids(reg.search("")) == ids(registry.search(""))
    assert reg.get_access_params("src-005", session_for(auth, "operator")) == SOURCES[4][1]


def test_poll_detects_param_change(source_store, sealer):
    reg = Registry(source_store, sealer)
    params = {"endpoint": "rtsp://127.0.0.1:554/a", "password": "pw-mock-1"}
    with MockSource(params) as mock:
        reg.register_source({"id": "m", "name": "mock", "system_type": "traffic", "region": "r",
                             "poll_url": mock.url}, params)
        # first sweep only moves status from Unknown to Online
        assert reg.poll_sources() == [("m", Change.STATUS_CHANGED)]
        assert reg.poll_sources() == [("m", Change.NONE)]
        assert reg.get("m").params_version == 1
        mock.set_params(endpoint="rtsp://127.0.0.1:8554/a")
        assert reg.poll_sources() == [("m", Change.PARAMS_CHANGED)]
        assert reg.get("m").params_version == 2
        assert reg.poll_sources() == [("m", Change.NONE)]
        assert reg.get("m").params_version == 2


def test_unreachable_source_goes_offline(source_store, sealer):
    reg = Registry(source_store, sealer)
    with MockSource({"a": 1}) as alive:
        dead = MockSource({"b": 2})
        dead_url = dead.url
        dead._server.server_close()
        reg.register_source({"id": "alive", "name": "a", "system_type": "traffic", "region": "r",
                             "poll_url": alive.url}, {"a": 1})
        reg.register_source({"id": "dead", "name": "d", "system_type": "traffic", "region": "r",
                             "poll_url": dead_url}, {"b": 2})
        result = dict(reg.poll_sources())
        assert result == {"alive": Change.STATUS_CHANGED, "dead": Change.STATUS_CHANGED}
        assert reg.get("dead").status is SourceStatus.OFFLINE
        assert reg.get("alive").status is SourceStatus.ONLINE
        assert dict(reg.poll_sources()) == {"alive": Change.NONE, "dead": Change.NONE}


def test_poll_status_change(source_store, sealer):
    reg = Registry(source_store, sealer)
    with MockSource({"a": 1}) as mock:
        reg.register_source({"id": "m", "name": "m", "system_type": "traffic", "region": "r",
                             "poll_url": mock.url}, {"a": 1})
        reg.poll_sources()
        mock.status = "Offline"
        assert reg.poll_sources() == [("m", Change.STATUS_CHANGED)]
        assert reg.get("m").params_version == 1


def test_poller_thread(source_store, sealer):
    from vidbus.registry import Poller

    reg = Registry(source_store, sealer)
    with MockSource({"a": 1}) as mock:
        reg.register_source({"id": "m", "name": "m", "system_type": "traffic", "region": "r",
                             "poll_url": mock.url}, {"a": 1})
        poller = Poller(reg, interval=0.1).start()
        mock.set_params(a=2)
        deadline = time.monotonic() + 2
        while reg.get("m").params_version == 1 and time.monotonic() < deadline:
            time.sleep(0.02)
        poller.stop()
    assert reg.get("m").params_version == 2
