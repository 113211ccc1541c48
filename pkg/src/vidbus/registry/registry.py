"""Federated video-source registry with sealed access parameters."""

from __future__ import annotations

import enum
import json
import logging
import threading
import time
import urllib.request
import uuid
from dataclasses import asdict, dataclass, replace
from typing import Any, Callable, Mapping, Optional

from vidbus.auth import Session, UserType
from vidbus.errors import (
    BadRequest,
    CorruptRecord,
    DuplicateSource,
    Forbidden,
    KeyUnavailable,
    NoSuchSource,
)
from vidbus.registry.crypto import AccessParams, Sealer
from vidbus.store import RecordFile

log = logging.getLogger(__name__)
audit = logging.getLogger("vidbus.audit")


class SystemType(str, enum.Enum):
    PUBLIC_SECURITY = "public_security"
    TRAFFIC = "traffic"
    CITY_MANAGEMENT = "city_management"
    WORK_SAFETY = "work_safety"
    MOBILE_COMMAND = "mobile_command"
    PROVIDER = "provider"


class SourceStatus(str, enum.Enum):
    ONLINE = "Online"
    OFFLINE = "Offline"
    UNKNOWN = "Unknown"


class Change(str, enum.Enum):
    PARAMS_CHANGED = "ParamsChanged"
    STATUS_CHANGED = "StatusChanged"
    NONE = "None"


@dataclass(frozen=True)
class VideoSource:
    id: str
    name: str
    system_type: SystemType
    region: str
    location: Optional[tuple[float, float]] = None
    status: SourceStatus = SourceStatus.UNKNOWN
    params_version: int = 0
    updated_at: float = 0.0
    poll_url: Optional[str] = None

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "VideoSource":
        try:
            loc = d.get("location")
            return cls(
                id=str(d.get("id") or uuid.uuid4().hex),
                name=str(d["name"]),
                system_type=SystemType(d["system_type"]),
                region=str(d.get("region", "")),
                location=(float(loc[0]), float(loc[1])) if loc else None,
                status=SourceStatus(d.get("status", SourceStatus.UNKNOWN.value)),
                params_version=int(d.get("params_version", 0)),
                updated_at=float(d.get("updated_at", 0.0)),
                poll_url=d.get("poll_url") or None,
            )
        except (KeyError, ValueError, TypeError, IndexError) as exc:
            raise BadRequest(f"invalid source descriptor: {exc}") from exc

    def summary(self) -> dict:
        """Public view of the source; never includes access parameters."""
        d = asdict(self)
        d["system_type"] = self.system_type.value
        d["status"] = self.status.value
        d["location"] = list(self.location) if self.location else None
        return d


def http_fetch(url: str, timeout: float = 2.0) -> dict:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return json.loads(resp.read())


class Registry:
    """Source descriptors in memory, mirrored to an append-only record file.

    ``sealer`` may be None (no master key configured): reads of descriptors
    still work but anything touching parameters raises KeyUnavailable.
    """

    def __init__(
        self,
        store: RecordFile,
        sealer: Optional[Sealer],
        clock: Callable[[], float] = time.time,
        fetch: Callable[[str], dict] = http_fetch,
    ):
        self.store = store
        self.sealer = sealer
        self.clock = clock
        self.fetch = fetch
        self._write_lock = threading.Lock()
        self._sources: dict[str, VideoSource] = {}
        self._params: dict[str, AccessParams] = {}
        for key, rec in store.items().items():
            self._sources[key] = VideoSource.from_dict(rec["source"])
            self._params[key] = AccessParams.from_record(rec["params"])

    def _need_sealer(self) -> Sealer:
        if self.sealer is None:
            raise KeyUnavailable("no master key configured")
        return self.sealer

    def _persist(self, src: VideoSource, sealed: AccessParams) -> None:
        self.store.put(src.id, {"source": src.summary(), "params": sealed.to_record()})
        # Swap in fresh dicts so concurrent readers never see a half-applied write.
        sources = dict(self._sources)
        sources[src.id] = src
        params = dict(self._params)
        params[src.id] = sealed
        self._sources, self._params = sources, params

    def register_source(self, descriptor: Mapping[str, Any] | VideoSource, params: Mapping) -> str:
        sealer = self._need_sealer()
        src = descriptor if isinstance(descriptor, VideoSource) else VideoSource.from_dict(descriptor)
        with self._write_lock:
            if src.id in self._sources:
                raise DuplicateSource(f"source {src.id!r} already registered")
            src = replace(src, params_version=1, updated_at=self.clock())
            self._persist(src, sealer.seal(dict(params), src.id.encode()))
        return src.id

    def update_source(
        self,
        source_id: str,
        fields: Optional[Mapping[str, Any]] = None,
        params: Optional[Mapping] = None,
    ) -> VideoSource:
        """Patch descriptor fields and/or replace parameters.

        The version only moves when the decrypted parameter document differs.
        """
        sealer = self._need_sealer()
        with self._write_lock:
            src = self._get(source_id)
            sealed = self._params[source_id]
            if fields:
                merged = src.summary()
                merged.update({k: v for k, v in fields.items() if k not in ("id", "params_version")})
                src = replace(VideoSource.from_dict(merged), id=src.id, params_version=src.params_version)
            if params is not None and dict(params) != sealer.unseal(sealed, source_id.encode()):
                sealed = sealer.seal(dict(params), source_id.encode())
                src = replace(src, params_version=src.params_version + 1)
            src = replace(src, updated_at=self.clock())
            self._persist(src, sealed)
            return src

    def _get(self, source_id: str) -> VideoSource:
        try:
            return self._sources[source_id]
        except KeyError:
            raise NoSuchSource(f"no source {source_id!r}") from None

    def get(self, source_id: str) -> VideoSource:
        return self._get(source_id)

    def search(
        self,
        region: str = "",
        keyword: Optional[str] = None,
        system_type: Optional[str | SystemType] = None,
    ) -> list[dict]:
        stype = SystemType(system_type) if system_type else None
        kw = keyword.casefold() if keyword else None
        hits = []
        for src in self._sources.values():
            if region and src.region != region:
                continue
            if kw and kw not in src.name.casefold():
                continue
            if stype and src.system_type is not stype:
                continue
            hits.append(src)
        hits.sort(key=lambda s: s.id)
        return [s.summary() for s in hits]

    def get_access_params(self, source_id: str, session: Session) -> dict:
        if not session.usertype.at_least(UserType.OPERATOR):
            audit.info("params denied source=%s user=%s", source_id, session.username)
            raise Forbidden("operator privileges required")
        sealer = self._need_sealer()
        self._get(source_id)
        doc = sealer.unseal(self._params[source_id], source_id.encode())
        audit.info("params read source=%s user=%s", source_id, session.username)
        return doc

    def poll_sources(self, now: Optional[float] = None) -> list[tuple[str, Change]]:
        """Fetch each pollable source's document and fold any change in.

        Fetches happen outside the write lock; a failing source is marked
        Offline and the sweep moves on.
        """
        now = self.clock() if now is None else now
        results = []
        for source_id, src in sorted(self._sources.items()):
            if not src.poll_url:
                results.append((source_id, Change.NONE))
                continue
            try:
                doc = self.fetch(src.poll_url)
                status = SourceStatus(doc.get("status", SourceStatus.ONLINE.value))
                params = doc.get("params")
            except Exception as exc:  # any transport or decode failure
                log.warning("poll of %s failed: %s", source_id, exc)
                status, params = SourceStatus.OFFLINE, None
            results.append((source_id, self._apply_poll(source_id, status, params, now)))
        return results

    def _apply_poll(self, source_id, status, params, now) -> Change:
        with self._write_lock:
            src = self._sources.get(source_id)
            if src is None:
                return Change.NONE
            sealed = self._params[source_id]
            change = Change.NONE
            if params is not None and self.sealer is not None:
                try:
                    current = self.sealer.unseal(sealed, source_id.encode())
                except CorruptRecord:
                    current = None
                if params != current:
                    sealed = self.sealer.seal(params, source_id.encode())
                    src = replace(src, params_version=src.params_version + 1)
                    change = Change.PARAMS_CHANGED
            if status is not src.status:
                src = replace(src, status=status)
                if change is Change.NONE:
                    change = Change.STATUS_CHANGED
            if change is not Change.NONE:
                self._persist(replace(src, updated_at=now), sealed)
            return change


class Poller:
    """Background sweep calling ``registry.poll_sources`` every ``interval`` seconds."""

    def __init__(self, registry: Registry, interval: float = 10.0):
        self.registry = registry
        self.interval = interval
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="vidbus-poller", daemon=True)

    def start(self) -> "Poller":
        self._thread.start()
        return self

    def _run(self) -> None:
        while not self._stop.wait(self.interval):
            try:
                self.registry.poll_sources()
            except Exception:
                log.exception("poll sweep failed")

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=self.interval + 1)
