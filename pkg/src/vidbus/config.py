"""Daemon configuration (TOML).

Every key is optional; defaults are shown::

    [http]
    host = "127.0.0.1"
    port = 8080

    [tcp]
    host = "127.0.0.1"
    port = 7070

    [scheduler]
    priority_threshold = 3        # P_c: priorities <= this go to the PQ bank
    pq_queues = 2
    wrr_queues = 4
    queue_capacity_bytes = 1048576
    sample_period = 1.0           # seconds between processing-rate samples
    weight_load = 0.5
    weight_rate = 0.5
    wrr_weights = [1, 1, 1, 1]    # one per WRR queue

    [bus]
    workers = 4
    timeout = 30.0
    default_priority = 5          # for requests without a session

    [registry]
    sources_path = "data/sources.jsonl"   # relative to the config file
    users_path = "data/users.jsonl"
    poll_interval = 10.0
    master_key_env = "VIDBUS_MASTER_KEY"

    [auth]
    session_lifetime = 28800.0
    password_iterations = 200000

    [auth.priorities]
    admin = 0
    commander = 1
    operator = 4
    viewer = 7
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Optional

from vidbus.auth import DEFAULT_PRIORITIES, UserType
from vidbus.errors import InvalidConfig
from vidbus.scheduler import SchedulerConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(InvalidConfig):
    """A bad value; ``key`` is the dotted name of the offending setting."""

    def __init__(self, key: str, problem: str):
        super().__init__(f"{key}: {problem}")
        self.key = key


@dataclass
class Listener:
    host: str = "127.0.0.1"
    port: int = 0


@dataclass
class BusSettings:
    workers: int = 4
    timeout: float = 30.0
    default_priority: int = 5


@dataclass
class RegistrySettings:
    sources_path: str = "data/sources.jsonl"
    users_path: str = "data/users.jsonl"
    poll_interval: float = 10.0
    master_key_env: str = "VIDBUS_MASTER_KEY"


@dataclass
class AuthSettings:
    session_lifetime: float = 8 * 3600.0
    password_iterations: int = 200_000
    priorities: dict = field(default_factory=lambda: dict(DEFAULT_PRIORITIES))


@dataclass
class Config:
    http: Listener = field(default_factory=lambda: Listener(port=8080))
    tcp: Listener = field(default_factory=lambda: Listener(port=7070))
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    bus: BusSettings = field(default_factory=BusSettings)
    registry: RegistrySettings = field(default_factory=RegistrySettings)
    auth: AuthSettings = field(default_factory=AuthSettings)
    base_dir: Path = field(default_factory=Path.cwd)

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p


def _typed(key: str, value: Any, kind: type) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(key, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _section(name: str, raw: Mapping, cls, defaults) -> Any:
    if not isinstance(raw, Mapping):
        raise ConfigError(name, "must be a table")
    known = {f.name: f for f in fields(cls)}
    values = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown setting")
        default = getattr(defaults, key)
        if isinstance(default, (dict, tuple)) or default is None:
            values[key] = value
        else:
            values[key] = _typed(f"{name}.{key}", value, type(default))
    return values


def _require(key: str, ok: bool, problem: str) -> None:
    if not ok:
        raise ConfigError(key, problem)


def from_dict(raw: Mapping, base_dir: Optional[Path] = None) -> Config:
    cfg = Config(base_dir=base_dir or Path.cwd())
    for key in raw:
        if key not in ("http", "tcp", "scheduler", "bus", "registry", "auth"):
            raise ConfigError(key, "unknown section")

    for name in ("http", "tcp"):
        vals = _section(name, raw.get(name, {}), Listener, getattr(cfg, name))
        listener = Listener(**{**getattr(cfg, name).__dict__, **vals})
        _require(f"{name}.port", 0 <= listener.port <= 65535, "must be in 0..65535")
        setattr(cfg, name, listener)

    sched_raw = dict(raw.get("scheduler", {}))
    vals = _section("scheduler", sched_raw, SchedulerConfig, SchedulerConfig())
    if "wrr_weights" in vals:
        w = vals["wrr_weights"]
        _require("scheduler.wrr_weights", isinstance(w, list) and all(isinstance(x, int) and x >= 1 for x in w),
                 "must be a list of positive integers")
        vals["wrr_weights"] = tuple(w)
        vals.setdefault("wrr_queues", len(w))
    t = vals.get("priority_threshold", 3)
    _require("scheduler.priority_threshold", 0 <= t <= 9, "must be in 0..9")
    for k in ("pq_queues", "wrr_queues"):
        _require(f"scheduler.{k}", vals.get(k, 1) >= 1, "must be >= 1")
    _require("scheduler.queue_capacity_bytes", vals.get("queue_capacity_bytes", 1) > 0, "must be > 0")
    _require("scheduler.sample_period", vals.get("sample_period", 1.0) > 0, "must be > 0")
    for k in ("weight_load", "weight_rate"):
        _require(f"scheduler.{k}", 0.0 <= vals.get(k, 0.5) <= 1.0, "must be in [0, 1]")
    wl, wr = vals.get("weight_load", 0.5), vals.get("weight_rate", 0.5)
    if "weight_load" in vals and "weight_rate" not in vals:
        vals["weight_rate"] = wr = 1.0 - wl
    elif "weight_rate" in vals and "weight_load" not in vals:
        vals["weight_load"] = wl = 1.0 - wr
    _require("scheduler.weight_rate", abs(wl + wr - 1.0) <= 1e-9, "weight_load + weight_rate must equal 1")
    if "wrr_weights" in vals:
        _require("scheduler.wrr_weights", len(vals["wrr_weights"]) == vals.get("wrr_queues", 4),
                 "needs one entry per WRR queue")
    cfg.scheduler = SchedulerConfig(**vals)

    vals = _section("bus", raw.get("bus", {}), BusSettings, cfg.bus)
    cfg.bus = BusSettings(**{**cfg.bus.__dict__, **vals})
    _require("bus.workers", cfg.bus.workers >= 1, "must be >= 1")
    _require("bus.timeout", cfg.bus.timeout > 0, "must be > 0")
    _require("bus.default_priority", 0 <= cfg.bus.default_priority <= 9, "must be in 0..9")

    vals = _section("registry", raw.get("registry", {}), RegistrySettings, cfg.registry)
    cfg.registry = RegistrySettings(**{**cfg.registry.__dict__, **vals})
    _require("registry.poll_interval", cfg.registry.poll_interval > 0, "must be > 0")
    _require("registry.master_key_env", bool(cfg.registry.master_key_env), "must be non-empty")

    auth_raw = dict(raw.get("auth", {}))
    priorities = auth_raw.pop("priorities", None)
    vals = _section("auth", auth_raw, AuthSettings, cfg.auth)
    cfg.auth = AuthSettings(**{**cfg.auth.__dict__, **vals})
    _require("auth.session_lifetime", cfg.auth.session_lifetime > 0, "must be > 0")
    _require("auth.password_iterations", cfg.auth.password_iterations >= 1000, "must be >= 1000")
    if priorities is not None:
        _require("auth.priorities", isinstance(priorities, Mapping), "must be a table")
        merged = dict(DEFAULT_PRIORITIES)
        for k, v in priorities.items():
            key = f"auth.priorities.{k}"
            _require(key, k in {u.value for u in UserType}, "unknown user type")
            _require(key, isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= 9, "must be an integer in 0..9")
            merged[k] = v
        cfg.auth.priorities = merged
    return cfg


def load(path: str | Path) -> Config:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from exc
    return from_dict(raw, path.resolve().parent)
