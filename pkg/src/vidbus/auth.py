"""Identity verification, sessions and the user-type to priority mapping."""

from __future__ import annotations

import enum
import hashlib
import hmac
import logging
import os
import secrets
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from vidbus.errors import (
    AuthFailed,
    DuplicateUser,
    InvalidUserType,
    TokenExpired,
    TokenInvalid,
    WeakPassword,
)
from vidbus.store import RecordFile

log = logging.getLogger(__name__)

DEFAULT_PRIORITIES = {"admin": 0, "commander": 1, "operator": 4, "viewer": 7}
DEFAULT_SESSION_LIFETIME = 8 * 3600.0
DEFAULT_ITERATIONS = 200_000
MIN_PASSWORD_LENGTH = 8


class UserType(str, enum.Enum):
    ADMIN = "admin"
    COMMANDER = "commander"
    OPERATOR = "operator"
    VIEWER = "viewer"

    @property
    def rank(self) -> int:
        return _RANK[self]

    def at_least(self, other: "UserType") -> bool:
        return self.rank >= other.rank


_RANK = {UserType.VIEWER: 0, UserType.OPERATOR: 1, UserType.COMMANDER: 2, UserType.ADMIN: 3}


def parse_usertype(value: str) -> UserType:
    try:
        return UserType(value)
    except ValueError:
        raise InvalidUserType(f"unknown user type {value!r}") from None


@dataclass(frozen=True)
class UserRecord:
    username: str
    password_hash: bytes
    salt: bytes
    usertype: UserType
    iterations: int = DEFAULT_ITERATIONS

    def __repr__(self) -> str:
        return f"UserRecord(username={self.username!r}, usertype={self.usertype.value})"

    def to_record(self) -> dict:
        return {
            "username": self.username,
            "password_hash": self.password_hash.hex(),
            "salt": self.salt.hex(),
            "usertype": self.usertype.value,
            "iterations": self.iterations,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "UserRecord":
        return cls(
            rec["username"],
            bytes.fromhex(rec["password_hash"]),
            bytes.fromhex(rec["salt"]),
            UserType(rec["usertype"]),
            int(rec["iterations"]),
        )


@dataclass(frozen=True)
class Session:
    token: str
    username: str
    usertype: UserType
    priority: int
    issued_at: float
    expires_at: float

    def __repr__(self) -> str:
        return f"Session(username={self.username!r}, usertype={self.usertype.value}, priority={self.priority})"


def hash_password(password: str, salt: bytes, iterations: int) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)


def check_password_policy(password: str) -> None:
    if (
        len(password) < MIN_PASSWORD_LENGTH
        or not any(c.isalpha() for c in password)
        or not any(c.isdigit() for c in password)
    ):
        raise WeakPassword(
            f"password needs at least {MIN_PASSWORD_LENGTH} characters with letters and digits"
        )


class Authenticator:
    def __init__(
        self,
        users: RecordFile,
        priorities: Optional[Mapping[str, int]] = None,
        session_lifetime: float = DEFAULT_SESSION_LIFETIME,
        clock: Callable[[], float] = time.time,
        iterations: int = DEFAULT_ITERATIONS,
    ):
        self.users = users
        self.priorities = dict(DEFAULT_PRIORITIES if priorities is None else priorities)
        for name, p in self.priorities.items():
            parse_usertype(name)
            if not 0 <= int(p) <= 9:
                raise InvalidUserType(f"priority for {name!r} must be in 0..9")
        self.session_lifetime = session_lifetime
        self.clock = clock
        self.iterations = iterations
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._write_lock = threading.Lock()
        # Hashed for unknown users so both failure paths cost the same.
        self._dummy_salt = os.urandom(16)

    def priority_for(self, usertype: str | UserType) -> int:
        key = usertype.value if isinstance(usertype, UserType) else str(usertype)
        if key not in self.priorities:
            raise InvalidUserType(f"unknown user type {key!r}")
        return int(self.priorities[key])

    def add_user(self, username: str, password: str, usertype: str | UserType) -> UserRecord:
        utype = usertype if isinstance(usertype, UserType) else parse_usertype(usertype)
        if not username or not username.strip():
            raise WeakPassword("username must be non-empty")
        check_password_policy(password)
        salt = os.urandom(16)
        rec = UserRecord(username, hash_password(password, salt, self.iterations), salt, utype, self.iterations)
        with self._write_lock:
            if username in self.users:
                raise DuplicateUser(f"user {username!r} exists")
            self.users.put(username, rec.to_record())
        log.info("user added username=%s usertype=%s", username, utype.value)
        return rec

    def lookup(self, username: str) -> Optional[dict]:
        """Username and user type only; the hash never leaves this module."""
        raw = self.users.get(username)
        if raw is None:
            return None
        return {"username": raw["username"], "usertype": raw["usertype"]}

    def login(self, username: str, password: str) -> Session:
        raw = self.users.get(username)
        if raw is None:
            hash_password(password, self._dummy_salt, self.iterations)
            raise AuthFailed("invalid username or password")
        rec = UserRecord.from_record(raw)
        if not hmac.compare_digest(hash_password(password, rec.salt, rec.iterations), rec.password_hash):
            raise AuthFailed("invalid username or password")
        now = self.clock()
        session = Session(
            token=secrets.token_urlsafe(32),
            username=rec.username,
            usertype=rec.usertype,
            priority=self.priority_for(rec.usertype),
            issued_at=now,
            expires_at=now + self.session_lifetime,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def validate(self, token: Optional[str]) -> Session:
        with self._lock:
            session = self._sessions.get(token) if isinstance(token, str) else None
            if session is None:
                raise TokenInvalid("unknown session token")
            if self.clock() >= session.expires_at:
                del self._sessions[token]
                raise TokenExpired("session expired")
            return session

    def purge_expired(self) -> int:
        now = self.clock()
        with self._lock:
            dead = [t for t, s in self._sessions.items() if now >= s.expires_at]
            for t in dead:
                del self._sessions[t]
        return len(dead)
