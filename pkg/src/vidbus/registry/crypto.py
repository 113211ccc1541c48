"""AES-256-GCM sealing of access-parameter documents."""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass
from typing import Mapping, Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from vidbus.errors import CorruptRecord, KeyUnavailable

DEFAULT_KEY_ENV = "VIDBUS_MASTER_KEY"
NONCE_SIZE = 12


def load_master_key(env_var: str = DEFAULT_KEY_ENV, environ: Optional[Mapping[str, str]] = None) -> bytes:
    """Read a 256-bit key given as 64 hex characters from the environment."""
    environ = os.environ if environ is None else environ
    raw = environ.get(env_var, "").strip()
    if not raw:
        raise KeyUnavailable(f"master key not set: export {env_var}=<64 hex chars>")
    try:
        key = bytes.fromhex(raw)
    except ValueError:
        raise KeyUnavailable(f"{env_var} is not valid hex") from None
    if len(key) != 32:
        raise KeyUnavailable(f"{env_var} must encode 32 bytes, got {len(key)}")
    return key


def generate_key_hex() -> str:
    return AESGCM.generate_key(bit_length=256).hex()


def canonical(doc: Mapping) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


@dataclass(frozen=True)
class AccessParams:
    ciphertext: bytes
    nonce: bytes
    key_id: str

    def to_record(self) -> dict:
        return {
            "ciphertext": base64.b64encode(self.ciphertext).decode(),
            "nonce": base64.b64encode(self.nonce).decode(),
            "key_id": self.key_id,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "AccessParams":
        try:
            return cls(
                base64.b64decode(rec["ciphertext"], validate=True),
                base64.b64decode(rec["nonce"], validate=True),
                rec["key_id"],
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptRecord("malformed sealed parameters") from exc


class Sealer:
    """Seals parameter documents; ``aad`` binds a ciphertext to its owner record."""

    def __init__(self, key: bytes, key_id: str = "k1"):
        if len(key) != 32:
            raise KeyUnavailable("master key must be 32 bytes")
        self._aead = AESGCM(key)
        self.key_id = key_id

    def seal(self, doc: Mapping, aad: bytes = b"") -> AccessParams:
        nonce = os.urandom(NONCE_SIZE)
        return AccessParams(self._aead.encrypt(nonce, canonical(doc), aad), nonce, self.key_id)

    def unseal(self, sealed: AccessParams, aad: bytes = b"") -> dict:
        if sealed.key_id != self.key_id:
            raise CorruptRecord(f"record sealed under unknown key {sealed.key_id!r}")
        try:
            plain = self._aead.decrypt(sealed.nonce, sealed.ciphertext, aad)
            return json.loads(plain)
        except (InvalidTag, ValueError) as exc:
            raise CorruptRecord("access parameters failed authentication") from exc
