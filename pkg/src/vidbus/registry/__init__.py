from vidbus.registry.crypto import AccessParams, Sealer, generate_key_hex, load_master_key
from vidbus.registry.registry import (
    Change,
    Poller,
    Registry,
    SourceStatus,
    SystemType,
    VideoSource,
)

__all__ = [
    "AccessParams",
    "Change",
    "Poller",
    "Registry",
    "Sealer",
    "SourceStatus",
    "SystemType",
    "VideoSource",
    "generate_key_hex",
    "load_master_key",
]
