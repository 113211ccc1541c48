"""Append-only JSON-lines record file.

Each line is ``{"key": <str>, "record": <object | null>}``; a null record
deletes the key. The live view is the last line per key. Files are loaded on
open, appended and flushed on every write, and compacted (rewritten with only
the live records, then atomically swapped in) once dead lines outnumber live
ones.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Optional

from vidbus.errors import StoreUnavailable

COMPACT_MIN_LINES = 64


class RecordFile:
    def __init__(self, path: os.PathLike | str, fsync: bool = False):
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        self._lines = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self.path.exists():
                self._load()
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StoreUnavailable(f"cannot open store {self.path}: {exc}") from exc

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    key, record = entry["key"], entry["record"]
                except (ValueError, KeyError) as exc:
                    raise StoreUnavailable(f"{self.path}:{lineno}: bad record line") from exc
                if record is None:
                    self._records.pop(key, None)
                else:
                    self._records[key] = record
                self._lines += 1

    def get(self, key: str) -> Optional[dict]:
        return self._records.get(key)

    def items(self) -> dict[str, dict]:
        return dict(self._records)

    def __contains__(self, key: str) -> bool:
        return key in self._records

    def __len__(self) -> int:
        return len(self._records)

    def put(self, key: str, record: Optional[dict]) -> None:
        line = json.dumps({"key": key, "record": record}, sort_keys=True, ensure_ascii=False)
        with self._lock:
            try:
                self._fh.write(line + "\n")
                self._fh.flush()
                if self.fsync:
                    os.fsync(self._fh.fileno())
            except (OSError, ValueError) as exc:
                raise StoreUnavailable(f"write to {self.path} failed: {exc}") from exc
            if record is None:
                self._records.pop(key, None)
            else:
                self._records[key] = record
            self._lines += 1
            if self._lines > max(COMPACT_MIN_LINES, 2 * len(self._records)):
                self._compact()

    def delete(self, key: str) -> None:
        self.put(key, None)

    def compact(self) -> None:
        with self._lock:
            self._compact()

    def _compact(self) -> None:
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for key, record in self._records.items():
                fh.write(json.dumps({"key": key, "record": record}, sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._fh.close()
        os.replace(tmp, self.path)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._lines = len(self._records)

    def close(self) -> None:
        with self._lock:
            self._fh.close()
