"""Durable record of everything the server does.

Two files live in the data directory:

``events.log``
    Append-only, one JSON object per line.  Every record carries
    ``event_id`` (dense, strictly increasing within the file), ``ts``
    (epoch seconds) and ``kind`` plus kind-specific fields; the exact
    schema is documented in FORMATS.md.  Appends are flushed and fsynced
    before they return, so anything acknowledged survives a crash.
    Concurrent readers ignore a partially written final line.

``state.snap``
    The latest device state table as one JSON document, replaced
    atomically (write temp file, fsync, rename) so a reader never sees a
    torn snapshot.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .controller import DeviceState, StateTable, state_from_wire, state_to_wire


class StorageFailureError(RuntimeError):
    """The log or snapshot could not be written; the service fail-stops."""


class CorruptSnapshotError(ValueError):
    pass


def iter_events(path: str | Path) -> Iterator[dict]:
    """Yield all complete records from an event log file.

    A final line without a trailing newline is a write in progress and
    is skipped; a malformed line elsewhere means real corruption.
    """
    p = Path(path)
    if not p.exists():
        return
    text = p.read_text(encoding="utf-8")
    lines = text.split("\n")
    # After splitting on '\n', a properly terminated file ends with ''.
    # Anything else in the last slot is a partial record: ignore it.
    for i, line in enumerate(lines[:-1]):
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise StorageFailureError(f"corrupt event log record at line {i + 1}") from exc


class EventLog:
    """Single-writer append log; ids are dense starting at 1 and keep
    counting across reopen."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        last_id = 0
        for record in iter_events(self.path):
            last_id = record["event_id"]
        self._next_id = last_id + 1
        try:
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise StorageFailureError(f"cannot open event log {self.path}: {exc}") from exc

    def append(self, kind: str, ts: float, **fields) -> int:
        record = {"event_id": self._next_id, "ts": ts, "kind": kind}
        record.update(fields)
        try:
            self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except (OSError, ValueError) as exc:
            raise StorageFailureError(f"event log append failed: {exc}") from exc
        self._next_id += 1
        return record["event_id"]

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError:  # pragma: no cover
            pass


def query_events(
    path: str | Path,
    since_id: int = 0,
    kind: str | None = None,
    limit: int = 100,
) -> list[dict]:
    """Events with id > since_id (optionally one kind), in id order."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    out: list[dict] = []
    for record in iter_events(path):
        if record["event_id"] <= since_id:
            continue
        if kind is not None and record["kind"] != kind:
            continue
        out.append(record)
        if len(out) >= limit:
            break
    return out


@dataclass(frozen=True)
class Snapshot:
    written_at: float
    table: StateTable


def write_snapshot(path: str | Path, table: StateTable, now: float) -> None:
    """Atomically replace the snapshot with the current table."""
    path = Path(path)
    payload = {
        "written_at": now,
        "devices": [{"name": name, **state_to_wire(state)} for name, state in table.items()],
    }
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageFailureError(f"snapshot write failed: {exc}") from exc


def load_snapshot(path: str | Path) -> Snapshot | None:
    """Read the snapshot; None if absent, CorruptSnapshotError if unreadable."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return None
    except OSError as exc:
        raise CorruptSnapshotError(f"snapshot unreadable: {exc}") from exc
    try:
        payload = json.loads(text)
        written_at = float(payload["written_at"])
        table: StateTable = {}
        for entry in payload["devices"]:
            name = entry["name"]
            if not isinstance(name, str) or name in table:
                raise ValueError(f"bad device entry {entry!r}")
            table[name] = state_from_wire(entry)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSnapshotError(f"snapshot does not parse: {exc}") from exc
    return Snapshot(written_at=written_at, table=table)
