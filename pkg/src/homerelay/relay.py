"""Eight-line relay bus: frame encoding plus a pluggable write backend.

The whole bus is driven level-triggered: after every state change the
full 8-bit image of all relay lines is written in one operation (bit i
set = line i energized).  Rewriting an unchanged frame is harmless and
makes restart recovery idempotent; bits of unmapped lines stay 0.

The shipped backend is a simulator appending a bit-exact trace file,
one record per line:

    1970-01-01T00:30:00Z FRAME 0x03

(ISO-8601 UTC timestamp, seconds resolution, then the frame as two
uppercase hex digits.)  Real GPIO or parallel-port hardware would slot
in as another BusBackend.
"""

from __future__ import annotations

import os
import re
from datetime import datetime, timezone
from pathlib import Path

from .controller import StateTable, is_on
from .registry import Registry

_TRACE_LINE_RE = re.compile(
    r"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2})Z FRAME 0x([0-9A-F]{2})\Z"
)
_STAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


class BusUnavailableError(RuntimeError):
    """The backend cannot accept writes; the controller must fail stop."""


class MalformedTraceError(ValueError):
    def __init__(self, line_no: int, detail: str) -> None:
        super().__init__(f"trace line {line_no}: {detail}")
        self.line_no = line_no


def encode_frame(table: StateTable, registry: Registry) -> int:
    """Fold device states into the 8-bit line image."""
    frame = 0
    for spec in registry:
        if is_on(table[spec.name]):
            frame |= 1 << spec.line
    return frame


def format_trace_line(at: float, frame: int) -> str:
    stamp = datetime.fromtimestamp(int(at), tz=timezone.utc).strftime(_STAMP_FORMAT)
    return f"{stamp}Z FRAME 0x{frame:02X}"


def read_trace(text: str) -> list[tuple[int, int]]:
    """Parse simulator trace contents into (epoch_seconds, frame) pairs.

    Lossless inverse of the trace format; any malformed line raises
    MalformedTraceError with its line number.
    """
    records: list[tuple[int, int]] = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if line == "":
            continue
        m = _TRACE_LINE_RE.fullmatch(line)
        if m is None:
            raise MalformedTraceError(line_no, f"unparseable record {line!r}")
        stamp = datetime.strptime(m.group(1), _STAMP_FORMAT).replace(tzinfo=timezone.utc)
        records.append((int(stamp.timestamp()), int(m.group(2), 16)))
    return records


class BusBackend:
    """Sink for relay frames; writes are observed in the order issued."""

    def write(self, frame: int, at: float) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class TraceFileBackend(BusBackend):
    """Simulator: appends every frame to a trace file, flushed per write."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        try:
            self._fh = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise BusUnavailableError(f"cannot open trace file {self.path}: {exc}") from exc

    def write(self, frame: int, at: float) -> None:
        try:
            self._fh.write(format_trace_line(at, frame) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
        except (OSError, ValueError) as exc:
            raise BusUnavailableError(f"trace file write failed: {exc}") from exc

    def close(self) -> None:
        try:
            self._fh.close()
        except OSError:  # pragma: no cover
            pass


def write_frame(backend: BusBackend, frame: int, at: float) -> None:
    """Write one full line image to the bus."""
    if not 0 <= frame <= 0xFF:
        raise ValueError(f"frame must fit in 8 bits, got {frame:#x}")
    backend.write(frame, at)
