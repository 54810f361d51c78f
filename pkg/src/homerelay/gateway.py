"""Inbox-file message intake.

Messages arrive as files dropped into ``inbox/`` (a gateway daemon, a
test, or the virtual-SMS API endpoint writes them).  Format, bit-exact,
UTF-8 with LF line endings:

    filename   IN<yyyymmdd>_<hhmmss>_<3-digit seq>.txt   (UTC receive time)
    line 1     From: <msisdn>
    line 2     Received: <ISO-8601 UTC timestamp, e.g. 2025-01-01T08:30:00Z>
    line 3     (empty)
    line 4..   message body

Filenames embed arrival time plus a sequence number, so lexicographic
order is arrival order.  The poller is the only component that touches
the directory: each file is examined once, its outcome is persisted, and
the file moves to ``inbox/processed/`` or ``inbox/rejected/``.

Screening order: unknown senders are rejected before the body is even
parsed, then the body must parse, then the appliance must be registered.
Rejections are silent toward the sender; there is no reply channel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .protocol import Command, CommandParseError, parse_command
from .registry import MSISDN_RE, Registry, UnknownDeviceError, resolve_device

INBOX_FILENAME_RE = re.compile(r"IN\d{8}_\d{6}_\d{3}\.txt\Z")
RECEIVED_STAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

OUTCOME_ACCEPTED = "Accepted"
OUTCOME_UNAUTHORIZED = "RejectedUnauthorized"
OUTCOME_UNPARSEABLE = "RejectedUnparseable"
OUTCOME_UNKNOWN_DEVICE = "RejectedUnknownDevice"
OUTCOME_MALFORMED = "RejectedMalformed"  # envelope, not body, failed to parse


class InboxFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InboundMessage:
    id: str  # source filename; unique within the message log
    sender: str
    received_at: float
    body: str


@dataclass(frozen=True)
class IngestOutcome:
    outcome: str
    command: Command | None = None
    detail: str | None = None


def parse_inbox_file(name: str, data: bytes) -> InboundMessage:
    """Parse one inbox file; InboxFormatError on any envelope problem."""
    if not INBOX_FILENAME_RE.fullmatch(name):
        raise InboxFormatError(f"bad inbox filename {name!r}")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InboxFormatError(f"not valid UTF-8: {exc}") from exc
    lines = text.split("\n")
    if len(lines) < 3:
        raise InboxFormatError("missing headers or blank separator line")
    if not lines[0].startswith("From: "):
        raise InboxFormatError("first line must be 'From: <msisdn>'")
    sender = lines[0][len("From: "):]
    if not MSISDN_RE.fullmatch(sender):
        raise InboxFormatError(f"bad sender msisdn {sender!r}")
    if not lines[1].startswith("Received: "):
        raise InboxFormatError("second line must be 'Received: <timestamp>'")
    stamp = lines[1][len("Received: "):]
    try:
        received = datetime.strptime(stamp, RECEIVED_STAMP_FORMAT).replace(
            tzinfo=timezone.utc
        )
    except ValueError as exc:
        raise InboxFormatError(f"bad Received timestamp {stamp!r}") from exc
    if lines[2] != "":
        raise InboxFormatError("headers must be followed by one empty line")
    body = "\n".join(lines[3:]).rstrip("\r\n")
    return InboundMessage(
        id=name, sender=sender, received_at=received.timestamp(), body=body
    )


def scan_inbox(inbox_dir: str | Path) -> list[str]:
    """Names of message candidates in arrival (= filename) order.

    Dotfiles are skipped: atomic drops write a dot-prefixed temp file
    and rename it into place.  Files already moved to processed/ or
    rejected/ are not in this directory anymore.
    """
    inbox = Path(inbox_dir)
    names = [
        p.name
        for p in inbox.iterdir()
        if p.is_file() and not p.name.startswith(".")
    ]
    return sorted(names)


def ingest(msg: InboundMessage, allowlist: frozenset[str], registry: Registry) -> IngestOutcome:
    """Decide one message's fate; pure, effects stay with the caller."""
    if msg.sender not in allowlist:
        return IngestOutcome(
            OUTCOME_UNAUTHORIZED, detail=f"sender {msg.sender} not allowlisted"
        )
    try:
        cmd = parse_command(msg.body)
    except CommandParseError as exc:
        return IngestOutcome(OUTCOME_UNPARSEABLE, detail=exc.kind.value)
    try:
        resolve_device(registry, cmd.appliance)
    except UnknownDeviceError:
        return IngestOutcome(OUTCOME_UNKNOWN_DEVICE, command=cmd, detail=cmd.appliance)
    return IngestOutcome(OUTCOME_ACCEPTED, command=cmd)


def inbox_filename(received_at: float, seq: int) -> str:
    if not 0 <= seq <= 999:
        raise ValueError(f"sequence number must be 0..999, got {seq}")
    stamp = datetime.fromtimestamp(int(received_at), tz=timezone.utc)
    return f"IN{stamp:%Y%m%d}_{stamp:%H%M%S}_{seq:03d}.txt"


def format_inbox_file(sender: str, received_at: float, body: str) -> str:
    """Render the envelope the parser reads back (used by virtual SMS)."""
    if not MSISDN_RE.fullmatch(sender):
        raise ValueError(f"bad sender msisdn {sender!r}")
    stamp = datetime.fromtimestamp(int(received_at), tz=timezone.utc).strftime(
        RECEIVED_STAMP_FORMAT
    )
    return f"From: {sender}\nReceived: {stamp}\n\n{body}\n"
