"""Text command grammar for appliance control.

A command is one short line of text, the kind a phone keypad produces:

    <appliance> <op> [<duration_s>]

``op`` is ``1`` to switch on, ``0`` to switch off.  The optional third
field only combines with ``1`` and gives the number of seconds the
appliance stays on before it is switched off automatically:

    ac 1              switch the AC on
    ac 0              switch it off
    cooker 1 1800     run the cooker for 30 minutes

Normative grammar (bit-exact):

    body     := WS* name WS+ op (WS+ duration)? WS*
    WS       := space | tab
    op       := "0" | "1"
    duration := digit+          (ASCII digits, value 1..86400)

Appliance names are case-insensitive and canonicalized to lowercase;
after lowercasing they must match ``[a-z][a-z0-9_]*`` and be at most 32
characters.  A three-field message with op ``0`` is rejected rather than
silently ignored: off never takes a duration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

MAX_DURATION_S = 86400  # longest timed run: 24 h
NAME_RE = re.compile(r"[a-z][a-z0-9_]{0,31}\Z")

_FIELD_SPLIT_RE = re.compile(r"[ \t]+")
_DIGITS_RE = re.compile(r"[0-9]+\Z")
_WS = " \t"


@dataclass(frozen=True)
class TurnOn:
    """Switch on; stays on until commanded off (or a device limit applies)."""


@dataclass(frozen=True)
class TurnOff:
    """Switch off."""


@dataclass(frozen=True)
class TurnOnTimed:
    """Switch on for ``duration_s`` seconds, then off automatically."""

    duration_s: int


Operation = TurnOn | TurnOff | TurnOnTimed


@dataclass(frozen=True)
class Command:
    appliance: str
    op: Operation


class ParseErrorKind(str, Enum):
    EMPTY_BODY = "EmptyBody"
    WRONG_FIELD_COUNT = "WrongFieldCount"
    BAD_OP_CODE = "BadOpCode"
    BAD_DURATION = "BadDuration"
    DURATION_WITH_OFF = "DurationWithOff"
    BAD_NAME = "BadName"


class CommandParseError(ValueError):
    """A message body broke the command grammar; ``kind`` names the rule."""

    def __init__(self, kind: ParseErrorKind, detail: str) -> None:
        super().__init__(detail)
        self.kind = kind
        self.detail = detail


def parse_command(body: str) -> Command:
    """Parse a raw message body into a :class:`Command`.

    Raises :class:`CommandParseError` naming the first grammar rule the
    body breaks, checked left to right: name, op, then the duration
    field.
    """
    text = body.strip(_WS)
    if not text:
        raise CommandParseError(ParseErrorKind.EMPTY_BODY, "message body is empty")
    fields = _FIELD_SPLIT_RE.split(text)
    if len(fields) not in (2, 3):
        raise CommandParseError(
            ParseErrorKind.WRONG_FIELD_COUNT,
            f"expected 2 or 3 fields, got {len(fields)}",
        )
    name = fields[0].lower()
    if not NAME_RE.fullmatch(name):
        raise CommandParseError(
            ParseErrorKind.BAD_NAME, f"bad appliance name {fields[0]!r}"
        )
    opcode = fields[1]
    if opcode not in ("0", "1"):
        raise CommandParseError(
            ParseErrorKind.BAD_OP_CODE, f"op must be 0 or 1, got {opcode!r}"
        )
    if len(fields) == 2:
        return Command(name, TurnOn() if opcode == "1" else TurnOff())
    if opcode == "0":
        raise CommandParseError(
            ParseErrorKind.DURATION_WITH_OFF, "off takes no duration field"
        )
    raw = fields[2]
    if not _DIGITS_RE.fullmatch(raw):
        raise CommandParseError(
            ParseErrorKind.BAD_DURATION, f"duration must be decimal digits, got {raw!r}"
        )
    duration = int(raw)
    if not 1 <= duration <= MAX_DURATION_S:
        raise CommandParseError(
            ParseErrorKind.BAD_DURATION,
            f"duration must be 1..{MAX_DURATION_S} seconds, got {duration}",
        )
    return Command(name, TurnOnTimed(duration))


def render_command(cmd: Command) -> str:
    """Render a command to its canonical single-space text form.

    ``parse_command(render_command(c)) == c`` for every valid command.
    """
    if isinstance(cmd.op, TurnOnTimed):
        return f"{cmd.appliance} 1 {cmd.op.duration_s}"
    if isinstance(cmd.op, TurnOn):
        return f"{cmd.appliance} 1"
    return f"{cmd.appliance} 0"
