"""Appliance registry and service configuration.

Config file: UTF-8, one directive per line, ``#`` starts a comment.

    device <name> line=<0..7> policy=indefinite|max:<seconds>
    allow <msisdn>          # sender allowlist, one per line
    token <string>          # API auth token
    poll_ms <integer>       # inbox poll cadence, default 500

``device`` maps an appliance to one of the eight relay lines and fixes
its safety policy: ``indefinite`` devices stay on until commanded off,
``max:<seconds>`` devices are forcibly switched off after at most that
many seconds per run.  At most four devices may be declared; names and
lines must each be unique.  Unknown directives are errors, not warnings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .protocol import MAX_DURATION_S, NAME_RE

MAX_DEVICES = 4
RELAY_LINE_COUNT = 8
DEFAULT_POLL_MS = 500

# International subscriber number: '+' followed by 7..15 digits.
MSISDN_RE = re.compile(r"\+[0-9]{7,15}\Z")

_INT_RE = re.compile(r"[0-9]+\Z")


class ConfigError(ValueError):
    def __init__(self, kind: str, detail: str, line_no: int | None = None) -> None:
        where = f"config line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{detail}")
        self.kind = kind
        self.detail = detail
        self.line_no = line_no


class UnknownDeviceError(LookupError):
    def __init__(self, name: str) -> None:
        super().__init__(f"no device named {name!r}")
        self.name = name


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    line: int  # relay line index, 0..7
    max_on_s: int | None = None  # None: stays on until commanded off

    @property
    def indefinite(self) -> bool:
        return self.max_on_s is None


@dataclass(frozen=True)
class Registry:
    """Ordered, validated set of controllable devices (1..4)."""

    devices: tuple[DeviceSpec, ...]

    def __iter__(self):
        return iter(self.devices)

    def __len__(self) -> int:
        return len(self.devices)

    def names(self) -> list[str]:
        return [d.name for d in self.devices]

    def get(self, name: str) -> DeviceSpec | None:
        for d in self.devices:
            if d.name == name:
                return d
        return None


def resolve_device(registry: Registry, name: str) -> DeviceSpec:
    """Look up an already-canonicalized name; raises UnknownDeviceError."""
    spec = registry.get(name)
    if spec is None:
        raise UnknownDeviceError(name)
    return spec


@dataclass(frozen=True)
class ServiceConfig:
    registry: Registry
    allowlist: frozenset[str]
    token: str | None
    poll_ms: int


def parse_config(text: str) -> ServiceConfig:
    """Parse a full config file; raises ConfigError on the first bad line."""
    devices: list[DeviceSpec] = []
    allowlist: set[str] = set()
    token: str | None = None
    poll_ms: int | None = None

    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        directive = parts[0]

        if directive == "device":
            devices.append(_parse_device(parts, line_no, devices))
        elif directive == "allow":
            if len(parts) != 2:
                raise ConfigError("SyntaxError", "allow takes one msisdn", line_no)
            if not MSISDN_RE.fullmatch(parts[1]):
                raise ConfigError(
                    "SyntaxError", f"bad msisdn {parts[1]!r} (want +<7..15 digits>)", line_no
                )
            allowlist.add(parts[1])
        elif directive == "token":
            if len(parts) != 2:
                raise ConfigError("SyntaxError", "token takes one value", line_no)
            if token is not None:
                raise ConfigError("SyntaxError", "duplicate token directive", line_no)
            token = parts[1]
        elif directive == "poll_ms":
            if len(parts) != 2 or not _INT_RE.fullmatch(parts[1]) or int(parts[1]) < 1:
                raise ConfigError(
                    "SyntaxError", "poll_ms takes one positive integer", line_no
                )
            if poll_ms is not None:
                raise ConfigError("SyntaxError", "duplicate poll_ms directive", line_no)
            poll_ms = int(parts[1])
        else:
            raise ConfigError("SyntaxError", f"unknown directive {directive!r}", line_no)

    if not devices:
        raise ConfigError("NoDevices", "config declares no devices")

    return ServiceConfig(
        registry=Registry(tuple(devices)),
        allowlist=frozenset(allowlist),
        token=token,
        poll_ms=poll_ms if poll_ms is not None else DEFAULT_POLL_MS,
    )


def parse_registry_config(text: str) -> Registry:
    """Parse a config file and return just the device registry."""
    return parse_config(text).registry


def _parse_device(parts: list[str], line_no: int, seen: list[DeviceSpec]) -> DeviceSpec:
    if len(parts) != 4:
        raise ConfigError(
            "SyntaxError", "want: device <name> line=<0..7> policy=<policy>", line_no
        )
    name = parts[1].lower()
    if not NAME_RE.fullmatch(name):
        raise ConfigError("SyntaxError", f"bad device name {parts[1]!r}", line_no)

    if not parts[2].startswith("line="):
        raise ConfigError("SyntaxError", "second field must be line=<0..7>", line_no)
    raw_line = parts[2][len("line="):]
    if not _INT_RE.fullmatch(raw_line) or not 0 <= int(raw_line) < RELAY_LINE_COUNT:
        raise ConfigError(
            "BadLine", f"relay line must be 0..{RELAY_LINE_COUNT - 1}, got {raw_line!r}", line_no
        )
    line_idx = int(raw_line)

    if not parts[3].startswith("policy="):
        raise ConfigError("SyntaxError", "third field must be policy=<policy>", line_no)
    raw_policy = parts[3][len("policy="):]
    if raw_policy == "indefinite":
        max_on_s = None
    elif raw_policy.startswith("max:"):
        raw_secs = raw_policy[len("max:"):]
        if not _INT_RE.fullmatch(raw_secs) or not 1 <= int(raw_secs) <= MAX_DURATION_S:
            raise ConfigError(
                "BadPolicy",
                f"max policy wants 1..{MAX_DURATION_S} seconds, got {raw_secs!r}",
                line_no,
            )
        max_on_s = int(raw_secs)
    else:
        raise ConfigError(
            "BadPolicy", f"policy must be indefinite or max:<seconds>, got {raw_policy!r}", line_no
        )

    if any(d.name == name for d in seen):
        raise ConfigError("DuplicateName", f"device {name!r} declared twice", line_no)
    if any(d.line == line_idx for d in seen):
        raise ConfigError("DuplicateLine", f"relay line {line_idx} mapped twice", line_no)
    if len(seen) >= MAX_DEVICES:
        raise ConfigError(
            "TooManyDevices", f"at most {MAX_DEVICES} devices are supported", line_no
        )
    return DeviceSpec(name=name, line=line_idx, max_on_s=max_on_s)
