"""homerelay: drive home appliances with short text commands.

Messages like ``cooker 1 1800`` arrive through a file-drop inbox or the
HTTP API, are screened against a sender allowlist and a device registry,
and are applied by a serialized controller that enforces per-device
safety time limits and fires automatic switch-offs.  Every change is
mirrored bit-exactly onto a simulated 8-line relay bus and into an
append-only event log with snapshot recovery.
"""

from .clock import Clock, FakeClock, SystemClock
from .protocol import (
    Command,
    CommandParseError,
    ParseErrorKind,
    TurnOff,
    TurnOn,
    TurnOnTimed,
    parse_command,
    render_command,
)
from .registry import (
    ConfigError,
    DeviceSpec,
    Registry,
    ServiceConfig,
    UnknownDeviceError,
    parse_config,
    parse_registry_config,
    resolve_device,
)
from .service import ControlService, ServiceHaltedError

__version__ = "0.1.0"

__all__ = [
    "Clock",
    "Command",
    "CommandParseError",
    "ConfigError",
    "ControlService",
    "DeviceSpec",
    "FakeClock",
    "ParseErrorKind",
    "Registry",
    "ServiceConfig",
    "ServiceHaltedError",
    "SystemClock",
    "TurnOff",
    "TurnOn",
    "TurnOnTimed",
    "UnknownDeviceError",
    "parse_command",
    "parse_config",
    "parse_registry_config",
    "render_command",
    "resolve_device",
]
