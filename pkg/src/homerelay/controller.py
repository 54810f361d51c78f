"""Device state machine with timed auto-off.

Each registered device is Off, On (until commanded off), or OnTimed
(off automatically at an absolute deadline).  One command touches
exactly one device; other devices keep running untouched, so a timed
cooker can count down while the AC is switched on and off around it.

Safety policies are enforced here, not trusted from the message: a
device with ``max_on_s`` set is never in plain On state.  A bare "on"
arms it for its full limit, and a timed request longer than the limit is
clamped down to it (recorded via the ``clamped`` flag rather than
rejected, since there is no reply channel to report an error on).

Repeated on-commands re-arm: ``since`` keeps the original switch-on
time, the deadline is recomputed from the latest command.  Deadlines are
absolute timestamps, which makes persistence and restart recovery
trivial, and expiry is inclusive: a device armed for 1800 s at t=0
switches off exactly at t=1800.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .protocol import Command, TurnOff, TurnOn, TurnOnTimed
from .registry import Registry, resolve_device

log = logging.getLogger(__name__)

CAUSE_COMMAND = "command"
CAUSE_AUTO_OFF = "auto_off"
CAUSE_STARTUP_RECOVERY = "startup_recovery"


@dataclass(frozen=True)
class Off:
    pass


@dataclass(frozen=True)
class On:
    since: float


@dataclass(frozen=True)
class OnTimed:
    since: float
    deadline: float
    clamped: bool = False


DeviceState = Off | On | OnTimed
OFF = Off()

# Maps registered device name -> DeviceState, in registry order.
StateTable = dict[str, DeviceState]


def is_on(state: DeviceState) -> bool:
    return not isinstance(state, Off)


def state_tag(state: DeviceState) -> str:
    if isinstance(state, On):
        return "on"
    if isinstance(state, OnTimed):
        return "on_timed"
    return "off"


def state_to_wire(state: DeviceState) -> dict:
    """Flatten a state for JSON records (snapshot, events, API)."""
    if isinstance(state, On):
        return {"state": "on", "since": state.since}
    if isinstance(state, OnTimed):
        return {
            "state": "on_timed",
            "since": state.since,
            "deadline": state.deadline,
            "clamped": state.clamped,
        }
    return {"state": "off"}


def state_from_wire(fields: dict) -> DeviceState:
    tag = fields.get("state")
    if tag == "off":
        return OFF
    if tag == "on":
        return On(since=float(fields["since"]))
    if tag == "on_timed":
        return OnTimed(
            since=float(fields["since"]),
            deadline=float(fields["deadline"]),
            clamped=bool(fields.get("clamped", False)),
        )
    raise ValueError(f"unknown state tag {tag!r}")


@dataclass(frozen=True)
class Transition:
    """One state change. from_state == to_state only for idempotent
    no-op commands (e.g. switching off a device that is already off)."""

    device: str
    from_state: DeviceState
    to_state: DeviceState
    cause: str  # CAUSE_COMMAND | CAUSE_AUTO_OFF | CAUSE_STARTUP_RECOVERY
    at: float
    source: str | None = None  # message id / "api" for CAUSE_COMMAND


def new_table(registry: Registry) -> StateTable:
    return {spec.name: OFF for spec in registry}


def apply_command(
    table: StateTable,
    registry: Registry,
    cmd: Command,
    now: float,
    source: str | None = None,
) -> Transition:
    """Apply one parsed command to its device; mutates ``table``.

    Raises UnknownDeviceError for unregistered names and ValueError if
    the table does not cover the registry (a programming error).
    """
    spec = resolve_device(registry, cmd.appliance)
    if spec.name not in table:
        raise ValueError(f"state table is missing registered device {spec.name!r}")
    old = table[spec.name]
    since = old.since if isinstance(old, (On, OnTimed)) else now

    if isinstance(cmd.op, TurnOff):
        new: DeviceState = OFF
    elif isinstance(cmd.op, TurnOn):
        if spec.max_on_s is None:
            new = On(since=since)
        else:
            # Safety limit imposed: a bare "on" runs for the full cap.
            new = OnTimed(since=since, deadline=now + spec.max_on_s, clamped=True)
    else:
        wanted = cmd.op.duration_s
        if spec.max_on_s is None:
            new = OnTimed(since=since, deadline=now + wanted, clamped=False)
        else:
            granted = min(wanted, spec.max_on_s)
            new = OnTimed(since=since, deadline=now + granted, clamped=wanted > spec.max_on_s)

    table[spec.name] = new
    return Transition(spec.name, old, new, CAUSE_COMMAND, now, source)


def expire_due(table: StateTable, now: float) -> list[Transition]:
    """Switch off every timed device whose deadline has passed (inclusive).

    Returns transitions in table (= registry) order; untouched devices
    keep their state.
    """
    out: list[Transition] = []
    for name, state in table.items():
        if isinstance(state, OnTimed) and state.deadline <= now:
            table[name] = OFF
            out.append(Transition(name, state, OFF, CAUSE_AUTO_OFF, now))
    return out


def next_deadline(table: StateTable) -> float | None:
    deadlines = [s.deadline for s in table.values() if isinstance(s, OnTimed)]
    return min(deadlines) if deadlines else None


def recover(
    snapshot_table: StateTable, registry: Registry, now: float
) -> tuple[StateTable, list[Transition]]:
    """Rebuild the runtime table from a persisted snapshot after restart.

    Devices no longer registered are dropped; newly registered devices
    start Off.  Timed runs whose deadline passed while the service was
    down are switched off with cause ``startup_recovery``; surviving
    deadlines are kept as-is (they are absolute).  A plain-On entry for
    a device that now carries a max-on policy is re-armed to the policy
    limit so the safety ceiling holds across config changes.
    """
    table = new_table(registry)
    for name in snapshot_table:
        if name not in table:
            log.warning("dropping snapshot state for unregistered device %r", name)
    transitions: list[Transition] = []
    for spec in registry:
        state = snapshot_table.get(spec.name)
        if state is None or isinstance(state, Off):
            continue
        if isinstance(state, On) and spec.max_on_s is not None:
            rearmed = OnTimed(state.since, now + spec.max_on_s, clamped=True)
            table[spec.name] = rearmed
            transitions.append(
                Transition(spec.name, state, rearmed, CAUSE_STARTUP_RECOVERY, now)
            )
            continue
        table[spec.name] = state
    for t in expire_due(table, now):
        transitions.append(
            Transition(t.device, t.from_state, t.to_state, CAUSE_STARTUP_RECOVERY, now)
        )
    return table, transitions


def snapshot_view(table: StateTable, registry: Registry, now: float) -> list[dict]:
    """Per-device view for the API and panel, in registry order.

    ``remaining_s`` is present only for timed runs: seconds left until
    auto-off, floored at zero.
    """
    view = []
    for spec in registry:
        state = table[spec.name]
        entry = {"name": spec.name, "line": spec.line}
        entry.update(state_to_wire(state))
        if isinstance(state, OnTimed):
            entry["remaining_s"] = max(0.0, state.deadline - now)
        view.append(entry)
    return view
