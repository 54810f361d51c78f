"""Serialized control core.

All mutations — gateway messages, API commands, timer expirations,
startup recovery — funnel through one lock, so they apply in arrival
order and each command is atomic.  After every transition batch the
service appends the transition events, rewrites the full relay frame
(level-triggered, even if unchanged) and replaces the state snapshot.

Storage or bus failure is fail-stop: running appliances without an
audit trail is worse than stopping, so the service refuses further
commands and the relays hold their last written frame.

Two background tasks exist once :meth:`ControlService.start` is called:
the inbox poller (sole owner of the inbox directory) and the auto-off
scheduler (wakes at the earliest pending deadline).  Tests and demos
that use a FakeClock skip ``start()`` and drive :meth:`poll_inbox_once`
and :meth:`run_due_expirations` directly.
"""

from __future__ import annotations

import logging
import os
import threading
from pathlib import Path

from . import controller, gateway, relay, store
from .clock import Clock, SystemClock
from .protocol import Command, parse_command
from .registry import MSISDN_RE, ServiceConfig
from .relay import BusBackend, BusUnavailableError
from .store import StorageFailureError

log = logging.getLogger(__name__)

EVENTS_FILE = "events.log"
SNAPSHOT_FILE = "state.snap"
TRACE_FILE = "relay.trace"

# Scheduler never sleeps longer than this, so newly armed deadlines and
# shutdown are noticed promptly even without a notify.
_MAX_SCHEDULER_NAP_S = 0.5


class ServiceHaltedError(RuntimeError):
    """Storage or bus failed earlier; the service no longer takes commands."""


class ControlService:
    def __init__(
        self,
        config: ServiceConfig,
        data_dir: str | Path,
        clock: Clock | None = None,
        backend: BusBackend | None = None,
    ) -> None:
        self.config = config
        self.registry = config.registry
        self.clock = clock or SystemClock()
        self.data_dir = Path(data_dir)
        self.inbox_dir = self.data_dir / "inbox"
        self.processed_dir = self.inbox_dir / "processed"
        self.rejected_dir = self.inbox_dir / "rejected"
        for d in (self.data_dir, self.inbox_dir, self.processed_dir, self.rejected_dir):
            d.mkdir(parents=True, exist_ok=True)

        self._lock = threading.RLock()
        self._wake = threading.Condition(self._lock)
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._halted = False
        self._closed = False
        self._sms_stamp = ""  # filename second-stamp of the last virtual SMS
        self._sms_seq = 0

        self.snapshot_path = self.data_dir / SNAPSHOT_FILE
        self.events = store.EventLog(self.data_dir / EVENTS_FILE)
        self._seen_msg_ids = {
            record["msg_id"]
            for record in store.iter_events(self.events.path)
            if "msg_id" in record
        }
        self.backend = backend or relay.TraceFileBackend(self.data_dir / TRACE_FILE)

        now = self.clock.now()
        snapshot_status = "absent"
        snapshot_table: controller.StateTable = {}
        try:
            snap = store.load_snapshot(self.snapshot_path)
            if snap is not None:
                snapshot_status = "loaded"
                snapshot_table = snap.table
        except store.CorruptSnapshotError as exc:
            snapshot_status = "corrupt"
            log.warning("starting from all-off: %s", exc)
        self.table, recovered = controller.recover(snapshot_table, self.registry, now)
        self.events.append(
            "startup", now, snapshot=snapshot_status, recovered=len(recovered)
        )
        for t in recovered:
            self._append_transition_event(t)
        # Re-assert the relay levels for whatever state survived.
        relay.write_frame(self.backend, relay.encode_frame(self.table, self.registry), now)
        store.write_snapshot(self.snapshot_path, self.table, now)

    # ------------------------------------------------------------------
    # command paths (all serialized on the one lock)

    def submit_command(self, cmd: Command, source: str) -> tuple[controller.Transition, int]:
        """Apply a parsed command; returns the transition and its event id.

        Raises UnknownDeviceError for unregistered appliances and
        ServiceHaltedError after a fatal storage/bus failure.
        """
        with self._lock:
            self._check_running()
            now = self.clock.now()
            transition = controller.apply_command(
                self.table, self.registry, cmd, now, source
            )
            event_ids = self._commit_batch([transition], now)
            return transition, event_ids[0]

    def submit_text(self, text: str, source: str) -> tuple[controller.Transition, int]:
        """Parse command text and apply it; same decision path as an SMS."""
        return self.submit_command(parse_command(text), source)

    def poll_inbox_once(self) -> int:
        """Examine every file currently in the inbox, oldest first.

        Each file yields exactly one persisted outcome: the outcome event
        is appended first, then the file moves to processed/ or
        rejected/.  A file whose id is already in the log (a move that
        failed last time, or a re-dropped duplicate) moves without a new
        outcome.  Returns the number of newly examined messages.
        """
        with self._lock:
            self._check_running()
            handled = 0
            for name in gateway.scan_inbox(self.inbox_dir):
                path = self.inbox_dir / name
                if name in self._seen_msg_ids:
                    self._move_message(path, self.processed_dir)
                    continue
                try:
                    data = path.read_bytes()
                except OSError as exc:
                    log.warning("cannot read %s, will retry: %s", path, exc)
                    continue
                self._handle_message(name, path, data)
                handled += 1
            return handled

    def _handle_message(self, name: str, path: Path, data: bytes) -> None:
        now = self.clock.now()
        try:
            msg = gateway.parse_inbox_file(name, data)
        except gateway.InboxFormatError as exc:
            self._append_event(
                "message_rejected",
                now,
                msg_id=name,
                outcome=gateway.OUTCOME_MALFORMED,
                detail=str(exc),
            )
            self._seen_msg_ids.add(name)
            self._move_message(path, self.rejected_dir)
            return

        result = gateway.ingest(msg, self.config.allowlist, self.registry)
        if result.outcome == gateway.OUTCOME_ACCEPTED:
            self._append_event(
                "message_accepted", now, msg_id=msg.id, sender=msg.sender, body=msg.body
            )
            self._seen_msg_ids.add(name)
            assert result.command is not None
            transition = controller.apply_command(
                self.table, self.registry, result.command, now, msg.id
            )
            self._commit_batch([transition], now)
            self._move_message(path, self.processed_dir)
        else:
            self._append_event(
                "message_rejected",
                now,
                msg_id=msg.id,
                sender=msg.sender,
                body=msg.body,
                outcome=result.outcome,
                detail=result.detail,
            )
            self._seen_msg_ids.add(name)
            self._move_message(path, self.rejected_dir)

    def run_due_expirations(self) -> list[controller.Transition]:
        """Switch off every timed device whose deadline has passed."""
        with self._lock:
            if self._halted:
                return []
            now = self.clock.now()
            due = controller.expire_due(self.table, now)
            if due:
                self._commit_batch(due, now)
            return due

    def write_virtual_sms(self, sender: str, body: str) -> str:
        """Materialize an inbox file as if a phone had sent the message.

        The file then flows through the exact same gateway path as one
        dropped by an SMS daemon.  Returns the assigned filename.
        """
        if not MSISDN_RE.fullmatch(sender):
            raise ValueError(f"bad sender msisdn {sender!r}")
        with self._lock:
            self._check_running()
            now = self.clock.now()
            name = self._allocate_inbox_name(now)
            content = gateway.format_inbox_file(sender, now, body)
            tmp = self.inbox_dir / f".{name}.tmp"
            tmp.write_text(content, encoding="utf-8")
            os.replace(tmp, self.inbox_dir / name)
            return name

    def _allocate_inbox_name(self, now: float) -> str:
        stamp = gateway.inbox_filename(now, 0)[:-len("_000.txt")]
        if stamp != self._sms_stamp:
            self._sms_stamp = stamp
            self._sms_seq = 0
        while self._sms_seq <= 999:
            name = gateway.inbox_filename(now, self._sms_seq)
            self._sms_seq += 1
            taken = any(
                (d / name).exists()
                for d in (self.inbox_dir, self.processed_dir, self.rejected_dir)
            )
            if not taken:
                return name
        raise RuntimeError("inbox sequence numbers exhausted for this second")

    # ------------------------------------------------------------------
    # read side

    def device_view(self) -> list[dict]:
        """Consistent per-device snapshot for the API and panel."""
        with self._lock:
            return controller.snapshot_view(self.table, self.registry, self.clock.now())

    def query_events(self, since_id: int = 0, kind: str | None = None, limit: int = 100) -> list[dict]:
        # Read-only file scan; safe alongside the writer, which appends
        # whole flushed lines.
        return store.query_events(self.events.path, since_id=since_id, kind=kind, limit=limit)

    def next_deadline(self) -> float | None:
        with self._lock:
            return controller.next_deadline(self.table)

    @property
    def halted(self) -> bool:
        return self._halted

    # ------------------------------------------------------------------
    # background tasks

    def start(self) -> None:
        """Start the inbox poller and the auto-off scheduler."""
        if self._threads:
            return
        for name, target in (
            ("homerelay-poller", self._poller_loop),
            ("homerelay-scheduler", self._scheduler_loop),
        ):
            t = threading.Thread(target=target, name=name, daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        """Stop background tasks and release file handles.

        Persists nothing: durable state is whatever the last transition
        batch flushed, which is exactly what restart recovery expects.
        """
        if self._closed:
            return
        self._stop.set()
        with self._wake:
            self._wake.notify_all()
        for t in self._threads:
            t.join(timeout=5.0)
        self._threads.clear()
        self._closed = True
        self.events.close()
        self.backend.close()

    def _poller_loop(self) -> None:
        interval = self.config.poll_ms / 1000.0
        while not self._stop.is_set():
            try:
                self.poll_inbox_once()
            except ServiceHaltedError:
                break
            except Exception:
                log.exception("inbox poll failed; retrying")
            self._stop.wait(interval)

    def _scheduler_loop(self) -> None:
        while not self._stop.is_set():
            with self._wake:
                if self._halted:
                    break
                deadline = controller.next_deadline(self.table)
                now = self.clock.now()
                if deadline is None:
                    self._wake.wait(_MAX_SCHEDULER_NAP_S)
                    continue
                if deadline > now:
                    self._wake.wait(min(deadline - now, _MAX_SCHEDULER_NAP_S))
                    continue
                try:
                    self.run_due_expirations()
                except ServiceHaltedError:
                    break

    # ------------------------------------------------------------------
    # internals

    def _check_running(self) -> None:
        if self._halted:
            raise ServiceHaltedError("service halted after a fatal failure")

    def _append_event(self, kind: str, ts: float, **fields) -> int:
        try:
            return self.events.append(kind, ts, **fields)
        except StorageFailureError as exc:
            self._fatal(str(exc))
            raise ServiceHaltedError(str(exc)) from exc

    def _commit_batch(self, transitions: list[controller.Transition], now: float) -> list[int]:
        """Persist one transition batch: events, full relay frame, snapshot."""
        try:
            event_ids = [self._append_transition_event(t) for t in transitions]
            frame = relay.encode_frame(self.table, self.registry)
            relay.write_frame(self.backend, frame, now)
            store.write_snapshot(self.snapshot_path, self.table, now)
        except (StorageFailureError, BusUnavailableError) as exc:
            self._fatal(str(exc))
            raise ServiceHaltedError(str(exc)) from exc
        self._wake.notify_all()
        return event_ids

    def _append_transition_event(self, t: controller.Transition) -> int:
        fields: dict = {
            "device": t.device,
            "from": controller.state_tag(t.from_state),
            "to": controller.state_tag(t.to_state),
        }
        wire = controller.state_to_wire(t.to_state)
        for key in ("since", "deadline", "clamped"):
            if key in wire:
                fields[key] = wire[key]
        fields["cause"] = t.cause
        if t.source is not None:
            fields["source"] = t.source
        return self.events.append("transition", t.at, **fields)

    def _fatal(self, reason: str) -> None:
        self._halted = True
        log.error("fatal: %s; refusing further commands", reason)
        try:
            self.events.append("fatal", self.clock.now(), reason=reason)
        except StorageFailureError:  # the log itself may be what failed
            log.error("could not record fatal event")

    def _move_message(self, path: Path, dest_dir: Path) -> None:
        try:
            os.replace(path, dest_dir / path.name)
        except OSError as exc:
            # Leave the file for the next poll; its id is already logged,
            # so re-examining it cannot produce a second outcome.
            log.warning("cannot move %s to %s: %s", path, dest_dir, exc)
