import random

import pytest

from homerelay.clock import FakeClock
from homerelay.controller import OFF, OnTimed, state_from_wire
from homerelay.protocol import CommandParseError, parse_command
from homerelay.registry import UnknownDeviceError, parse_config
from homerelay.relay import read_trace
from homerelay.service import ControlService, ServiceHaltedError

from conftest import ALLOWED_SENDER, BASE_CONFIG
from helpers import drop_inbox_file, fold_frame_oracle


def trace_records(svc):
    return read_trace((svc.data_dir / "relay.trace").read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# end-to-end command flow

def test_startup_writes_event_and_frame(service):
    events = service.query_events()
    assert len(events) == 1
    assert events[0]["kind"] == "startup"
    assert events[0]["event_id"] == 1
    assert trace_records(service) == [(0, 0x00)]


def test_inbox_file_drives_relay_and_log(service, fake_clock):
    drop_inbox_file(service.inbox_dir, "IN19700101_000000_000.txt", body="Cooker 1 1800")
    assert service.poll_inbox_once() == 1
    assert service.table["cooker"] == OnTimed(0.0, 1800.0)
    assert trace_records(service)[-1] == (0, 0x02)  # cooker on line 1

    fake_clock.set(1800.0)
    done = service.run_due_expirations()
    assert [t.device for t in done] == ["cooker"]
    assert trace_records(service)[-1] == (1800, 0x00)

    kinds = [e["kind"] for e in service.query_events()]
    assert kinds == ["startup", "message_accepted", "transition", "transition"]


def test_noop_off_still_writes_a_frame(service):
    before = len(trace_records(service))
    service.submit_text("ac 0", source="api")
    records = trace_records(service)
    assert len(records) == before + 1  # level-triggered: batch => frame
    assert records[-1][1] == 0x00


def test_submit_text_raises_on_grammar_and_unknown_device(service):
    with pytest.raises(CommandParseError):
        service.submit_text("ac 5", source="api")
    with pytest.raises(UnknownDeviceError):
        service.submit_text("fridge 1", source="api")
    # neither left a transition behind
    assert all(e["kind"] != "transition" for e in service.query_events())


def test_expiry_before_deadline_is_a_noop(service, fake_clock):
    service.submit_text("cooker 1 1800", source="api")
    fake_clock.set(1799.0)
    assert service.run_due_expirations() == []
    assert service.table["cooker"] != OFF


def test_virtual_sms_flows_through_gateway(service):
    name = service.write_virtual_sms(ALLOWED_SENDER, "AC 1")
    assert (service.inbox_dir / name).exists()
    service.poll_inbox_once()
    assert not (service.inbox_dir / name).exists()
    assert (service.processed_dir / name).exists()
    events = service.query_events()
    assert events[1]["kind"] == "message_accepted"
    assert events[1]["body"] == "AC 1"
    assert service.table["ac"] != OFF


def test_virtual_sms_from_unlisted_sender_is_logged_rejection(service):
    name = service.write_virtual_sms("+15550000001", "AC 1")
    service.poll_inbox_once()
    assert (service.rejected_dir / name).exists()
    ev = service.query_events()[-1]
    assert ev["kind"] == "message_rejected"
    assert ev["outcome"] == "RejectedUnauthorized"
    assert service.table["ac"] == OFF


def test_virtual_sms_rejects_bad_msisdn(service):
    with pytest.raises(ValueError):
        service.write_virtual_sms("12345", "ac 1")


def test_virtual_sms_filenames_ascend_within_one_second(service):
    names = [service.write_virtual_sms(ALLOWED_SENDER, "ac 1") for _ in range(5)]
    assert names == sorted(names)
    assert len(set(names)) == 5


def test_malformed_inbox_file_rejected_and_moved(service):
    bad = service.inbox_dir / "IN19700101_000000_007.txt"
    bad.write_text("no headers at all\n", encoding="utf-8")
    service.poll_inbox_once()
    assert (service.rejected_dir / bad.name).exists()
    ev = service.query_events()[-1]
    assert ev["outcome"] == "RejectedMalformed"


# ---------------------------------------------------------------------------
# exactly-once ingestion

def test_each_file_yields_one_outcome_and_one_move(service):
    for seq in range(20):
        drop_inbox_file(
            service.inbox_dir, f"IN19700101_000000_{seq:03d}.txt", body="ac 1"
        )
    service.poll_inbox_once()
    msg_events = [e for e in service.query_events(limit=1000) if e["kind"].startswith("message_")]
    assert len(msg_events) == 20
    assert len(list(service.processed_dir.iterdir())) == 20
    assert list(service.inbox_dir.glob("*.txt")) == []

    # re-polling with an empty inbox does nothing
    assert service.poll_inbox_once() == 0

    # re-dropping already-processed ids yields zero new outcomes
    for path in list(service.processed_dir.iterdir()):
        path.rename(service.inbox_dir / path.name)
    assert service.poll_inbox_once() == 0
    msg_events_after = [
        e for e in service.query_events(limit=1000) if e["kind"].startswith("message_")
    ]
    assert len(msg_events_after) == 20
    assert len(list(service.processed_dir.iterdir())) == 20


def test_outcomes_persisted_in_filename_order(service):
    for seq in (3, 1, 2):
        drop_inbox_file(
            service.inbox_dir, f"IN19700101_000000_{seq:03d}.txt", body="ac 1"
        )
    service.poll_inbox_once()
    ids = [
        e["msg_id"]
        for e in service.query_events(limit=100)
        if e["kind"] == "message_accepted"
    ]
    assert ids == sorted(ids)


# ---------------------------------------------------------------------------
# frame faithfulness under random schedules

def test_trace_tracks_table_over_random_schedule(tmp_path):
    config = parse_config(BASE_CONFIG)
    clock = FakeClock(0.0)
    svc = ControlService(config, tmp_path / "data", clock=clock)
    rng = random.Random(0xBEE)
    names = config.registry.names()
    for _ in range(300):
        clock.advance(rng.random() * 30)
        roll = rng.random()
        try:
            if roll < 0.7:
                name = rng.choice(names)
                op = rng.choice(["0", "1", f"1 {rng.randint(1, 100)}"])
                svc.submit_text(f"{name} {op}", source="api")
            else:
                svc.run_due_expirations()
        except CommandParseError:  # pragma: no cover
            pytest.fail("generated command failed to parse")
        assert trace_records(svc)[-1][1] == fold_frame_oracle(svc.device_view())
    stamps = [ts for ts, _ in trace_records(svc)]
    assert stamps == sorted(stamps)  # trace timestamps are monotone
    svc.stop()


def test_event_ids_totally_ordered(service, fake_clock):
    rng = random.Random(1)
    for _ in range(50):
        fake_clock.advance(rng.random())
        service.submit_text(f"ac {rng.choice(['0', '1'])}", source="api")
    ids = [e["event_id"] for e in service.query_events(limit=1000)]
    assert ids == sorted(ids) == list(range(1, len(ids) + 1))


def test_replaying_transition_log_reproduces_snapshot_table(service, fake_clock):
    rng = random.Random(2)
    for _ in range(100):
        fake_clock.advance(rng.random() * 40)
        name = rng.choice(service.registry.names())
        op = rng.choice(["0", "1", f"1 {rng.randint(1, 50)}"])
        service.submit_text(f"{name} {op}", source="api")
        if rng.random() < 0.3:
            service.run_due_expirations()
    replayed = {name: OFF for name in service.registry.names()}
    for ev in service.query_events(kind="transition", limit=10000):
        replayed[ev["device"]] = state_from_wire(
            {k: ev[k] for k in ("state", "since", "deadline", "clamped") if k in ev}
            | {"state": ev["to"]}
        )
    from homerelay.store import load_snapshot

    assert load_snapshot(service.snapshot_path).table == replayed


# ---------------------------------------------------------------------------
# crash recovery

def make_service(tmp_path, start_at, poll_ms=50):
    config = parse_config(BASE_CONFIG.replace("poll_ms 50", f"poll_ms {poll_ms}"))
    clock = FakeClock(start_at)
    return ControlService(config, tmp_path / "data", clock=clock), clock


def test_restart_preserves_pending_deadline(tmp_path):
    svc1, clock1 = make_service(tmp_path, 0.0)
    svc1.submit_text("cooker 1 30", source="api")
    clock1.set(20.0)  # 10 s remaining at the crash
    svc1.stop()

    svc2, clock2 = make_service(tmp_path, 23.0)
    assert svc2.table["cooker"] == OnTimed(0.0, 30.0)
    view = svc2.device_view()
    cooker = next(e for e in view if e["name"] == "cooker")
    assert cooker["remaining_s"] == 7.0
    # the startup frame re-asserts the level
    assert trace_records(svc2)[-1] == (23, 0x02)

    clock2.set(30.0)
    done = svc2.run_due_expirations()
    assert [t.device for t in done] == ["cooker"]
    assert trace_records(svc2)[-1] == (30, 0x00)
    svc2.stop()


def test_restart_after_missed_deadline_recovers_off(tmp_path):
    svc1, clock1 = make_service(tmp_path, 0.0)
    svc1.submit_text("cooker 1 30", source="api")
    records_before = len(trace_records(svc1))
    svc1.stop()

    svc2, _ = make_service(tmp_path, 40.0)
    assert svc2.table["cooker"] == OFF
    recovery = [
        e
        for e in svc2.query_events(limit=100)
        if e["kind"] == "transition" and e["cause"] == "startup_recovery"
    ]
    assert len(recovery) == 1 and recovery[0]["device"] == "cooker"
    # first frame written after restart clears the bit
    assert trace_records(svc2)[records_before] == (40, 0x00)
    svc2.stop()


def test_corrupt_snapshot_starts_all_off(tmp_path):
    svc1, _ = make_service(tmp_path, 0.0)
    svc1.submit_text("ac 1", source="api")
    svc1.stop()
    (tmp_path / "data" / "state.snap").write_text("}{ not json", encoding="utf-8")
    svc2, _ = make_service(tmp_path, 10.0)
    assert svc2.table["ac"] == OFF
    startups = [e for e in svc2.query_events(limit=100) if e["kind"] == "startup"]
    assert startups[-1]["snapshot"] == "corrupt"
    svc2.stop()


# ---------------------------------------------------------------------------
# fail-stop

def test_bus_failure_halts_command_processing(service):
    service.backend._fh.close()  # make the trace unwritable
    with pytest.raises(ServiceHaltedError):
        service.submit_text("ac 1", source="api")
    assert service.halted
    with pytest.raises(ServiceHaltedError):
        service.submit_text("ac 0", source="api")
    kinds = [e["kind"] for e in service.query_events(limit=100)]
    assert "fatal" in kinds


# ---------------------------------------------------------------------------
# live threads (real clock)

def test_background_threads_poll_and_expire(tmp_path):
    config = parse_config(BASE_CONFIG.replace("poll_ms 50", "poll_ms 10"))
    svc = ControlService(config, tmp_path / "data")  # real clock
    svc.start()
    try:
        svc.write_virtual_sms(ALLOWED_SENDER, "ac 1 1")
        from helpers import wait_until

        assert wait_until(lambda: svc.table["ac"] != OFF, timeout=3.0)
        assert wait_until(lambda: svc.table["ac"] == OFF, timeout=3.0)
        causes = [
            e.get("cause") for e in svc.query_events(limit=100) if e["kind"] == "transition"
        ]
        assert causes == ["command", "auto_off"]
    finally:
        svc.stop()
