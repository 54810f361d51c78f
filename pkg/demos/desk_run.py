#!/usr/bin/env python3
"""The whole pipeline at desk scale, on a fake clock.

A message starts the cooker for 30 minutes, the AC is switched on over
the API path, the clock jumps to the deadline, auto-off fires, then the
service is "killed" and restarted to show snapshot recovery.  The relay
trace and event log are printed at the end.

Run: python demos/desk_run.py
"""

import tempfile
from pathlib import Path

from homerelay import ControlService, FakeClock, parse_config

CONFIG = """\
device ac     line=0 policy=indefinite
device cooker line=1 policy=max:1800
allow +2348012345678
token demo
poll_ms 100
"""


def show_devices(svc: ControlService) -> None:
    for entry in svc.device_view():
        extra = ""
        if "remaining_s" in entry:
            extra = f" ({entry['remaining_s']:.0f} s left"
            extra += ", clamped)" if entry.get("clamped") else ")"
        print(f"    {entry['name']:8} line {entry['line']}  {entry['state']}{extra}")


def main() -> None:
    config = parse_config(CONFIG)
    with tempfile.TemporaryDirectory() as d:
        data_dir = Path(d)
        clock = FakeClock(0.0)
        svc = ControlService(config, data_dir, clock=clock)

        print("== t=0: an SMS lands in the inbox: 'Cooker 1 1800'")
        (svc.inbox_dir / "IN19700101_000000_000.txt").write_text(
            "From: +2348012345678\nReceived: 1970-01-01T00:00:00Z\n\nCooker 1 1800\n",
            encoding="utf-8",
        )
        svc.poll_inbox_once()
        show_devices(svc)

        print("== t=60: the API switches the AC on ('ac 1')")
        clock.set(60.0)
        svc.submit_text("ac 1", source="api")
        show_devices(svc)

        print("== t=900: halfway through the cooker's half hour")
        clock.set(900.0)
        show_devices(svc)

        print("== t=1800: the deadline passes; auto-off fires")
        clock.set(1800.0)
        for t in svc.run_due_expirations():
            print(f"    auto-off: {t.device}")
        show_devices(svc)

        print("== t=1900: service killed and restarted; the AC survives")
        clock.set(1900.0)
        svc.stop()
        svc = ControlService(config, data_dir, clock=FakeClock(1900.0))
        show_devices(svc)
        svc.stop()

        print()
        print("relay trace (bit 0 = ac, bit 1 = cooker):")
        for line in (data_dir / "relay.trace").read_text().splitlines():
            print(f"    {line}")

        print()
        print("event log:")
        import json

        for line in (data_dir / "events.log").read_text().splitlines():
            record = json.loads(line)
            rest = {
                k: v
                for k, v in record.items()
                if k not in ("event_id", "ts", "kind")
            }
            print(f"    #{record['event_id']:<3} t={record['ts']:<7.0f} {record['kind']:18} {rest}")


if __name__ == "__main__":
    main()
