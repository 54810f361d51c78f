"""Test utilities: config builders, inbox-file writers, random command
generators and the independent frame-fold oracle."""

import random
import time
from pathlib import Path

from homerelay.protocol import Command, TurnOff, TurnOn, TurnOnTimed

NAME_FIRST = "abcdefghijklmnopqrstuvwxyz"
NAME_REST = NAME_FIRST + "0123456789_"


def make_config(devices=None, allow=("+2348012345678",), token="testtoken", poll_ms=50):
    lines = []
    for device in devices or [
        "device ac line=0 policy=indefinite",
        "device cooker line=1 policy=max:1800",
    ]:
        lines.append(device)
    for msisdn in allow:
        lines.append(f"allow {msisdn}")
    if token is not None:
        lines.append(f"token {token}")
    if poll_ms is not None:
        lines.append(f"poll_ms {poll_ms}")
    return "\n".join(lines) + "\n"


def drop_inbox_file(
    inbox: Path,
    name: str,
    sender: str = "+2348012345678",
    received: str = "1970-01-01T00:00:00Z",
    body: str = "ac 1",
) -> Path:
    path = inbox / name
    path.write_text(f"From: {sender}\nReceived: {received}\n\n{body}\n", encoding="utf-8")
    return path


def random_name(rng: random.Random, max_len: int = 32) -> str:
    length = rng.randint(1, max_len)
    return rng.choice(NAME_FIRST) + "".join(
        rng.choice(NAME_REST) for _ in range(length - 1)
    )


def random_command(rng: random.Random, name: str | None = None) -> Command:
    appliance = name if name is not None else random_name(rng)
    pick = rng.randrange(3)
    if pick == 0:
        return Command(appliance, TurnOn())
    if pick == 1:
        return Command(appliance, TurnOff())
    return Command(appliance, TurnOnTimed(rng.randint(1, 86400)))


def fold_frame_oracle(view: list[dict]) -> int:
    """Independent fold over a device view: OR of 1<<line per on device."""
    frame = 0
    for entry in view:
        if entry["state"] != "off":
            frame |= 1 << entry["line"]
    return frame


def wait_until(predicate, timeout: float = 5.0, interval: float = 0.005) -> bool:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return predicate()
