#!/usr/bin/env python3
"""A tour of the command language.

Run: python demos/grammar_tour.py
"""

from homerelay import CommandParseError, parse_command, render_command

ACCEPTED = [
    "AC 1",
    "ac 0",
    "Cooker 1 1800",
    "  heater \t 1   60  ",
    "washer_2 1 86400",
]

REJECTED = [
    "",
    "ac",
    "ac 1 1800 extra",
    "ac 2",
    "ac 1 0",
    "ac 1 86401",
    "cooker 0 1800",
    "9lives 1",
]


def main() -> None:
    print("accepted bodies")
    print("---------------")
    for body in ACCEPTED:
        cmd = parse_command(body)
        print(f"{body!r:28} -> {cmd}")
        print(f"{'':28}    canonical: {render_command(cmd)!r}")

    print()
    print("rejected bodies")
    print("---------------")
    for body in REJECTED:
        try:
            parse_command(body)
        except CommandParseError as exc:
            print(f"{body!r:28} -> {exc.kind.value}: {exc.detail}")

    print()
    print("round trip: parse(render(c)) == c for every valid command;")
    print("case does not matter, so a phone can shout AC 1 or whisper ac 1.")


if __name__ == "__main__":
    main()
