"""Shared fixtures plus a summary hook that prints one PASS/FAIL line
per acceptance criterion at the end of the run."""

import threading

import pytest

from homerelay.api import ApiServer
from homerelay.clock import FakeClock
from homerelay.registry import parse_config
from homerelay.service import ControlService

ALLOWED_SENDER = "+2348012345678"
TOKEN = "testtoken"

BASE_CONFIG = f"""\
device ac line=0 policy=indefinite
device cooker line=1 policy=max:1800
device heater line=2 policy=max:7200
device washer line=3 policy=indefinite
allow {ALLOWED_SENDER}
token {TOKEN}
poll_ms 50
"""


@pytest.fixture
def config():
    return parse_config(BASE_CONFIG)


@pytest.fixture
def registry(config):
    return config.registry


@pytest.fixture
def fake_clock():
    return FakeClock(0.0)


@pytest.fixture
def service(tmp_path, config, fake_clock):
    svc = ControlService(config, tmp_path / "data", clock=fake_clock)
    yield svc
    svc.stop()


@pytest.fixture
def http_server(service, config):
    server = ApiServer(("127.0.0.1", 0), service, config.token)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance_outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[nodeid]
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{label}  {nodeid.split('::')[-1]}")
