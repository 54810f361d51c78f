"""HTTP surface and service entry point.

Endpoints (JSON bodies; auth header ``X-Auth-Token: <token>`` on all):

    GET  /devices                     current per-device state
    POST /commands                    {"text": "<command body>"}
    POST /virtual-sms                 {"sender": "+...", "body": "..."}
    GET  /messages?since_id=&limit=   event history

The control panel's static assets are served at ``/`` without auth (the
panel asks for the token at login and sends it per request).  Every
non-2xx response body carries a machine-readable ``error`` kind.
"""

from __future__ import annotations

import argparse
import hmac
import json
import logging
import mimetypes
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .registry import MSISDN_RE, UnknownDeviceError, parse_config
from .protocol import CommandParseError
from .service import ControlService, ServiceHaltedError

log = logging.getLogger(__name__)

STATIC_DIR = Path(__file__).parent / "static"


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: tuple[str, int],
        service: ControlService,
        token: str,
        static_dir: Path = STATIC_DIR,
    ) -> None:
        if not token:
            raise ValueError("auth token must be non-empty")
        super().__init__(address, ApiHandler)
        self.service = service
        self.token = token
        self.static_dir = static_dir


class ApiHandler(BaseHTTPRequestHandler):
    server: ApiServer
    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args) -> None:
        log.debug("%s %s", self.address_string(), format % args)

    # -- helpers -------------------------------------------------------

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)
        self.close_connection = True

    def _authorized(self) -> bool:
        supplied = self.headers.get("X-Auth-Token", "")
        return hmac.compare_digest(supplied, self.server.token)

    def _read_json_body(self) -> dict | None:
        """Drain and parse the request body; None (plus a 400) if bad."""
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length > 0 else b""
            payload = json.loads(raw.decode("utf-8")) if raw else None
        except (ValueError, UnicodeDecodeError):
            payload = None
        if not isinstance(payload, dict):
            self._reply(400, {"error": "BadRequest"})
            return None
        return payload

    # -- routes --------------------------------------------------------

    def do_GET(self) -> None:
        try:
            self._route_get()
        except ServiceHaltedError:
            self._reply(503, {"error": "Fatal"})
        except Exception:
            log.exception("GET %s failed", self.path)
            self._reply(500, {"error": "Internal"})

    def do_POST(self) -> None:
        try:
            self._route_post()
        except Exception:
            log.exception("POST %s failed", self.path)
            self._reply(500, {"error": "Internal"})

    def do_PUT(self) -> None:
        self._read_json_body_silent()
        self._reply(405, {"error": "MethodNotAllowed"})

    do_DELETE = do_PATCH = do_PUT

    def _route_get(self) -> None:
        url = urlparse(self.path)
        if url.path == "/devices":
            if not self._authorized():
                self._reply(401, {"error": "Unauthorized"})
                return
            self._reply(
                200,
                {
                    "devices": self.server.service.device_view(),
                    "server_time": self.server.service.clock.now(),
                },
            )
        elif url.path == "/messages":
            if not self._authorized():
                self._reply(401, {"error": "Unauthorized"})
                return
            try:
                params = parse_qs(url.query)
                since_id = int(params.get("since_id", ["0"])[0])
                limit = int(params.get("limit", ["100"])[0])
            except ValueError:
                self._reply(400, {"error": "BadRequest"})
                return
            if limit < 1 or limit > 1000:
                self._reply(400, {"error": "BadRequest"})
                return
            events = self.server.service.query_events(since_id=since_id, limit=limit)
            self._reply(200, {"events": events})
        else:
            self._serve_static(url.path)

    def _route_post(self) -> None:
        url = urlparse(self.path)
        if url.path not in ("/commands", "/virtual-sms"):
            # Drain the body so the connection can be answered cleanly.
            self._read_json_body_silent()
            self._reply(404, {"error": "NotFound"})
            return
        if not self._authorized():
            self._read_json_body_silent()
            self._reply(401, {"error": "Unauthorized"})
            return
        payload = self._read_json_body()
        if payload is None:
            return
        if url.path == "/commands":
            self._post_commands(payload)
        else:
            self._post_virtual_sms(payload)

    def _read_json_body_silent(self) -> None:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            if length > 0:
                self.rfile.read(length)
        except (ValueError, OSError):
            pass

    def _post_commands(self, payload: dict) -> None:
        text = payload.get("text")
        if not isinstance(text, str):
            self._reply(400, {"error": "BadRequest"})
            return
        try:
            _, event_id = self.server.service.submit_text(text, source="api")
        except CommandParseError as exc:
            self._reply(422, {"accepted": False, "error": exc.kind.value})
            return
        except UnknownDeviceError:
            self._reply(422, {"accepted": False, "error": "UnknownDevice"})
            return
        except ServiceHaltedError:
            self._reply(503, {"error": "Fatal"})
            return
        self._reply(200, {"accepted": True, "event_id": event_id})

    def _post_virtual_sms(self, payload: dict) -> None:
        sender = payload.get("sender")
        body = payload.get("body")
        if not isinstance(sender, str) or not isinstance(body, str):
            self._reply(400, {"error": "BadRequest"})
            return
        if not MSISDN_RE.fullmatch(sender):
            self._reply(400, {"error": "BadMsisdn"})
            return
        try:
            filename = self.server.service.write_virtual_sms(sender, body)
        except ServiceHaltedError:
            self._reply(503, {"error": "Fatal"})
            return
        self._reply(200, {"filename": filename})

    def _serve_static(self, path: str) -> None:
        rel = path.lstrip("/") or "index.html"
        if ".." in rel.split("/"):
            self._reply(404, {"error": "NotFound"})
            return
        target = self.server.static_dir / rel
        if not target.is_file():
            self._reply(404, {"error": "NotFound"})
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(data)
        self.close_connection = True


def split_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bind address must be <addr:port>, got {bind!r}")
    return host, int(port)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="homerelay",
        description="Appliance control service: inbox gateway, timed controller, relay bus, HTTP panel",
    )
    parser.add_argument("--config", required=True, help="config file path")
    parser.add_argument(
        "--data-dir", required=True, help="root for inbox/, events.log, state.snap, relay.trace"
    )
    parser.add_argument("--bind", default="127.0.0.1:8484", help="HTTP listen <addr:port>")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )

    config = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if not config.token:
        parser.error("config must set a token directive for the HTTP API")
    host, port = split_bind(args.bind)

    service = ControlService(config, args.data_dir)
    server = ApiServer((host, port), service, config.token)
    service.start()
    print(f"listening on http://{host}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        service.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
