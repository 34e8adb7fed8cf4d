"""Host service: owns one simulator session, runs click scripts
headlessly, streams frames to operator consoles over a framed JSON
socket, and holds the slave link.

Operator socket (version 1, length-prefixed JSON objects):

  server→console
    {"kind": "hello", "version": 1, "role": "controller"|"observer",
     "state": ..., "intrinsics": {...}}
    {"kind": "frame", "seq", "timestamp_ms", "state", "width", "height",
     "png_b64"}
    {"kind": "result", "id", "ok", "result": {action outcome},
     "error"?: {code, message}}
  console→server
    {"kind": "action", "id", "action": {...script action...}}
    {"kind": "get_report", "id"}
    {"kind": "ping", "id"}

The first console to connect controls the session; later ones observe
(hover is allowed, mutations answer a read_only error). Frame streaming
never waits on the slave link.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import socket
import threading
from dataclasses import dataclass

from PIL import Image

from . import protocol, scripting
from .errors import DoorTeleopError
from .geometry import DriveGeometry
from .protocol import LinkClient, MessageType
from .rgbd.scene import SceneDescriptor, load_scene_file
from .session import Session

log = logging.getLogger(__name__)

OPERATOR_SCHEMA_VERSION = 1
DEFAULT_LISTEN = "127.0.0.1:7600"

ENV_LISTEN = "DOORTELEOP_LISTEN"
ENV_SLAVE = "DOORTELEOP_SLAVE"


@dataclass
class ServiceConfig:
    scene_path: str | None = None
    scene: SceneDescriptor | None = None
    listen_address: str = DEFAULT_LISTEN
    slave_address: str | None = None
    frame_rate_hz: float = 30.0
    noise_sigma_at_1m: float | None = None  # None → scene value
    drive_geometry: DriveGeometry | None = None
    render_impl: str | None = None

    def __post_init__(self) -> None:
        if not (1 <= self.frame_rate_hz <= 60):
            raise ValueError("frame_rate_hz must be within [1, 60]")

    def load_scene(self) -> SceneDescriptor:
        if self.scene is not None:
            return self.scene
        if self.scene_path is None:
            raise ValueError("config has neither a scene nor a scene_path")
        return load_scene_file(self.scene_path)


def _build_session(config: ServiceConfig, slave: LinkClient | None) -> Session:
    send_params = None
    send_motion = None
    if slave is not None:
        send_params = lambda params: protocol.send_parameters(slave, params)

        def send_motion(kind: str, payload: dict):
            mtype = MessageType.ORIENT if kind == "orient" else MessageType.DRIVE
            return slave.send(mtype, payload)

    return Session(
        config.load_scene(),
        drive_geometry=config.drive_geometry,
        noise_sigma_at_1m=config.noise_sigma_at_1m,
        frame_rate_hz=config.frame_rate_hz,
        render_impl=config.render_impl,
        send_params=send_params,
        send_motion=send_motion,
    )


class ActionRecorder:
    """Shared bookkeeping for both execution paths: normalized action
    echoes, per-action results or errors, and the final report."""

    def __init__(self, session: Session):
        self.session = session
        self.actions: list[dict] = []
        self.results: list[dict] = []
        self.errors: list[dict] = []
        self._lock = threading.Lock()

    def run(self, action: dict) -> dict:
        """Execute one action, recording its outcome; returns the result
        entry (ok or error)."""
        with self._lock:
            index = len(self.actions)
            line = action.get("line", index + 1)
            self.actions.append(
                {k: v for k, v in action.items() if k != "line"} | {"index": index}
            )
            try:
                result = scripting.apply_action(self.session, action)
                entry = {"index": index, "ok": True, **result}
            except DoorTeleopError as e:
                entry = {
                    "index": index,
                    "ok": False,
                    "error": {"code": e.code, "message": str(e)},
                }
                self.errors.append({"line": line, "index": index, **entry["error"]})
            except (ValueError, KeyError) as e:
                entry = {
                    "index": index,
                    "ok": False,
                    "error": {"code": "bad_action", "message": str(e)},
                }
                self.errors.append({"line": line, "index": index, **entry["error"]})
            self.results.append(entry)
            return entry

    def report(self) -> dict:
        events = self.session.events
        return {
            "version": 1,
            "actions": self.actions,
            "results": self.results,
            "errors": self.errors,
            "events": events,
            "state_trace": self.session.state_trace,
            "final": self.session.snapshot(),
            "slave_acks": [
                e["ack_of"] for e in events if e["kind"] == "sent" and e["ack_of"]
            ],
            "ok": not self.errors,
        }


def run_actions(config: ServiceConfig, actions: list[dict]) -> dict:
    """Execute a parsed action list against a fresh session; returns the
    report. Connects to the slave when one is configured."""
    slave = None
    if config.slave_address:
        slave = LinkClient(config.slave_address)
        slave.hello()
    try:
        recorder = ActionRecorder(_build_session(config, slave))
        for action in actions:
            recorder.run(action)
        return recorder.report()
    finally:
        if slave is not None:
            slave.close()


def run_script(config: ServiceConfig, script_path, out_path=None) -> tuple[dict, int]:
    """Execute a JSON Lines click script; returns (report, exit_code).

    Exit code 0 iff the script parsed and completed without protocol or
    state errors.
    """
    with open(script_path, "r", encoding="utf-8") as f:
        actions = scripting.parse_script(f.read())
    report = run_actions(config, actions)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    return report, 0 if report["ok"] else 1


class _Console:
    def __init__(self, sock: socket.socket, role: str):
        self.sock = sock
        self.role = role
        self.send_lock = threading.Lock()
        self.alive = True

    def send(self, obj: dict) -> None:
        with self.send_lock:
            protocol.write_payload(self.sock, obj)


class TeleopService:
    """Live host: frame streaming, operator actions, slave relay."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._slave = None
        if config.slave_address:
            self._slave = LinkClient(config.slave_address)
            self._slave.hello()
        self.session = _build_session(config, self._slave)
        self.recorder = ActionRecorder(self.session)
        host, port = protocol.parse_address(config.listen_address, 7600)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        # a blocking accept() is not interrupted by close() from another
        # thread; poll so stop() always terminates the accept loop
        self._listener.settimeout(0.2)
        self._consoles: list[_Console] = []
        self._consoles_lock = threading.Lock()
        self._controller: _Console | None = None
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._png_cache: tuple[int, str] | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> "TeleopService":
        for target in (self._accept_loop, self._stream_loop):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._consoles_lock:
            consoles = list(self._consoles)
        for c in consoles:
            for closer in (lambda: c.sock.shutdown(socket.SHUT_RDWR), c.sock.close):
                try:
                    closer()
                except OSError:
                    pass
        if self._slave is not None:
            self._slave.close()

    def serve_forever(self) -> None:
        self.start()
        try:
            self._stop.wait()
        except KeyboardInterrupt:
            self.stop()

    # -- connection handling

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            sock.settimeout(None)
            with self._consoles_lock:
                if self._controller is None or not self._controller.alive:
                    console = _Console(sock, "controller")
                    self._controller = console
                else:
                    console = _Console(sock, "observer")
                self._consoles.append(console)
            t = threading.Thread(target=self._console_loop, args=(console,), daemon=True)
            t.start()
            self._threads.append(t)

    def _console_loop(self, console: _Console) -> None:
        intr = self.session.intrinsics
        try:
            console.send(
                {
                    "kind": "hello",
                    "version": OPERATOR_SCHEMA_VERSION,
                    "role": console.role,
                    "state": self.session.current_state().value,
                    "intrinsics": {
                        "width": intr.width,
                        "height": intr.height,
                        "fx": intr.fx,
                        "fy": intr.fy,
                        "cx": intr.cx,
                        "cy": intr.cy,
                        "depth_min": intr.depth_min,
                        "depth_max": intr.depth_max,
                    },
                }
            )
            decoder = protocol.PayloadDecoder()
            while not self._stop.is_set():
                data = console.sock.recv(65536)
                if not data:
                    return
                for msg in decoder.feed(data):
                    self._handle_console_message(console, msg)
        except (protocol.DecodeError, DoorTeleopError, OSError):
            return
        finally:
            console.alive = False
            with self._consoles_lock:
                if console in self._consoles:
                    self._consoles.remove(console)
                if self._controller is console:
                    self._controller = None

    def _handle_console_message(self, console: _Console, msg: dict) -> None:
        kind = msg.get("kind")
        msg_id = msg.get("id")
        if kind == "ping":
            console.send({"kind": "result", "id": msg_id, "ok": True, "pong": True})
            return
        if kind == "get_report":
            console.send(
                {"kind": "result", "id": msg_id, "ok": True, "report": self.recorder.report()}
            )
            return
        if kind == "action":
            action = msg.get("action") or {}
            mutating = action.get("op") != "hover"
            if mutating and console.role != "controller":
                console.send(
                    {
                        "kind": "result",
                        "id": msg_id,
                        "ok": False,
                        "error": {
                            "code": "read_only",
                            "message": "another console controls this session",
                        },
                    }
                )
                return
            entry = self.recorder.run(action)
            # the outcome nests under "result" so its keys (including the
            # session event's own "kind") cannot collide with the envelope;
            # the post-action state keeps console mirrors exact between frames
            reply = {
                "kind": "result",
                "id": msg_id,
                "ok": entry["ok"],
                "state": self.session.current_state().value,
                "result": entry,
            }
            if not entry["ok"]:
                reply["error"] = entry["error"]
            console.send(reply)
            return
        console.send(
            {
                "kind": "result",
                "id": msg_id,
                "ok": False,
                "error": {"code": "bad_message", "message": f"unknown kind {kind!r}"},
            }
        )

    # -- frame streaming

    def _encoded_frame(self) -> dict:
        frame = self.session.current_frame()
        if self._png_cache is None or self._png_cache[0] != frame.frame_index:
            buf = io.BytesIO()
            Image.fromarray(frame.color, mode="RGB").save(buf, format="PNG")
            self._png_cache = (
                frame.frame_index,
                base64.b64encode(buf.getvalue()).decode("ascii"),
            )
        return {
            "kind": "frame",
            "seq": frame.frame_index,
            "timestamp_ms": frame.timestamp_ms,
            "state": self.session.current_state().value,
            "width": frame.intrinsics.width,
            "height": frame.intrinsics.height,
            "png_b64": self._png_cache[1],
        }

    def _stream_loop(self) -> None:
        interval = 1.0 / self.config.frame_rate_hz
        while not self._stop.wait(interval):
            with self._consoles_lock:
                consoles = list(self._consoles)
            if not consoles:
                continue
            try:
                payload = self._encoded_frame()
            except Exception:
                log.exception("frame encoding failed")
                continue
            for c in consoles:
                try:
                    c.send(payload)
                except DoorTeleopError:
                    c.alive = False
                    with self._consoles_lock:
                        if c in self._consoles:
                            self._consoles.remove(c)
                        if self._controller is c:
                            self._controller = None


def serve(config: ServiceConfig) -> TeleopService:
    """Start the live service; returns the running instance."""
    return TeleopService(config).start()


def env_default(env_name: str, fallback: str | None) -> str | None:
    return os.environ.get(env_name) or fallback
