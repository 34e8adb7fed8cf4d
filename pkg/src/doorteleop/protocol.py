"""Host↔slave wire protocol: length-prefixed JSON frames over TCP.

Frame layout: 4-byte big-endian unsigned payload length, then a UTF-8
JSON object {"payload": ..., "sequence": n, "type": "..."} serialized
canonically (sorted keys, compact separators) so re-encoding a decoded
message is byte-identical. Payload numbers travel as IEEE-754 doubles.

A message sender numbers its messages 1, 2, 3, ... per connection; an
Ack answers a specific sequence via payload {"ack_of": n}. The slave
stub records every decoded message and acks valid ones.
"""

from __future__ import annotations

import enum
import json
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field

from .errors import (
    DecodeError,
    FrameTooLargeError,
    TransportClosed,
    TransportTimeout,
)

MAX_FRAME_BYTES = 1 << 20  # parser guard
DEFAULT_TIMEOUT_S = 2.0
DEFAULT_SLAVE_PORT = 7601

_LEN = struct.Struct(">I")


class MessageType(enum.Enum):
    HELLO = "hello"
    PARAM_SET = "param_set"
    ORIENT = "orient"
    DRIVE = "drive"
    ACK = "ack"
    ERROR = "error"


@dataclass(frozen=True)
class Message:
    type: MessageType
    sequence: int
    payload: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.sequence < 0:
            raise ValueError("sequence must be unsigned")


def encode(m: Message) -> bytes:
    """Message → one wire frame."""
    body = json.dumps(
        {"payload": m.payload, "sequence": m.sequence, "type": m.type.value},
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")
    return _LEN.pack(len(body)) + body


def decode(frame: bytes) -> Message:
    """One complete wire frame → Message."""
    if len(frame) < _LEN.size:
        raise DecodeError("frame shorter than the length prefix")
    (length,) = _LEN.unpack(frame[: _LEN.size])
    if length == 0:
        raise DecodeError("zero-length payload")
    if length > MAX_FRAME_BYTES:
        raise FrameTooLargeError(f"payload of {length} bytes exceeds {MAX_FRAME_BYTES}")
    body = frame[_LEN.size :]
    if len(body) != length:
        raise DecodeError(f"expected {length} payload bytes, got {len(body)}")
    return _decode_body(bytes(body))


def _decode_body(body: bytes) -> Message:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DecodeError(f"malformed JSON payload: {e}") from e
    if not isinstance(obj, dict):
        raise DecodeError("payload must be a JSON object")
    try:
        mtype = MessageType(obj["type"])
    except (KeyError, ValueError):
        raise DecodeError(f"unknown message type {obj.get('type')!r}")
    seq = obj.get("sequence")
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 0:
        raise DecodeError(f"bad sequence {seq!r}")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise DecodeError("payload field must be an object")
    return Message(mtype, seq, payload)


class FrameDecoder:
    """Incremental decoder for a byte stream of frames.

    feed() buffers partial frames and only emits complete messages; a
    strict prefix of a frame never yields anything.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out: list[Message] = []
        while True:
            if len(self._buf) < _LEN.size:
                return out
            (length,) = _LEN.unpack(self._buf[: _LEN.size])
            if length == 0:
                raise DecodeError("zero-length payload")
            if length > MAX_FRAME_BYTES:
                raise FrameTooLargeError(
                    f"payload of {length} bytes exceeds {MAX_FRAME_BYTES}"
                )
            if len(self._buf) < _LEN.size + length:
                return out
            body = bytes(self._buf[_LEN.size : _LEN.size + length])
            del self._buf[: _LEN.size + length]
            out.append(_decode_body(body))

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


def encode_payload(obj: dict) -> bytes:
    """Length-prefix an arbitrary JSON object (operator socket traffic
    shares the slave link's framing, not its message schema)."""
    body = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode(
        "utf-8"
    )
    if len(body) > MAX_FRAME_BYTES:
        raise ValueError(f"payload of {len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return _LEN.pack(len(body)) + body


class PayloadDecoder:
    """Incremental decoder for length-prefixed JSON objects."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        self._buf.extend(data)
        out: list[dict] = []
        while True:
            if len(self._buf) < _LEN.size:
                return out
            (length,) = _LEN.unpack(self._buf[: _LEN.size])
            if length == 0 or length > MAX_FRAME_BYTES:
                raise DecodeError(f"bad payload length {length}")
            if len(self._buf) < _LEN.size + length:
                return out
            body = bytes(self._buf[_LEN.size : _LEN.size + length])
            del self._buf[: _LEN.size + length]
            try:
                obj = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise DecodeError(f"malformed JSON payload: {e}") from e
            if not isinstance(obj, dict):
                raise DecodeError("payload must be a JSON object")
            out.append(obj)


def read_payload(sock: socket.socket) -> dict:
    header = read_exactly(sock, _LEN.size)
    (length,) = _LEN.unpack(header)
    if length == 0 or length > MAX_FRAME_BYTES:
        raise DecodeError(f"bad payload length {length}")
    body = read_exactly(sock, length)
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DecodeError(f"malformed JSON payload: {e}") from e
    if not isinstance(obj, dict):
        raise DecodeError("payload must be a JSON object")
    return obj


def write_payload(sock: socket.socket, obj: dict) -> None:
    try:
        sock.sendall(encode_payload(obj))
    except socket.timeout:
        raise TransportTimeout("timed out sending to peer")
    except OSError as e:
        raise TransportClosed(f"connection lost: {e}") from e


def parse_address(addr: str, default_port: int = DEFAULT_SLAVE_PORT) -> tuple[str, int]:
    """'host:port' or 'host' → (host, port)."""
    if ":" in addr:
        host, _, port = addr.rpartition(":")
        return host or "127.0.0.1", int(port)
    return addr, default_port


def read_exactly(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except socket.timeout:
            raise TransportTimeout("timed out waiting for peer")
        except OSError as e:
            raise TransportClosed(f"connection lost: {e}") from e
        if not chunk:
            raise TransportClosed("connection closed by peer")
        buf.extend(chunk)
    return bytes(buf)


def read_message(sock: socket.socket) -> Message:
    header = read_exactly(sock, _LEN.size)
    (length,) = _LEN.unpack(header)
    if length == 0:
        raise DecodeError("zero-length payload")
    if length > MAX_FRAME_BYTES:
        raise FrameTooLargeError(f"payload of {length} bytes exceeds {MAX_FRAME_BYTES}")
    return _decode_body(read_exactly(sock, length))


def write_message(sock: socket.socket, m: Message) -> None:
    try:
        sock.sendall(encode(m))
    except socket.timeout:
        raise TransportTimeout("timed out sending to peer")
    except OSError as e:
        raise TransportClosed(f"connection lost: {e}") from e


class LinkClient:
    """One host-side connection to the slave endpoint.

    Assigns strictly increasing sequence numbers and blocks for the Ack
    answering each message. No automatic retry: a failed send leaves
    the caller free to retry explicitly.
    """

    def __init__(self, address: str | tuple[str, int], timeout: float = DEFAULT_TIMEOUT_S):
        if isinstance(address, str):
            address = parse_address(address)
        self._sock = socket.create_connection(address, timeout=timeout)
        self._sock.settimeout(timeout)
        self._seq = 0
        self._lock = threading.Lock()

    def send(self, mtype: MessageType, payload: dict | None = None) -> Message:
        """Send one message and wait for its Ack."""
        with self._lock:
            self._seq += 1
            msg = Message(mtype, self._seq, payload or {})
            write_message(self._sock, msg)
            while True:
                reply = read_message(self._sock)
                if (
                    reply.type is MessageType.ACK
                    and reply.payload.get("ack_of") == msg.sequence
                ):
                    return reply
                if reply.type is MessageType.ERROR:
                    raise TransportClosed(
                        f"peer rejected message: {reply.payload.get('text')}"
                    )

    def hello(self) -> Message:
        return self.send(MessageType.HELLO, {"version": 1})

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def send_parameters(client: LinkClient, params) -> Message:
    """Ship an extracted parameter set; returns the Ack."""
    payload = params.to_payload() if hasattr(params, "to_payload") else dict(params)
    return client.send(MessageType.PARAM_SET, payload)


class _StubHandler(socketserver.BaseRequestHandler):
    def setup(self) -> None:
        self.server.stub.track_connection(self.request)  # type: ignore[attr-defined]

    def handle(self) -> None:
        stub: SlaveStub = self.server.stub  # type: ignore[attr-defined]
        decoder = FrameDecoder()
        reply_seq = 0
        last_seen = 0
        while True:
            try:
                data = self.request.recv(65536)
            except OSError:
                return
            if not data:
                return
            try:
                messages = decoder.feed(data)
            except DecodeError:
                return  # framing is unrecoverable; drop the connection
            for msg in messages:
                stub.record(msg)
                reply_seq += 1
                if msg.sequence <= last_seen:
                    reply = Message(
                        MessageType.ERROR,
                        reply_seq,
                        {"code": "bad_sequence", "text": "sequence must increase"},
                    )
                else:
                    last_seen = msg.sequence
                    reply = Message(MessageType.ACK, reply_seq, {"ack_of": msg.sequence})
                try:
                    write_message(self.request, reply)
                except (TransportClosed, TransportTimeout):
                    return


class _StubServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class SlaveStub:
    """In-process slave endpoint: records every message, acks valid ones."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._server = _StubServer((host, port), _StubHandler)
        self._server.stub = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._lock = threading.Lock()
        self._log: list[Message] = []
        self._connections: list[socket.socket] = []

    def start(self) -> "SlaveStub":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        with self._lock:
            connections = list(self._connections)
        for sock in connections:  # drop live peers, not just the listener
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                sock.close()
            except OSError:
                pass

    def track_connection(self, sock: socket.socket) -> None:
        with self._lock:
            self._connections.append(sock)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    @property
    def address_str(self) -> str:
        host, port = self.address
        return f"{host}:{port}"

    def record(self, msg: Message) -> None:
        with self._lock:
            self._log.append(msg)

    @property
    def messages(self) -> list[Message]:
        with self._lock:
            return list(self._log)

    def messages_of(self, mtype: MessageType) -> list[Message]:
        return [m for m in self.messages if m.type is mtype]

    def __enter__(self) -> "SlaveStub":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
