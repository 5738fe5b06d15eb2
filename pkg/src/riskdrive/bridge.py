"""Operator bridge: streams per-tick snapshots to a UI client and accepts
override commands, applied at the next tick boundary.

The wire protocol is WebSocket (RFC 6455, text frames) carrying one JSON
object per message with a `type` tag: server -> client `hello` and
`snapshot`; client -> server `override_begin`, `override_action`,
`override_end`.  WebSocket framing provides the length prefix; a browser
client can connect natively.  A client disconnect mid-override ends the
override immediately (fail-safe to autonomy).

The simulation never blocks on the bridge: snapshots to a slow or absent
client are dropped, and override messages are polled between ticks only.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import queue
import socket
import struct
import threading
from typing import Optional

from .world import EgoAction

log = logging.getLogger("riskdrive.bridge")

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode()).digest()
    return base64.b64encode(digest).decode()


def encode_text_frame(payload: str) -> bytes:
    data = payload.encode()
    n = len(data)
    if n < 126:
        header = struct.pack("!BB", 0x81, n)
    elif n < 1 << 16:
        header = struct.pack("!BBH", 0x81, 126, n)
    else:
        header = struct.pack("!BBQ", 0x81, 127, n)
    return header + data


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("socket closed")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    """Read one (possibly masked) frame; returns (opcode, payload)."""
    b0, b1 = _read_exact(sock, 2)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    if length == 126:
        (length,) = struct.unpack("!H", _read_exact(sock, 2))
    elif length == 127:
        (length,) = struct.unpack("!Q", _read_exact(sock, 8))
    mask = _read_exact(sock, 4) if masked else b"\x00" * 4
    payload = bytearray(_read_exact(sock, length))
    if masked:
        for i in range(length):
            payload[i] ^= mask[i % 4]
    return opcode, bytes(payload)


class BridgeServer:
    """Single-operator WebSocket bridge; owns no simulation state."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1"):
        self.host = host
        self._listener = socket.create_server((host, port))
        self.port = self._listener.getsockname()[1]
        self._client: Optional[socket.socket] = None
        self._client_lock = threading.Lock()
        self._inbox: queue.Queue = queue.Queue()
        self._running = True
        self._hello: Optional[str] = None
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               daemon=True)
        self._accept_thread.start()
        # Override state, touched only from the episode loop via poll.
        self._override_active = False
        self._override_action: Optional[EgoAction] = None
        self.events: list[str] = []

    # -- connection handling ----------------------------------------------

    def _accept_loop(self) -> None:
        while self._running:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            try:
                self._handshake(conn)
            except Exception:
                conn.close()
                continue
            with self._client_lock:
                if self._client is not None:
                    self._client.close()
                self._client = conn
                if self._hello is not None:
                    try:
                        conn.sendall(encode_text_frame(self._hello))
                    except OSError:
                        pass
            threading.Thread(target=self._read_loop, args=(conn,),
                             daemon=True).start()

    def _handshake(self, conn: socket.socket) -> None:
        request = b""
        while b"\r\n\r\n" not in request:
            chunk = conn.recv(4096)
            if not chunk:
                raise ConnectionError("client left during handshake")
            request += chunk
        headers = {}
        for line in request.decode(errors="replace").split("\r\n")[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()
        key = headers.get("sec-websocket-key")
        if key is None:
            raise ValueError("not a websocket upgrade request")
        response = ("HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {_accept_key(key)}\r\n\r\n")
        conn.sendall(response.encode())

    def _read_loop(self, conn: socket.socket) -> None:
        try:
            while True:
                opcode, payload = read_frame(conn)
                if opcode == 0x8:        # close
                    break
                if opcode == 0x9:        # ping -> pong
                    conn.sendall(struct.pack("!BB", 0x8A, len(payload)) + payload)
                    continue
                if opcode != 0x1:
                    continue
                try:
                    msg = json.loads(payload.decode())
                except ValueError:
                    continue
                self._inbox.put(msg)
        except (ConnectionError, OSError):
            pass
        finally:
            self._inbox.put({"type": "_disconnect"})
            with self._client_lock:
                if self._client is conn:
                    self._client = None
            conn.close()

    # -- episode-loop API ---------------------------------------------------

    def set_hello(self, payload: dict) -> None:
        """World-static message replayed to every client on connect."""
        self._hello = json.dumps({"type": "hello", **payload})

    def send_snapshot(self, snapshot: dict) -> None:
        with self._client_lock:
            conn = self._client
        if conn is None:
            return
        try:
            conn.sendall(encode_text_frame(json.dumps(snapshot)))
        except OSError:
            with self._client_lock:
                if self._client is conn:
                    self._client = None

    def poll_override(self, step: int) -> Optional[EgoAction]:
        """Drain operator messages; return the override action if engaged."""
        while True:
            try:
                msg = self._inbox.get_nowait()
            except queue.Empty:
                break
            kind = msg.get("type")
            if kind == "override_begin":
                self._override_active = True
                self._override_action = EgoAction(0.0, 0.0)
                self.events.append(f"begin@{step}")
            elif kind == "override_action" and self._override_active:
                self._override_action = EgoAction(
                    float(msg.get("steer", 0.0)),
                    float(msg.get("acc", 0.0))).clamped()
            elif kind == "override_end":
                self._override_active = False
                self._override_action = None
                self.events.append(f"end@{step}")
            elif kind == "_disconnect":
                if self._override_active:
                    self.events.append(f"disconnect_end@{step}")
                self._override_active = False
                self._override_action = None
        return self._override_action if self._override_active else None

    def close(self) -> None:
        self._running = False
        try:
            self._listener.close()
        except OSError:
            pass
        with self._client_lock:
            if self._client is not None:
                self._client.close()
                self._client = None
