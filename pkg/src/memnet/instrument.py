"""Device-array ports: the in-process virtual array and a line-protocol remote client.

Wire protocol (UTF-8, one newline-terminated command per line, one reply each)::

    INFO                 -> OK <rows> <cols> <min_width_s> <max_width_s>
    READ r c             -> OK <ohms>
    READALL              -> OK <ohms> ... (rows*cols values, row-major)
    PULSE r c amp width  -> OK
    GND                  -> OK
    anything else        -> ERR <code> <text>

Floats are written with the shortest repr that round-trips, so a remote
session reproduces the virtual backend bit-for-bit.
"""
from __future__ import annotations

import logging
import math
import socket
import socketserver
import threading
from dataclasses import dataclass

import numpy as np

from .crossbar import Crossbar
from .device import NO_NOISE, Pulse, ReadNoise, read

log = logging.getLogger(__name__)

ERR_MALFORMED = 1
ERR_RANGE = 2
ERR_BUSY = 3
ERR_UNKNOWN = 4
ERR_INTERNAL = 5


class PortError(Exception):
    def __init__(self, message, code=None):
        super().__init__(message if code is None else f"[{code}] {message}")
        self.code = code
        self.text = message


@dataclass(frozen=True)
class PortInfo:
    rows: int
    cols: int
    min_width: float = 0.0
    max_width: float = math.inf


class DeviceArrayPort:
    """Base interface. Subclasses implement the four primitive operations."""

    info: PortInfo

    def read_resistance(self, row: int, col: int) -> float:
        raise NotImplementedError

    def apply_pulse(self, row: int, col: int, amplitude: float, width: float) -> None:
        raise NotImplementedError

    def ground_all(self) -> None:
        raise NotImplementedError

    def read_all(self) -> np.ndarray:
        """Row-major read of the whole array."""
        return np.array([[self.read_resistance(r, c) for c in range(self.info.cols)]
                         for r in range(self.info.rows)])

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class VirtualPort(DeviceArrayPort):
    def __init__(self, cb: Crossbar, noise: ReadNoise = NO_NOISE, rng: np.random.Generator | None = None):
        self.cb = cb
        self.noise = noise
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.info = PortInfo(cb.rows, cb.cols)

    def _check(self, row, col):
        if not (0 <= row < self.info.rows and 0 <= col < self.info.cols):
            raise PortError(f"device ({row}, {col}) outside {self.info.rows}x{self.info.cols}", ERR_RANGE)

    def read_resistance(self, row, col):
        self._check(row, col)
        return read(self.cb.device(row, col), self.noise, self.rng, self.cb.params.R_floor)

    def read_all(self):
        return self.cb.read_resistances(self.noise, self.rng)

    def apply_pulse(self, row, col, amplitude, width):
        self._check(row, col)
        if not (self.info.min_width < width <= self.info.max_width):
            raise PortError(f"pulse width {width} outside supported range", ERR_RANGE)
        self.cb.write_selected(row, col, Pulse(amplitude, width))

    def ground_all(self):
        pass


def virtual_port(cb: Crossbar, noise: ReadNoise = NO_NOISE, rng=None) -> VirtualPort:
    return VirtualPort(cb, noise, rng)


def fmt_float(x: float) -> str:
    return repr(float(x))


def fmt_sci(x: float) -> str:
    return np.format_float_scientific(float(x), unique=True, trim="-")


def handle_command(port: DeviceArrayPort, line: str) -> str:
    """Execute one protocol line against ``port``; always returns exactly one reply line."""
    parts = line.split()
    if not parts:
        return f"ERR {ERR_MALFORMED} malformed"
    cmd, args = parts[0].upper(), parts[1:]
    try:
        if cmd == "INFO" and not args:
            i = port.info
            return f"OK {i.rows} {i.cols} {fmt_sci(i.min_width)} {fmt_sci(i.max_width)}"
        if cmd == "GND" and not args:
            port.ground_all()
            return "OK"
        if cmd == "READALL" and not args:
            return "OK " + " ".join(fmt_float(v) for v in port.read_all().ravel())
        if cmd == "READ" and len(args) == 2:
            try:
                r, c = int(args[0]), int(args[1])
            except ValueError:
                return f"ERR {ERR_MALFORMED} malformed"
            return "OK " + fmt_float(port.read_resistance(r, c))
        if cmd == "PULSE" and len(args) == 4:
            try:
                r, c = int(args[0]), int(args[1])
                amp, width = float(args[2]), float(args[3])
            except ValueError:
                return f"ERR {ERR_MALFORMED} malformed"
            if not (math.isfinite(amp) and math.isfinite(width)):
                return f"ERR {ERR_MALFORMED} malformed"
            port.apply_pulse(r, c, amp, width)
            return "OK"
        if cmd in ("INFO", "GND", "READALL", "READ", "PULSE"):
            return f"ERR {ERR_MALFORMED} malformed"
        return f"ERR {ERR_UNKNOWN} unknown command"
    except PortError as e:
        return f"ERR {e.code or ERR_INTERNAL} {e.text}"
    except Exception as e:  # the server must survive anything a client sends
        log.exception("mock instrument failed on %r", line)
        return f"ERR {ERR_INTERNAL} {type(e).__name__}"


class _Handler(socketserver.StreamRequestHandler):
    def setup(self):
        super().setup()
        self.connection.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            with self.server.lock:
                reply = handle_command(self.server.port, line)
            self.wfile.write((reply + "\n").encode("utf-8"))


class _Server(socketserver.TCPServer):
    allow_reuse_address = True


class MockServer:
    """Serves the wire protocol on a local TCP socket, backed by a virtual array.

    One client at a time; requests are serialized.
    """

    def __init__(self, port: DeviceArrayPort, host: str = "127.0.0.1", tcp_port: int = 0):
        try:
            self._server = _Server((host, tcp_port), _Handler)
        except OSError as e:
            raise PortError(f"cannot bind {host}:{tcp_port}: {e}") from e
        self._server.port = port
        self._server.lock = threading.Lock()
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "MockServer":
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join()

    def __enter__(self):
        return self.start() if not self._thread.is_alive() else self

    def __exit__(self, *exc):
        self.stop()


def mock_server(cb: Crossbar, noise: ReadNoise = NO_NOISE, rng=None,
                host: str = "127.0.0.1", tcp_port: int = 0) -> MockServer:
    return MockServer(VirtualPort(cb, noise, rng), host, tcp_port).start()


class RemotePort(DeviceArrayPort):
    def __init__(self, host: str, port: int, timeout: float = 10.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as e:
            raise PortError(f"cannot connect to {host}:{port}: {e}") from e
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._rfile = self._sock.makefile("rb")
        fields = self._request("INFO").split()
        try:
            rows, cols = int(fields[0]), int(fields[1])
            self.info = PortInfo(rows, cols, float(fields[2]), float(fields[3]))
        except (IndexError, ValueError) as e:
            raise PortError(f"malformed INFO reply {fields!r}") from e

    def _request(self, line: str) -> str:
        try:
            self._sock.sendall((line + "\n").encode("utf-8"))
            reply = self._rfile.readline()
        except socket.timeout as e:
            raise PortError(f"timeout waiting for reply to {line.split()[0]}") from e
        except OSError as e:
            raise PortError(f"connection failed: {e}") from e
        if not reply.endswith(b"\n"):
            raise PortError("connection closed by instrument")
        text = reply.decode("utf-8").strip()
        if text == "OK":
            return ""
        if text.startswith("OK "):
            return text[3:]
        if text.startswith("ERR"):
            parts = text.split(None, 2)
            try:
                code = int(parts[1])
            except (IndexError, ValueError):
                raise PortError(f"malformed reply {text!r}") from None
            raise PortError(parts[2] if len(parts) > 2 else "", code)
        raise PortError(f"malformed reply {text!r}")

    def _float(self, text):
        try:
            return float(text)
        except ValueError:
            raise PortError(f"malformed reply value {text!r}") from None

    def read_resistance(self, row, col):
        return self._float(self._request(f"READ {row} {col}"))

    def read_all(self):
        vals = self._request("READALL").split()
        if len(vals) != self.info.rows * self.info.cols:
            raise PortError(f"READALL returned {len(vals)} values, "
                            f"expected {self.info.rows * self.info.cols}")
        return np.array([self._float(v) for v in vals]).reshape(self.info.rows, self.info.cols)

    def apply_pulse(self, row, col, amplitude, width):
        self._request(f"PULSE {row} {col} {fmt_float(amplitude)} {fmt_sci(width)}")

    def ground_all(self):
        self._request("GND")

    def close(self):
        self._rfile.close()
        self._sock.close()


def remote_port(endpoint: str, timeout: float = 10.0) -> RemotePort:
    """Connect to ``HOST:PORT`` (a leading ``remote:`` is accepted)."""
    if endpoint.startswith("remote:"):
        endpoint = endpoint[len("remote:"):]
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise PortError(f"bad endpoint {endpoint!r}, expected HOST:PORT")
    return RemotePort(host, int(port), timeout)
