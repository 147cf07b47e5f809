"""Length-prefixed frames: ``type (1 byte) | length (4 bytes BE) | payload``."""

from __future__ import annotations

import enum
import select
import socket
import struct
from dataclasses import dataclass
from typing import Callable, Optional

from ..errors import ProtocolViolation, TransportError

FRAME_HEADER = struct.Struct(">BI")
MAX_PAYLOAD = 1 << 30
IO_TIMEOUT = 60.0


class MsgType(enum.IntEnum):
    FD_SIGNATURE = 0x01
    FD_REQUEST = 0x02
    FD_RESPONSE = 0x03
    MESSAGE = 0x04
    VERIFY_RESULT = 0x05


@dataclass(frozen=True)
class Frame:
    msg_type: MsgType
    payload: bytes = b""

    def encode(self) -> bytes:
        return FRAME_HEADER.pack(self.msg_type, len(self.payload)) + self.payload


def parse_frames(buffer: bytes) -> tuple[list[Frame], bytes]:
    """Split complete frames off the front of ``buffer``; return the rest."""
    frames = []
    while len(buffer) >= FRAME_HEADER.size:
        msg_type, length = FRAME_HEADER.unpack_from(buffer)
        end = FRAME_HEADER.size + length
        if len(buffer) < end:
            break
        frames.append(Frame(_msg_type(msg_type), buffer[FRAME_HEADER.size : end]))
        buffer = buffer[end:]
    return frames, buffer


def _msg_type(value: int) -> MsgType:
    try:
        return MsgType(value)
    except ValueError:
        raise ProtocolViolation(f"unknown frame type 0x{value:02x}") from None


class FrameStream:
    """Frames over a connected stream socket.

    ``observer`` is called as ``observer(direction, frame)`` with direction
    ``"send"`` or ``"recv"`` for every frame.
    """

    def __init__(
        self,
        sock: socket.socket,
        observer: Optional[Callable[[str, Frame], None]] = None,
        io_timeout: float = IO_TIMEOUT,
    ):
        self.sock = sock
        self.observer = observer
        self.io_timeout = io_timeout

    def send(self, msg_type: MsgType, payload: bytes = b"") -> None:
        frame = Frame(msg_type, payload)
        try:
            self.sock.sendall(frame.encode())
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc
        if self.observer:
            self.observer("send", frame)

    def recv(self, timeout: Optional[float] = None) -> Optional[Frame]:
        """Next frame.  With ``timeout``, return None if no frame starts
        arriving within that many seconds; without it, block (up to the I/O
        timeout)."""
        wait = self.io_timeout if timeout is None else timeout
        try:
            ready, _, _ = select.select([self.sock], [], [], wait)
        except (OSError, ValueError) as exc:
            raise TransportError(f"connection unusable: {exc}") from exc
        if not ready:
            if timeout is not None:
                return None
            raise TransportError(f"no frame within {wait} s")
        header = self._read_exact(FRAME_HEADER.size)
        msg_type, length = FRAME_HEADER.unpack(header)
        kind = _msg_type(msg_type)
        if length > MAX_PAYLOAD:
            raise ProtocolViolation(f"frame payload of {length} bytes exceeds limit")
        frame = Frame(kind, self._read_exact(length))
        if self.observer:
            self.observer("recv", frame)
        return frame

    def _read_exact(self, count: int) -> bytes:
        chunks = []
        remaining = count
        self.sock.settimeout(self.io_timeout)
        try:
            while remaining:
                chunk = self.sock.recv(min(remaining, 1 << 20))
                if not chunk:
                    raise TransportError("connection closed mid-exchange")
                chunks.append(chunk)
                remaining -= len(chunk)
        except socket.timeout as exc:
            raise TransportError("timed out reading a frame") from exc
        except OSError as exc:
            raise TransportError(f"receive failed: {exc}") from exc
        return b"".join(chunks)
