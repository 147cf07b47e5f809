"""Sender and receiver state machines for the MAC exchange.

Frame order on the wire::

    sender                          receiver
    FD_SIGNATURE (sig | n)  ---->
                            <----   FD_REQUEST          (cache miss only)
    FD_RESPONSE (fd bytes)  ---->                       (cache miss only)
    MESSAGE (len | msg | tag) -->
                            <----   VERIFY_RESULT (1 = accepted)

A cache hit is signalled by silence: the sender waits ``decision_timeout``
seconds for an FD_REQUEST and then sends the message.  The receiver also
accepts a MESSAGE that overtakes its FD_REQUEST (a slow lookup), holding it
until the description arrives, so a short timeout only costs ordering.
"""

from __future__ import annotations

import enum
import logging
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from ..bits import Bitvec, packed_size
from ..errors import ProtocolViolation, Rejected, ScaleRefused, SignatureMismatch
from ..oneway import Evaluator, FunctionDescription, MacTag, derive_input
from .cache import FdCache
from .encoding import Signature, decode_fd, encode_fd, fd_signature
from .wire import Frame, FrameStream, MsgType

log = logging.getLogger(__name__)

DECISION_TIMEOUT = 0.2
DEFAULT_EVALUATE_CAP = 512

_SIG_PAYLOAD = struct.Struct(">32sI")
_LEN = struct.Struct(">I")


class Phase(enum.Enum):
    IDLE = "idle"
    AWAITING_FD_DECISION = "awaiting_fd_decision"
    AWAITING_FD = "awaiting_fd"
    AWAITING_RESULT = "awaiting_result"
    DONE = "done"


_SENDER_STEPS = {
    Phase.IDLE: {Phase.AWAITING_FD_DECISION},
    Phase.AWAITING_FD_DECISION: {Phase.AWAITING_RESULT},
    Phase.AWAITING_RESULT: {Phase.DONE},
}
_RECEIVER_STEPS = {
    Phase.IDLE: {Phase.AWAITING_FD, Phase.AWAITING_RESULT},
    Phase.AWAITING_FD: {Phase.AWAITING_RESULT},
    Phase.AWAITING_RESULT: {Phase.DONE},
}


class _Session:
    steps: dict = {}

    def __init__(self, stream: FrameStream):
        self.stream = stream
        self.phase = Phase.IDLE

    def _advance(self, phase: Phase) -> None:
        if phase not in self.steps.get(self.phase, ()):
            raise ProtocolViolation(f"illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase

    def _unexpected(self, frame: Frame) -> ProtocolViolation:
        return ProtocolViolation(f"unexpected {frame.msg_type.name} in phase {self.phase.value}")


def encode_message(message: bytes, tag: MacTag) -> bytes:
    return _LEN.pack(len(message)) + message + tag.to_bytes()


def decode_message(payload: bytes, n: int) -> tuple[bytes, MacTag]:
    if len(payload) < _LEN.size:
        raise ProtocolViolation("MESSAGE payload too short")
    (length,) = _LEN.unpack_from(payload)
    if len(payload) != _LEN.size + length + packed_size(n):
        raise ProtocolViolation("MESSAGE payload length does not match its header")
    message = payload[_LEN.size : _LEN.size + length]
    tag = Bitvec.from_bytes(payload[_LEN.size + length :], n)
    return message, MacTag(tag)


@dataclass(frozen=True)
class SendOutcome:
    accepted: bool
    fd_sent: bool
    tag: MacTag


class SenderSession(_Session):
    steps = _SENDER_STEPS

    def __init__(
        self,
        stream: FrameStream,
        fd: FunctionDescription,
        evaluator: Optional[Evaluator] = None,
        decision_timeout: float = DECISION_TIMEOUT,
    ):
        super().__init__(stream)
        self.fd = fd
        self.evaluator = evaluator or Evaluator(fd)
        self.decision_timeout = decision_timeout
        self.signature = fd_signature(fd)
        self.fd_sent = False

    def _send_fd(self) -> None:
        self.stream.send(MsgType.FD_RESPONSE, encode_fd(self.fd))
        self.fd_sent = True

    def run(self, message: bytes) -> SendOutcome:
        tag = self.evaluator.tag(derive_input(message, self.fd.n))
        self.stream.send(MsgType.FD_SIGNATURE, _SIG_PAYLOAD.pack(self.signature.digest, self.fd.n))
        self._advance(Phase.AWAITING_FD_DECISION)
        frame = self.stream.recv(timeout=self.decision_timeout)
        if frame is not None:
            if frame.msg_type is not MsgType.FD_REQUEST:
                raise self._unexpected(frame)
            self._send_fd()
        self.stream.send(MsgType.MESSAGE, encode_message(message, tag))
        self._advance(Phase.AWAITING_RESULT)
        frame = self.stream.recv()
        if frame.msg_type is MsgType.FD_REQUEST and not self.fd_sent:
            # The request lost the race against our decision timeout.
            self._send_fd()
            frame = self.stream.recv()
        if frame.msg_type is not MsgType.VERIFY_RESULT or len(frame.payload) != 1:
            raise self._unexpected(frame)
        self._advance(Phase.DONE)
        if frame.payload[0] != 1:
            raise Rejected("receiver rejected the message authentication code")
        return SendOutcome(True, self.fd_sent, tag)


@dataclass(frozen=True)
class ReceiveOutcome:
    accepted: bool
    signature: Signature
    fd_requested: bool
    message: bytes


class ReceiverSession(_Session):
    steps = _RECEIVER_STEPS

    def __init__(
        self,
        stream: FrameStream,
        cache: FdCache,
        evaluate_cap: int = DEFAULT_EVALUATE_CAP,
        evaluators: Optional[Callable[[Signature, FunctionDescription], Evaluator]] = None,
    ):
        super().__init__(stream)
        self.cache = cache
        self.evaluate_cap = evaluate_cap
        self.evaluators = evaluators or (lambda sig, fd: Evaluator(fd))

    def run(self) -> ReceiveOutcome:
        frame = self.stream.recv()
        if frame.msg_type is not MsgType.FD_SIGNATURE or len(frame.payload) != _SIG_PAYLOAD.size:
            raise self._unexpected(frame)
        digest, n = _SIG_PAYLOAD.unpack(frame.payload)
        sig = Signature(digest)
        if n > self.evaluate_cap:
            raise ScaleRefused(f"n={n} exceeds the receiver's evaluate cap {self.evaluate_cap}")
        early: Optional[Frame] = None
        fd = self.cache.get(sig)
        requested = fd is None
        if fd is None:
            self.stream.send(MsgType.FD_REQUEST)
            self._advance(Phase.AWAITING_FD)
            fd, early = self._await_fd(sig, n)
        self._advance(Phase.AWAITING_RESULT)
        frame = early or self.stream.recv()
        if frame.msg_type is not MsgType.MESSAGE:
            raise self._unexpected(frame)
        message, tag = decode_message(frame.payload, fd.n)
        expected = self.evaluators(sig, fd).tag(derive_input(message, fd.n))
        accepted = expected == tag
        self.stream.send(MsgType.VERIFY_RESULT, bytes([int(accepted)]))
        self._advance(Phase.DONE)
        return ReceiveOutcome(accepted, sig, requested, message)

    def _await_fd(self, sig: Signature, n: int) -> tuple[FunctionDescription, Optional[Frame]]:
        early = None
        while True:
            frame = self.stream.recv()
            if frame.msg_type is MsgType.MESSAGE and early is None:
                early = frame
                continue
            if frame.msg_type is not MsgType.FD_RESPONSE:
                raise self._unexpected(frame)
            fd = decode_fd(frame.payload)
            if fd_signature(fd) != sig:
                raise SignatureMismatch(f"delivered description does not hash to {sig.hex()}")
            if fd.n != n:
                raise ProtocolViolation(f"announced n={n} but description has n={fd.n}")
            self.cache.insert(sig, fd)
            return fd, early


def sender_session(
    sock: socket.socket,
    fd: FunctionDescription,
    message: bytes,
    decision_timeout: float = DECISION_TIMEOUT,
    observer=None,
) -> SendOutcome:
    return SenderSession(FrameStream(sock, observer), fd, decision_timeout=decision_timeout).run(message)


def receiver_session(
    sock: socket.socket,
    cache: FdCache,
    evaluate_cap: int = DEFAULT_EVALUATE_CAP,
    observer=None,
) -> ReceiveOutcome:
    return ReceiverSession(FrameStream(sock, observer), cache, evaluate_cap).run()


class EvaluatorPool:
    """Configured evaluators per signature, shared by concurrent sessions."""

    def __init__(self, capacity: int = 16):
        self.capacity = capacity
        self._lock = threading.Lock()
        self._evaluators: dict[Signature, Evaluator] = {}

    def __call__(self, sig: Signature, fd: FunctionDescription) -> Evaluator:
        with self._lock:
            ev = self._evaluators.get(sig)
        if ev is None:
            ev = Evaluator(fd)
            with self._lock:
                if len(self._evaluators) >= self.capacity:
                    self._evaluators.pop(next(iter(self._evaluators)))
                self._evaluators[sig] = ev
        return ev


class ReceiverServer(socketserver.ThreadingTCPServer):
    """TCP receiver: one session per connection, one shared cache."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        cache: FdCache,
        evaluate_cap: int = DEFAULT_EVALUATE_CAP,
        on_result: Optional[Callable[[Optional[ReceiveOutcome], Optional[Exception]], None]] = None,
    ):
        self.cache = cache
        self.evaluate_cap = evaluate_cap
        self.on_result = on_result
        self.evaluators = EvaluatorPool()
        super().__init__(address, _ReceiverHandler)


class _ReceiverHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        server: ReceiverServer = self.server  # type: ignore[assignment]
        session = ReceiverSession(
            FrameStream(self.request), server.cache, server.evaluate_cap, server.evaluators
        )
        try:
            outcome = session.run()
        except Exception as exc:
            log.warning("session from %s failed: %s", self.client_address, exc)
            if server.on_result:
                server.on_result(None, exc)
            return
        log.info(
            "session from %s: %s (fd requested: %s)",
            self.client_address,
            "accepted" if outcome.accepted else "rejected",
            outcome.fd_requested,
        )
        if server.on_result:
            server.on_result(outcome, None)
