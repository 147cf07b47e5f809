import socket
import sys
import threading
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hcowf2 import generate_fd  # noqa: E402
from hcowf2.protocol import parse_frames  # noqa: E402


@pytest.fixture(scope="session")
def fd4():
    """The (seed=0, n=4, k=3) fixture used throughout."""
    return generate_fd(0, 4, 3)


@pytest.fixture(scope="session")
def fd16():
    return generate_fd(0, 16)


class Relay:
    """Frame-aware man in the middle between two socket pairs.

    Records every frame type in arrival order (both directions) and can
    rewrite payloads of frames travelling from sender to receiver.
    """

    def __init__(self, tamper=None):
        self.sender_sock, self._sender_side = socket.socketpair()
        self.receiver_sock, self._receiver_side = socket.socketpair()
        self.types: list[int] = []
        self.tamper = tamper
        self._lock = threading.Lock()
        self._threads = [
            threading.Thread(target=self._pump, args=(self._sender_side, self._receiver_side, True), daemon=True),
            threading.Thread(target=self._pump, args=(self._receiver_side, self._sender_side, False), daemon=True),
        ]
        for t in self._threads:
            t.start()

    def _pump(self, src, dst, upstream):
        buffer = b""
        while True:
            try:
                chunk = src.recv(65536)
            except OSError:
                chunk = b""
            if not chunk:
                try:
                    dst.shutdown(socket.SHUT_WR)
                except OSError:
                    pass
                return
            buffer += chunk
            frames, buffer = parse_frames(buffer)
            for frame in frames:
                with self._lock:
                    self.types.append(int(frame.msg_type))
                if upstream and self.tamper is not None:
                    frame = self.tamper(frame)
                try:
                    dst.sendall(frame.encode())
                except OSError:
                    return

    def close(self):
        for s in (self.sender_sock, self.receiver_sock, self._sender_side, self._receiver_side):
            s.close()


@pytest.fixture
def relay_factory():
    relays = []

    def make(tamper=None):
        r = Relay(tamper)
        relays.append(r)
        return r

    yield make
    for r in relays:
        r.close()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
