import random
import socket
import threading

import numpy as np
import pytest

from hcowf2 import FunctionDescription, generate_fd
from hcowf2.errors import (
    InvariantViolation,
    MalformedEncoding,
    ProtocolViolation,
    Rejected,
    SignatureMismatch,
    TransportError,
)
from hcowf2.protocol import (
    FdCache,
    Frame,
    FrameStream,
    MsgType,
    ReceiverSession,
    SenderSession,
    decode_fd,
    encode_fd,
    encoded_size,
    fd_signature,
    load_fd,
    parse_frames,
    read_header,
    receiver_session,
    save_fd,
    sender_session,
)
from hcowf2.protocol.session import decode_message, encode_message

FIXTURE_SIGNATURE = "0e16196d3ae382a6fe609277db72345865053147949be607d24637fc87b79391"


# -- encoding ---------------------------------------------------------------

def test_fixture_length(fd4):
    assert len(encode_fd(fd4)) == 220 == encoded_size(4, 3)


def test_round_trip(fd4, fd16):
    for fd in (fd4, fd16, generate_fd(5, 3, 3)):
        data = encode_fd(fd)
        back = decode_fd(data)
        assert back == fd
        assert encode_fd(back) == data


def test_one_polarity_changes_one_region(fd4):
    h = fd4.h
    negated = h.negated.copy()
    negated[7, 1] ^= 1
    other = FunctionDescription(type(h)(h.n, h.k, h.variables, negated), fd4.q_values)
    a, b = np.frombuffer(encode_fd(fd4), np.uint8), np.frombuffer(encode_fd(other), np.uint8)
    diff = np.flatnonzero(a != b)
    word = 12 + (7 * 3 + 1) * 4
    assert diff.tolist() == [word + 3]


def test_truncated_bytes(fd4):
    data = encode_fd(fd4)
    for cut in (0, 5, 12, 100, 219):
        with pytest.raises(MalformedEncoding):
            decode_fd(data[:cut])


def test_bad_magic_and_version(fd4):
    data = bytearray(encode_fd(fd4))
    data[0] ^= 0xFF
    with pytest.raises(MalformedEncoding):
        decode_fd(bytes(data))
    data = bytearray(encode_fd(fd4))
    data[5] = 99
    with pytest.raises(MalformedEncoding):
        read_header(bytes(data))


def test_duplicated_q_entry_is_an_invariant_violation(fd4):
    data = bytearray(encode_fd(fd4))
    q0 = 12 + 16 * 3 * 4
    data[q0 + 1] = data[q0]
    with pytest.raises(InvariantViolation):
        decode_fd(bytes(data))


def test_reducible_pair_is_an_invariant_violation(fd4):
    # Copy clause 0 over clause 1 with its last literal flipped.
    data = bytearray(encode_fd(fd4))
    c0, c1 = 12, 12 + 12
    data[c1 : c1 + 12] = data[c0 : c0 + 12]
    data[c1 + 11] ^= 1
    with pytest.raises(InvariantViolation):
        decode_fd(bytes(data))


def test_out_of_range_variable(fd4):
    data = bytearray(encode_fd(fd4))
    data[12:16] = (200).to_bytes(4, "big")
    with pytest.raises(InvariantViolation):
        decode_fd(bytes(data))


def test_file_store(tmp_path, fd4):
    path = tmp_path / "fixture.hcw2"
    sig = save_fd(fd4, path)
    assert sig == fd_signature(fd4)
    assert load_fd(path) == fd4


# -- signatures -------------------------------------------------------------

def test_fixture_signature_pinned(fd4):
    assert fd_signature(fd4).hex() == FIXTURE_SIGNATURE
    assert fd_signature(generate_fd(0, 4, 3)) == fd_signature(fd4)


def test_one_q_bit_changes_signature(fd4):
    q = fd4.q_values.copy()
    q[0, 0] ^= 0x80 >> 4  # bit 3 stays inside the 4-bit width
    other = FunctionDescription(fd4.h, q)
    assert fd_signature(other) != fd_signature(fd4)


# -- cache ------------------------------------------------------------------

def test_cache_rejects_wrong_key(fd4, fd16):
    cache = FdCache()
    with pytest.raises(SignatureMismatch):
        cache.insert(fd_signature(fd16), fd4)
    assert len(cache) == 0


def test_cache_lru_eviction():
    cache = FdCache(capacity=2)
    fds = [generate_fd(s, 3, 3) for s in range(3)]
    sigs = [cache.put(fd) for fd in fds[:2]]
    cache.get(sigs[0])
    sigs.append(cache.put(fds[2]))
    assert set(cache.keys()) == {sigs[0], sigs[2]}
    for sig in cache.keys():
        assert fd_signature(cache.get(sig)) == sig


def test_cache_directory_survives_eviction(tmp_path):
    cache = FdCache(capacity=1, directory=tmp_path)
    a, b = generate_fd(1, 4, 3), generate_fd(2, 4, 3)
    sa = cache.put(a)
    cache.put(b)
    assert cache.get(sa) == a
    fresh = FdCache(directory=tmp_path)
    assert fresh.get(sa) == a
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(
        f"{s.hex()}.hcw2" for s in (sa, fd_signature(b))
    )


def test_cache_ignores_misnamed_file(tmp_path, fd4):
    bogus = fd_signature(generate_fd(9, 4, 3))
    save_fd(fd4, tmp_path / f"{bogus.hex()}.hcw2")
    assert FdCache(directory=tmp_path).get(bogus) is None


def test_get_or_insert_fetches_once(fd4):
    cache = FdCache()
    calls = []
    sig = fd_signature(fd4)
    for _ in range(3):
        cache.get_or_insert(sig, lambda: calls.append(1) or fd4)
    assert len(calls) == 1


# -- framing ----------------------------------------------------------------

def test_frame_layout():
    assert Frame(MsgType.MESSAGE, b"ab").encode() == b"\x04\x00\x00\x00\x02ab"
    frames, rest = parse_frames(b"\x02\x00\x00\x00\x00\x05\x00\x00\x00\x01\x01\x04\x00")
    assert [(f.msg_type, f.payload) for f in frames] == [(MsgType.FD_REQUEST, b""), (MsgType.VERIFY_RESULT, b"\x01")]
    assert rest == b"\x04\x00"


def test_unknown_frame_type():
    with pytest.raises(ProtocolViolation):
        parse_frames(b"\x09\x00\x00\x00\x00")


def test_message_payload_round_trip(fd16):
    from hcowf2 import evaluate, derive_input

    tag = evaluate(fd16, derive_input(b"hello", 16))[0]
    assert decode_message(encode_message(b"hello", tag), 16) == (b"hello", tag)
    with pytest.raises(ProtocolViolation):
        decode_message(encode_message(b"hello", tag)[:-1], 16)


# -- sessions ---------------------------------------------------------------

def run_exchange(sender_sock, receiver_sock, fd, message, cache, decision_timeout=0.2, observer=None):
    box = {}

    def receive():
        try:
            box["outcome"] = receiver_session(receiver_sock, cache)
        except Exception as exc:  # surfaced below
            box["error"] = exc
            receiver_sock.shutdown(socket.SHUT_RDWR)

    t = threading.Thread(target=receive)
    t.start()
    try:
        sent = sender_session(sender_sock, fd, message, decision_timeout, observer)
    except Exception as exc:
        sent = exc
    t.join(10)
    return sent, box


def relay_exchange(relay, fd, message, cache, **kwargs):
    try:
        return run_exchange(relay.sender_sock, relay.receiver_sock, fd, message, cache, **kwargs)
    finally:
        relay.close()


def test_cold_then_warm_sequences(fd16, relay_factory):
    cache = FdCache()
    r1 = relay_factory()
    sent, box = relay_exchange(r1, fd16, b"first", cache)
    assert sent.accepted and sent.fd_sent
    assert box["outcome"].fd_requested
    assert r1.types == [0x01, 0x02, 0x03, 0x04, 0x05]

    r2 = relay_factory()
    sent, box = relay_exchange(r2, fd16, b"second", cache)
    assert sent.accepted and not sent.fd_sent
    assert not box["outcome"].fd_requested
    assert r2.types == [0x01, 0x04, 0x05]


def test_message_overtaking_request_still_verifies(fd16):
    # A zero decision timeout makes the sender race ahead of the request.
    a, b = socket.socketpair()
    with a, b:
        sent, box = run_exchange(a, b, fd16, b"race", FdCache(), decision_timeout=0.0)
    assert sent.accepted and sent.fd_sent
    assert box["outcome"].accepted


def test_hundred_round_trips_at_16():
    rnd = random.Random(16)
    cache = FdCache()
    for _ in range(100):
        fd = generate_fd(rnd.getrandbits(64), 16)
        message = rnd.randbytes(rnd.randrange(0, 200))
        a, b = socket.socketpair()
        with a, b:
            sent, box = run_exchange(a, b, fd, message, cache)
        assert sent.accepted, sent
        assert box["outcome"].accepted and box["outcome"].message == message


def _flip_message_byte(position, mask=0x01):
    def tamper(frame):
        if frame.msg_type is not MsgType.MESSAGE:
            return frame
        payload = bytearray(frame.payload)
        payload[4 + position] ^= mask
        return Frame(frame.msg_type, bytes(payload))

    return tamper


@pytest.mark.parametrize("mask", [0x01, 0x80, 0xFF])
def test_every_single_byte_tamper_is_rejected(fd16, relay_factory, mask):
    message = b"pay 100 to bob"
    cache = FdCache()
    cache.put(fd16)
    for position in range(len(message)):
        relay = relay_factory(_flip_message_byte(position, mask))
        sent, box = relay_exchange(relay, fd16, message, cache)
        assert isinstance(sent, Rejected)
        assert box["outcome"].accepted is False
        assert relay.types[-1] == 0x05


def test_substituted_description_is_rejected_and_not_cached(fd16, relay_factory):
    impostor = encode_fd(generate_fd(1, 16))

    def swap(frame):
        return Frame(frame.msg_type, impostor) if frame.msg_type is MsgType.FD_RESPONSE else frame

    cache = FdCache()
    sent, box = relay_exchange(relay_factory(swap), fd16, b"x", cache)
    assert isinstance(box["error"], SignatureMismatch)
    assert isinstance(sent, TransportError)
    assert len(cache) == 0
    assert fd_signature(fd16) not in cache


def test_transport_closed_after_signature(fd4):
    a, b = socket.socketpair()
    with a:

        def close_after_first():
            FrameStream(b).recv()
            b.close()

        t = threading.Thread(target=close_after_first)
        t.start()
        with pytest.raises(TransportError):
            sender_session(a, fd4, b"m", decision_timeout=2.0)
        t.join()


def test_receiver_sees_closed_transport(fd4):
    a, b = socket.socketpair()
    with b:
        FrameStream(a).send(MsgType.FD_SIGNATURE, fd_signature(fd4).digest + (4).to_bytes(4, "big"))
        a.close()
        with pytest.raises(TransportError):
            receiver_session(b, FdCache())


def test_out_of_phase_frame_is_a_violation(fd4):
    a, b = socket.socketpair()
    with a, b:
        FrameStream(a).send(MsgType.MESSAGE, b"")
        with pytest.raises(ProtocolViolation):
            ReceiverSession(FrameStream(b), FdCache()).run()


def test_sender_rejects_unexpected_reply(fd4):
    a, b = socket.socketpair()
    with a, b:
        FrameStream(b).send(MsgType.VERIFY_RESULT, b"\x01")
        with pytest.raises(ProtocolViolation):
            SenderSession(FrameStream(a), fd4).run(b"m")


def _wire_bytes(fd, message, warm):
    cache = FdCache()
    if warm:
        cache.put(fd)
    log = []
    a, b = socket.socketpair()
    with a, b:
        sent, _ = run_exchange(a, b, fd, message, cache, observer=lambda d, f: log.append((d, f.encode())))
    assert sent.accepted
    return log


@pytest.mark.parametrize("warm", [False, True])
def test_wire_bytes_are_deterministic(fd16, warm):
    assert _wire_bytes(fd16, b"same", warm) == _wire_bytes(fd16, b"same", warm)
