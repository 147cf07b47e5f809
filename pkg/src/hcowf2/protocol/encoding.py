"""Canonical function-description bytes, signatures and the ``.hcw2`` store.

Layout (all integers big-endian)::

    magic   "HCW2"
    version u16
    n       u32
    k       u16
    clauses n*n*k u32 words, formula-major, literal = variable*2 + negated
    Q       n*n values of ceil(n/8) bytes each, LSB-first bit packing
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..bits import packed_size
from ..circuit_core import CharacteristicFunction
from ..errors import InvariantViolation, MalformedEncoding
from ..oneway import FORMAT_VERSION, FunctionDescription

MAGIC = b"HCW2"
HEADER = struct.Struct(">4sHIH")
FILE_SUFFIX = ".hcw2"
SUPPORTED_VERSIONS = frozenset({FORMAT_VERSION})


@dataclass(frozen=True, order=True)
class Signature:
    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError("signature digest must be 32 bytes")

    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> Signature:
        return cls(bytes.fromhex(text))

    def __str__(self) -> str:
        return self.hex()


def encoded_size(n: int, k: int) -> int:
    return HEADER.size + n * n * k * 4 + n * n * packed_size(n)


def encode_fd(fd: FunctionDescription) -> bytes:
    h = fd.h
    words = (h.variables.astype(">u4") << 1) | h.negated.astype(">u4")
    return b"".join(
        [
            HEADER.pack(MAGIC, fd.version, fd.n, fd.k),
            words.astype(">u4").tobytes(),
            np.ascontiguousarray(fd.q_values, dtype=np.uint8).tobytes(),
        ]
    )


def read_header(data: bytes) -> tuple[int, int, int]:
    """(version, n, k) from the first bytes of an encoding."""
    if len(data) < HEADER.size:
        raise MalformedEncoding(f"need at least {HEADER.size} header bytes, got {len(data)}")
    magic, version, n, k = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedEncoding(f"bad magic {magic!r}")
    if version not in SUPPORTED_VERSIONS:
        raise MalformedEncoding(f"unsupported format version {version}")
    return version, n, k


def decode_fd(data: bytes) -> FunctionDescription:
    """Parse and fully validate canonical bytes.

    MalformedEncoding means the bytes are not a description at all;
    InvariantViolation means they parse but describe an invalid instance.
    """
    data = bytes(data)
    version, n, k = read_header(data)
    if len(data) != encoded_size(n, k):
        raise MalformedEncoding(f"length {len(data)} does not match n={n}, k={k} ({encoded_size(n, k)})")
    if n < 2 or k < 1:
        raise InvariantViolation(f"invalid parameters n={n}, k={k}")
    clause_end = HEADER.size + n * n * k * 4
    words = np.frombuffer(data, dtype=">u4", count=n * n * k, offset=HEADER.size).astype(np.int64)
    variables = (words >> 1).reshape(n * n, k)
    negated = (words & 1).reshape(n * n, k)
    if variables.max() >= 2 * n:
        raise InvariantViolation("literal variable outside [0, 2n)")
    q = np.frombuffer(data, dtype=np.uint8, offset=clause_end).reshape(n * n, packed_size(n))
    try:
        h = CharacteristicFunction(n, k, variables, negated)
    except ValueError as exc:
        raise InvariantViolation(str(exc)) from exc
    fd = FunctionDescription(h, q, version=version)
    fd.validate()
    return fd


def fd_signature(fd: FunctionDescription) -> Signature:
    return Signature(hashlib.sha256(encode_fd(fd)).digest())


def save_fd(fd: FunctionDescription, path: str | Path) -> Signature:
    data = encode_fd(fd)
    Path(path).write_bytes(data)
    return Signature(hashlib.sha256(data).digest())


def load_fd(path: str | Path) -> FunctionDescription:
    return decode_fd(Path(path).read_bytes())
