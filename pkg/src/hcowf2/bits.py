"""Fixed-width bit vectors.

Bit 0 is the least significant bit.  The packed byte form is LSB-first:
bit ``i`` lives in byte ``i // 8`` at position ``i % 8``, which is exactly a
little-endian integer encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, order=True)
class Bitvec:
    width: int
    value: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.value < 0 or self.value >> self.width:
            raise ValueError(f"value {self.value:#x} does not fit in {self.width} bits")

    @classmethod
    def zeros(cls, width: int) -> Bitvec:
        return cls(width, 0)

    @classmethod
    def ones(cls, width: int) -> Bitvec:
        return cls(width, (1 << width) - 1)

    @classmethod
    def from_bits(cls, bits) -> Bitvec:
        value = 0
        for i, b in enumerate(bits):
            if b:
                value |= 1 << i
        return cls(len(bits), value)

    @classmethod
    def from_bytes(cls, data: bytes, width: int) -> Bitvec:
        if len(data) != packed_size(width):
            raise ValueError(f"expected {packed_size(width)} bytes for width {width}, got {len(data)}")
        return cls(width, int.from_bytes(data, "little"))

    @classmethod
    def from_hex(cls, text: str, width: int) -> Bitvec:
        return cls.from_bytes(bytes.fromhex(text), width)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise IndexError(i)
        return (self.value >> i) & 1

    def __len__(self) -> int:
        return self.width

    def bits(self) -> list[int]:
        return [(self.value >> i) & 1 for i in range(self.width)]

    def to_array(self) -> np.ndarray:
        """Unpacked uint8 array of length ``width``, index 0 = LSB."""
        packed = np.frombuffer(self.to_bytes(), dtype=np.uint8)
        return np.unpackbits(packed, bitorder="little")[: self.width].copy()

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(packed_size(self.width), "little")

    def hex(self) -> str:
        return self.to_bytes().hex()

    def flip(self, i: int) -> Bitvec:
        return Bitvec(self.width, self.value ^ (1 << i))

    def hamming(self, other: Bitvec) -> int:
        return (self.value ^ other.value).bit_count()

    def __repr__(self) -> str:
        return f"Bitvec({self.width}, 0x{self.value:x})"


def packed_size(width: int) -> int:
    return (width + 7) // 8


def array_to_bitvec(bits: np.ndarray) -> Bitvec:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return Bitvec(len(bits), int.from_bytes(packed.tobytes(), "little"))
