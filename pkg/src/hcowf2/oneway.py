"""The one-way function: n*n chained computations of H over the set Q.

``s_-1 = 0``, ``s_0 = p``, ``s_{i+1} = H(s_i, Q[i]) xor s_{i-1}``; the tag is
``s_{n*n}``.  Each step is a Feistel round on the pair (s_i, s_{i-1}), so it
is a bijection for fixed q; without the xor the chain contracts to a single
tag at n = 16.  Every computation sees a different q, so no (state, q) input
pair of H can repeat.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import _kernel
from .bits import Bitvec, array_to_bitvec, packed_size
from .circuit_core import (
    CharacteristicFunction,
    check_parameters,
    default_k,
    find_clause_conflicts,
    generate_characteristic_function,
    make_rng,
    REJECTION_FACTOR,
)
from .errors import DescriptionInvalid, GenerationExhausted, InvariantViolation, WidthMismatch

FORMAT_VERSION = 1


def max_q_multiplicity(n: int) -> int:
    """How often one value may appear in Q.

    Q needs n*n entries of n bits.  Only n = 3 has n*n > 2**n (9 > 8); there
    the entries are spread as evenly as possible, everywhere else they are
    pairwise distinct.
    """
    if n * n > 2**n:
        return math.ceil(n * n / 2**n)
    return 1


@dataclass(frozen=True, eq=False)
class FunctionDescription:
    h: CharacteristicFunction
    q_values: np.ndarray  # (n*n, ceil(n/8)) uint8, LSB-first packed
    version: int = FORMAT_VERSION
    seed: Optional[int] = None
    _checked: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.h.n
        q = np.array(self.q_values, dtype=np.uint8)
        if q.shape != (n * n, packed_size(n)):
            raise DescriptionInvalid(f"Q must have shape {(n * n, packed_size(n))}, got {q.shape}")
        q.setflags(write=False)
        object.__setattr__(self, "q_values", q)

    @property
    def n(self) -> int:
        return self.h.n

    @property
    def k(self) -> int:
        return self.h.k

    @cached_property
    def q_set(self) -> tuple[Bitvec, ...]:
        return tuple(Bitvec.from_bytes(row.tobytes(), self.n) for row in self.q_values)

    @cached_property
    def q_bits(self) -> np.ndarray:
        bits = np.unpackbits(self.q_values, axis=1, bitorder="little")[:, : self.n]
        return np.ascontiguousarray(bits)

    def validate(self) -> None:
        """Raise InvariantViolation unless H and Q satisfy every invariant."""
        if self._checked:
            return
        h = self.h
        n, k = h.n, h.k
        try:
            check_parameters(n, k)
        except ValueError as exc:
            raise InvariantViolation(str(exc)) from exc
        if h.variables.min() < 0 or h.variables.max() >= 2 * n:
            raise InvariantViolation("literal variable outside [0, 2n)")
        if np.any(np.diff(h.variables, axis=1) <= 0):
            raise InvariantViolation("clause variables are not strictly increasing")
        if np.any(h.negated > 1):
            raise InvariantViolation("negation flag other than 0/1")
        conflicts = find_clause_conflicts(h.variables, h.negated)
        if conflicts:
            i, j = conflicts[0]
            raise InvariantViolation(
                f"clauses {i} and {j} are duplicates or a reducible pair ({len(conflicts)} conflicts)"
            )
        spare = packed_size(n) * 8 - n
        if spare and np.any(self.q_values[:, -1] >> (8 - spare)):
            raise InvariantViolation("Q entry has bits set beyond width n")
        counts = Counter(row.tobytes() for row in self.q_values)
        worst = max(counts.values())
        if worst > max_q_multiplicity(n):
            raise InvariantViolation(f"Q repeats a value {worst} times")
        self._checked.append(True)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FunctionDescription):
            return NotImplemented
        return (
            self.version == other.version
            and self.h == other.h
            and np.array_equal(self.q_values, other.q_values)
        )

    def __hash__(self) -> int:
        return hash((self.version, self.h, self.q_values.tobytes()))

    def __repr__(self) -> str:
        return f"FunctionDescription(n={self.n}, k={self.k}, version={self.version})"


@dataclass(frozen=True)
class MacTag:
    value: Bitvec

    @property
    def width(self) -> int:
        return self.value.width

    def hex(self) -> str:
        return self.value.hex()

    def to_bytes(self) -> bytes:
        return self.value.to_bytes()

    @classmethod
    def from_hex(cls, text: str, n: int) -> MacTag:
        return cls(Bitvec.from_hex(text, n))


@dataclass(frozen=True)
class TraceStep:
    input_state: Bitvec
    q: Bitvec
    output: Bitvec


@dataclass(frozen=True, eq=False)
class EvalTrace:
    """Audit record of one evaluation.

    ``states[i]`` is the input state of computation ``i`` and ``states[i+1]``
    its output, each packed LSB-first; ``q_values[i]`` is its q.
    """

    n: int
    states: np.ndarray
    q_values: np.ndarray

    def __len__(self) -> int:
        return len(self.states) - 1

    @property
    def steps(self) -> list[TraceStep]:
        def bv(row):
            return Bitvec.from_bytes(row.tobytes(), self.n)

        return [
            TraceStep(bv(self.states[i]), bv(self.q_values[i]), bv(self.states[i + 1]))
            for i in range(len(self))
        ]

    @classmethod
    def from_steps(cls, steps: list[TraceStep]) -> EvalTrace:
        n = steps[0].input_state.width
        states = [steps[0].input_state.to_bytes()] + [s.output.to_bytes() for s in steps]
        q = [s.q.to_bytes() for s in steps]
        as_array = lambda rows: np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(len(rows), -1)
        return cls(n, as_array(states), as_array(q))


@dataclass(frozen=True)
class CollisionStats:
    input_repeats: int
    output_collisions: int
    estimated_c: float


class Evaluator:
    """A configured instance ready to compute tags (the software stand-in for
    the configured hardware component).  ``computations`` counts H calls."""

    def __init__(self, fd: FunctionDescription):
        fd.validate()
        self.fd = fd
        self.n = fd.n
        self.computations = 0
        self._occ = _kernel.occurrence_table(fd.h.variables, fd.h.negated, fd.n)
        self._q_bits = fd.q_bits

    def run(self, p: Bitvec, with_trace: bool = False) -> tuple[MacTag, Optional[EvalTrace]]:
        if p.width != self.n:
            raise WidthMismatch(f"p must be {self.n} bits, got {p.width}")
        n2 = self.n * self.n
        states = np.zeros((n2 + 1 if with_trace else 0, self.n), dtype=np.uint8)
        out, steps = _kernel.chain(self._occ, self._q_bits, p.to_array(), states)
        self.computations += int(steps)
        tag = MacTag(array_to_bitvec(out))
        if not with_trace:
            return tag, None
        packed = np.packbits(states, axis=1, bitorder="little")
        return tag, EvalTrace(self.n, packed, self.fd.q_values)

    def tag(self, p: Bitvec) -> MacTag:
        return self.run(p)[0]


def evaluate(fd: FunctionDescription, p: Bitvec, with_trace: bool = False) -> tuple[MacTag, Optional[EvalTrace]]:
    return Evaluator(fd).run(p, with_trace)


def derive_input(message: bytes, n: int) -> Bitvec:
    """First n bits (LSB-first) of SHA-256(message) || SHA-256(message || 1) || ...

    The counter is a 4-byte big-endian suffix; block 0 is the plain digest.
    """
    need = packed_size(n)
    blocks = [hashlib.sha256(message).digest()]
    counter = 1
    while len(blocks) * 32 < need:
        blocks.append(hashlib.sha256(message + counter.to_bytes(4, "big")).digest())
        counter += 1
    value = int.from_bytes(b"".join(blocks)[:need], "little")
    return Bitvec(n, value & ((1 << n) - 1))


def check_uniqueness(trace: EvalTrace) -> CollisionStats:
    """Count repeated (state, q) inputs and outputs equal to an earlier output.

    ``estimated_c`` scales the observed collision rate per pair of
    computations to the 2**-n baseline: ``collisions * 2**n / C(steps, 2)``.
    """
    steps = len(trace)
    seen_inputs: set[bytes] = set()
    seen_outputs: set[bytes] = set()
    input_repeats = 0
    output_collisions = 0
    for i in range(steps):
        key = trace.states[i].tobytes() + trace.q_values[i].tobytes()
        if key in seen_inputs:
            input_repeats += 1
        seen_inputs.add(key)
        out = trace.states[i + 1].tobytes()
        if out in seen_outputs:
            output_collisions += 1
        seen_outputs.add(out)
    pairs = steps * (steps - 1) // 2
    estimated_c = output_collisions * 2.0**trace.n / pairs if pairs else 0.0
    return CollisionStats(input_repeats, output_collisions, estimated_c)


def generate_q_set(seed: int | bytes, n: int) -> np.ndarray:
    """n*n random n-bit values, packed, honouring ``max_q_multiplicity``."""
    rng = make_rng(seed, 1)
    total = n * n
    width = packed_size(n)
    spare = width * 8 - n
    top_mask = 0xFF >> spare
    if max_q_multiplicity(n) > 1:
        values = []
        while len(values) < total:
            values.extend(rng.permutation(2**n).tolist())
        values = values[:total]
        return np.array([[v] for v in values], dtype=np.uint8).reshape(total, width)
    rows: list[bytes] = []
    seen: set[bytes] = set()
    rejected_run = 0
    while len(rows) < total:
        batch = rng.integers(0, 256, size=(max(16, total - len(rows)), width), dtype=np.uint8)
        batch[:, -1] &= top_mask
        for row in batch:
            key = row.tobytes()
            if key in seen:
                rejected_run += 1
                if rejected_run > REJECTION_FACTOR * total:
                    raise GenerationExhausted(f"could not draw {total} distinct {n}-bit values")
                continue
            rejected_run = 0
            seen.add(key)
            rows.append(key)
            if len(rows) == total:
                break
    return np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(total, width).copy()


def generate_fd(seed: int | bytes, n: int, k: Optional[int] = None) -> FunctionDescription:
    if k is None:
        k = default_k(n)
    h = generate_characteristic_function(seed, n, k)
    q = generate_q_set(seed, n)
    if isinstance(seed, (bytes, bytearray)):
        seed = int.from_bytes(seed, "big")
    return FunctionDescription(h, q, seed=seed)
