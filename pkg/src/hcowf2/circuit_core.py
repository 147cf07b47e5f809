"""The characteristic random function H and its clause structure.

H maps an n-bit ``p`` and an n-bit ``q`` to an n-bit output.  Output bit ``j``
is the conjunction of ``n`` width-``k`` clauses over the ``2n`` shared input
variables; variables ``[0, n)`` read ``p`` and ``[n, 2n)`` read ``q``.

Clauses are stored in two parallel arrays of shape ``(n*n, k)`` in
formula-major order (clause ``c`` of output bit ``j`` is row ``j*n + c``):
the sorted variable indices and the negation flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .bits import Bitvec, array_to_bitvec
from .errors import GenerationExhausted, ParameterError, WidthMismatch

REJECTION_FACTOR = 1000


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    negated: bool = False

    def encode(self) -> int:
        return self.variable * 2 + int(self.negated)

    @classmethod
    def decode(cls, word: int) -> Literal:
        return cls(word >> 1, bool(word & 1))

    def __str__(self) -> str:
        return f"{'~' if self.negated else ''}x{self.variable}"


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals over pairwise distinct variables, kept sorted."""

    literals: tuple[Literal, ...]

    def __post_init__(self) -> None:
        lits = tuple(sorted(self.literals, key=lambda lit: lit.variable))
        variables = [lit.variable for lit in lits]
        if len(set(variables)) != len(variables):
            raise ParameterError(f"clause repeats a variable: {variables}")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *literals: Literal) -> Clause:
        return cls(tuple(literals))

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(lit.variable for lit in self.literals)

    @property
    def polarity(self) -> tuple[bool, ...]:
        return tuple(lit.negated for lit in self.literals)

    def canonical(self) -> Clause:
        return Clause(self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __str__(self) -> str:
        return "(" + " | ".join(str(lit) for lit in self.literals) + ")"


@dataclass(frozen=True)
class OutputFormula:
    clauses: tuple[Clause, ...]


@dataclass(frozen=True)
class GateCountModel:
    or_gates: int
    and_gates: int
    not_gates: int

    @property
    def total(self) -> int:
        return self.or_gates + self.and_gates + self.not_gates


def default_k(n: int) -> int:
    """Clause width that makes each output bit roughly unbiased.

    A conjunction of n clauses of width k is true with probability about
    exp(-n / 2**k), which is 1/2 when 2**k = n / ln 2.
    """
    return max(3, round(math.log2(n / math.log(2))))


def check_parameters(n: int, k: int) -> None:
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if k <= 2:
        raise ParameterError(f"clause width k must be > 2, got {k}")
    if k > 2 * n:
        raise ParameterError(f"clause width k={k} exceeds the 2n={2 * n} available variables")


class CharacteristicFunction:
    """One instance of H.  Immutable; the backing arrays are read-only."""

    def __init__(self, n: int, k: int, variables: np.ndarray, negated: np.ndarray):
        check_parameters(n, k)
        variables = np.array(variables, dtype=np.int32).reshape(n * n, k)
        negated = np.array(negated, dtype=np.uint8).reshape(n * n, k)
        variables.setflags(write=False)
        negated.setflags(write=False)
        self.n = n
        self.k = k
        self.variables = variables
        self.negated = negated

    @classmethod
    def from_formulas(cls, formulas: Sequence[OutputFormula]) -> CharacteristicFunction:
        n = len(formulas)
        if n == 0 or any(len(f.clauses) != n for f in formulas):
            raise ParameterError("need exactly n formulas of exactly n clauses each")
        widths = {len(c) for f in formulas for c in f.clauses}
        if len(widths) != 1:
            raise ParameterError(f"all clauses must share one width, got {sorted(widths)}")
        (k,) = widths
        clauses = [c for f in formulas for c in f.clauses]
        variables = [[lit.variable for lit in c.literals] for c in clauses]
        negated = [[int(lit.negated) for lit in c.literals] for c in clauses]
        return cls(n, k, np.array(variables), np.array(negated))

    @cached_property
    def formulas(self) -> tuple[OutputFormula, ...]:
        rows = self.clauses
        return tuple(OutputFormula(rows[j * self.n : (j + 1) * self.n]) for j in range(self.n))

    @cached_property
    def clauses(self) -> tuple[Clause, ...]:
        """All n*n clauses in formula-major order (the set C)."""
        return tuple(
            Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(vs, ss)))
            for vs, ss in zip(self.variables.tolist(), self.negated.tolist())
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CharacteristicFunction):
            return NotImplemented
        return (
            self.n == other.n
            and self.k == other.k
            and np.array_equal(self.variables, other.variables)
            and np.array_equal(self.negated, other.negated)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.variables.tobytes(), self.negated.tobytes()))

    def __repr__(self) -> str:
        return f"CharacteristicFunction(n={self.n}, k={self.k})"


def is_reducible_pair(c: Clause, c2: Clause) -> bool:
    """True iff both clauses share a variable set and differ in exactly one sign."""
    if c.variables != c2.variables:
        return False
    return sum(a != b for a, b in zip(c.polarity, c2.polarity)) == 1


def _polarity_mask(row: Sequence[int]) -> int:
    mask = 0
    for i, s in enumerate(row):
        if s:
            mask |= 1 << i
    return mask


def _conflicts(mask: int, existing: Iterable[int]) -> bool:
    """Duplicate (zero differing signs) or reducible (exactly one)."""
    return any((mask ^ other).bit_count() <= 1 for other in existing)


def find_clause_conflicts(variables: np.ndarray, negated: np.ndarray) -> list[tuple[int, int]]:
    """Index pairs (i, j), i < j, that are duplicates or reducible pairs.

    Only clauses sharing a variable set can conflict, so the pairwise check is
    restricted to groups found by a vectorized unique over variable rows.
    """
    if len(variables) < 2:
        return []
    rows = np.ascontiguousarray(variables, dtype=np.int32)
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    shared = np.flatnonzero(counts[inverse] > 1)
    groups: dict[int, list[int]] = {}
    for idx in shared.tolist():
        groups.setdefault(int(inverse[idx]), []).append(idx)
    masks = {idx: _polarity_mask(negated[idx]) for idx in shared.tolist()}
    bad = []
    for members in groups.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, j = members[a], members[b]
                if (masks[i] ^ masks[j]).bit_count() <= 1:
                    bad.append((i, j))
    return sorted(bad)


def make_rng(seed: int | bytes, stream: int = 0) -> np.random.Generator:
    """Deterministic generator for a 256-bit seed; ``stream`` selects an
    independent substream (0: clauses, 1: the parameter set Q)."""
    if isinstance(seed, (bytes, bytearray)):
        seed = int.from_bytes(seed, "big")
    if not 0 <= seed < 1 << 256:
        raise ParameterError("seed must be a 256-bit non-negative value")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _draw_candidates(rng: np.random.Generator, n: int, k: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Up to ``size`` canonical random clauses (may return fewer)."""
    width = 2 * n
    if k * (k - 1) <= 4 * n:
        # Sparse regime: sample with replacement, drop rows with a repeat.
        variables = np.sort(rng.integers(0, width, size=(size, k), dtype=np.int64), axis=1)
        ok = np.all(np.diff(variables, axis=1) != 0, axis=1)
    else:
        variables = np.sort(np.argsort(rng.random((size, width)), axis=1)[:, :k], axis=1)
        ok = np.ones(size, dtype=bool)
    negated = rng.integers(0, 2, size=(size, k), dtype=np.uint8)
    return variables[ok].astype(np.int32), negated[ok]


def generate_clause(rng: np.random.Generator, n: int, k: int) -> Clause:
    check_parameters(n, k)
    while True:
        variables, negated = _draw_candidates(rng, n, k, 1)
        if len(variables):
            return Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(variables[0], negated[0])))


def generate_characteristic_function(seed: int | bytes, n: int, k: int | None = None) -> CharacteristicFunction:
    """Draw n*n random canonical clauses, resampling any candidate that would
    duplicate an accepted clause or form a reducible pair with one."""
    if k is None:
        k = default_k(n)
    check_parameters(n, k)
    rng = make_rng(seed, 0)
    total = n * n
    limit = REJECTION_FACTOR * total
    acc_vars = np.empty((0, k), dtype=np.int32)
    acc_neg = np.empty((0, k), dtype=np.uint8)
    rejected_run = 0
    while len(acc_vars) < total:
        need = total - len(acc_vars)
        cand_vars, cand_neg = _draw_candidates(rng, n, k, max(64, need + need // 8))
        if not len(cand_vars):
            continue
        accept = _accept_flags(acc_vars, acc_neg, cand_vars, cand_neg)
        for ok in accept:
            if ok:
                rejected_run = 0
            else:
                rejected_run += 1
                if rejected_run > limit:
                    raise GenerationExhausted(
                        f"{limit} consecutive rejections generating H for n={n}, k={k}"
                    )
        keep = np.flatnonzero(accept)[:need]
        acc_vars = np.concatenate([acc_vars, cand_vars[keep]])
        acc_neg = np.concatenate([acc_neg, cand_neg[keep]])
    return CharacteristicFunction(n, k, acc_vars, acc_neg)


def _accept_flags(acc_vars, acc_neg, cand_vars, cand_neg) -> np.ndarray:
    """Sequential accept/reject of candidates against accepted clauses and
    earlier accepted candidates, computed group-wise by variable set."""
    rows = np.ascontiguousarray(np.concatenate([acc_vars, cand_vars]))
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    offset = len(acc_vars)
    flags = np.ones(len(cand_vars), dtype=bool)
    shared = np.flatnonzero(counts[inverse] > 1)
    groups: dict[int, list[int]] = {}
    for idx in shared.tolist():
        gid = int(inverse[idx])
        row_neg = acc_neg[idx] if idx < offset else cand_neg[idx - offset]
        mask = _polarity_mask(row_neg.tolist())
        members = groups.setdefault(gid, [])
        if idx < offset:
            members.append(mask)
        elif _conflicts(mask, members):
            flags[idx - offset] = False
        else:
            members.append(mask)
    return flags


def eval_H_bits(h: CharacteristicFunction, x: np.ndarray) -> np.ndarray:
    """H on the concatenated 2n-bit input array (p bits then q bits)."""
    literal_values = x[h.variables] ^ h.negated
    clause_values = literal_values.any(axis=1)
    return clause_values.reshape(h.n, h.n).all(axis=1).astype(np.uint8)


def eval_H(h: CharacteristicFunction, p: Bitvec, q: Bitvec) -> Bitvec:
    if p.width != h.n or q.width != h.n:
        raise WidthMismatch(f"H expects two {h.n}-bit inputs, got widths {p.width} and {q.width}")
    x = np.concatenate([p.to_array(), q.to_array()])
    return array_to_bitvec(eval_H_bits(h, x))


def gate_count(h: CharacteristicFunction) -> GateCountModel:
    """Structural gate model: per clause (k-1) OR2 plus one NOT per negated
    literal; per output bit (n-1) AND2."""
    n, k = h.n, h.k
    return GateCountModel(
        or_gates=n * n * (k - 1),
        and_gates=n * (n - 1),
        not_gates=int(h.negated.sum(dtype=np.int64)),
    )
