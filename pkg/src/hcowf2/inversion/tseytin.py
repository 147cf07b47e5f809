"""CNF formulas and the gate-by-gate Tseytin encoding.

A literal is ``2 * variable + negated``, the same packing the function
description uses for clause literals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .circuit import AND2, CONST, NOT, OR2, Circuit


def lit(var: int, negated: bool = False) -> int:
    return 2 * var + int(negated)


def neg(literal: int) -> int:
    return literal ^ 1


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[tuple[int, ...]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for clause in self.clauses:
            for literal in clause:
                if not 0 <= literal >> 1 < self.num_vars:
                    raise ValueError(f"literal {literal} outside {self.num_vars} variables")

    def evaluate(self, assignment) -> bool:
        return all(any(bool(assignment[x >> 1]) != bool(x & 1) for x in c) for c in self.clauses)

    def to_dimacs(self, out: TextIO, comments: Iterable[str] = ()) -> None:
        for line in comments:
            out.write(f"c {line}\n")
        out.write(f"p cnf {self.num_vars} {len(self.clauses)}\n")
        for clause in self.clauses:
            out.write(" ".join(str(-(x >> 1) - 1 if x & 1 else (x >> 1) + 1) for x in clause) + " 0\n")

    @classmethod
    def from_dimacs(cls, text: str) -> CnfFormula:
        num_vars = None
        clauses, current = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith(("c", "%")):
                continue
            if line.startswith("p"):
                _, fmt, nv, _nc = line.split()
                if fmt != "cnf":
                    raise ValueError(f"not a cnf header: {line!r}")
                num_vars = int(nv)
                continue
            for token in line.split():
                value = int(token)
                if value == 0:
                    clauses.append(tuple(current))
                    current = []
                else:
                    current.append(lit(abs(value) - 1, value < 0))
        if num_vars is None:
            raise ValueError("missing 'p cnf' header")
        if current:
            clauses.append(tuple(current))
        return cls(num_vars, clauses)


@dataclass(frozen=True)
class TseytinStats:
    """Constructed counts next to the 3m/3m accounting for the same circuit."""

    gates: int
    inputs: int
    aux_vars: int
    clauses: int

    @property
    def accounting_clauses(self) -> int:
        return 3 * self.gates

    @property
    def accounting_aux_vars(self) -> int:
        return 3 * self.gates


def tseytin_transform(circuit: Circuit) -> CnfFormula:
    """One auxiliary variable per gate (variable ``inputs + g``); AND2/OR2
    emit 3 clauses, NOT 2, CONST 1, plus a unit clause asserting the output."""
    clauses: list[tuple[int, ...]] = []
    base = circuit.inputs
    for g, gate in enumerate(circuit.gates):
        y = lit(base + g)
        if gate.kind == AND2:
            a, b = lit(gate.a), lit(gate.b)
            clauses += [(neg(y), a), (neg(y), b), (y, neg(a), neg(b))]
        elif gate.kind == OR2:
            a, b = lit(gate.a), lit(gate.b)
            clauses += [(y, neg(a)), (y, neg(b)), (neg(y), a, b)]
        elif gate.kind == NOT:
            a = lit(gate.a)
            clauses += [(neg(y), neg(a)), (y, a)]
        elif gate.kind == CONST:
            clauses.append((y,) if gate.a else (neg(y),))
        else:
            raise ValueError(f"unknown gate kind {gate.kind!r}")
    clauses.append((lit(circuit.output),))
    return CnfFormula(base + len(circuit.gates), clauses)


def tseytin_stats(circuit: Circuit, formula: CnfFormula) -> TseytinStats:
    return TseytinStats(
        gates=circuit.size,
        inputs=circuit.inputs,
        aux_vars=formula.num_vars - circuit.inputs,
        clauses=len(formula.clauses),
    )
