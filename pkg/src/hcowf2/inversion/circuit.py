"""Gate-level circuits and the unrolled inversion circuit.

References are plain integers: ``0 .. inputs-1`` name the free inputs and
``inputs + g`` names gate ``g``.  Gates only refer to inputs or to earlier
gates, so a circuit is acyclic by construction.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ScaleRefused, WidthMismatch
from ..oneway import FunctionDescription, MacTag

AND2, OR2, NOT, CONST = "AND2", "OR2", "NOT", "CONST"

DEFAULT_CIRCUIT_CAP = 16


@dataclass(frozen=True)
class Gate:
    kind: str
    a: int = -1  # operand, or the constant value for CONST
    b: int = -1


@dataclass
class Circuit:
    inputs: int
    gates: list[Gate] = field(default_factory=list)
    output: int = -1

    @property
    def size(self) -> int:
        return len(self.gates)

    def kind_counts(self) -> Counter:
        return Counter(g.kind for g in self.gates)

    def simulate(self, assignment: Sequence[int]) -> bool:
        if len(assignment) != self.inputs:
            raise WidthMismatch(f"circuit has {self.inputs} inputs, got {len(assignment)} values")
        values = [bool(v) for v in assignment]
        for g in self.gates:
            if g.kind == AND2:
                values.append(values[g.a] and values[g.b])
            elif g.kind == OR2:
                values.append(values[g.a] or values[g.b])
            elif g.kind == NOT:
                values.append(not values[g.a])
            else:
                values.append(bool(g.a))
        return values[self.output]


class CircuitBuilder:
    def __init__(self, inputs: int):
        self.circuit = Circuit(inputs)
        self._consts: dict[int, int] = {}

    def _add(self, gate: Gate) -> int:
        ref = self.circuit.inputs + len(self.circuit.gates)
        for operand in (gate.a, gate.b) if gate.kind != CONST else ():
            if operand >= ref:
                raise ValueError("gate operand must precede the gate")
        self.circuit.gates.append(gate)
        return ref

    def const(self, value: int) -> int:
        value = int(bool(value))
        if value not in self._consts:
            self._consts[value] = self._add(Gate(CONST, value))
        return self._consts[value]

    def and2(self, a: int, b: int) -> int:
        return self._add(Gate(AND2, a, b))

    def or2(self, a: int, b: int) -> int:
        return self._add(Gate(OR2, a, b))

    def not1(self, a: int) -> int:
        return self._add(Gate(NOT, a))

    def xor2(self, a: int, b: int) -> int:
        # (a | b) & ~(a & b)
        return self.and2(self.or2(a, b), self.not1(self.and2(a, b)))

    def and_all(self, refs: Sequence[int]) -> int:
        acc = refs[0]
        for r in refs[1:]:
            acc = self.and2(acc, r)
        return acc

    def or_all(self, refs: Sequence[int]) -> int:
        acc = refs[0]
        for r in refs[1:]:
            acc = self.or2(acc, r)
        return acc

    def finish(self, output: int) -> Circuit:
        self.circuit.output = output
        return self.circuit


def build_composed_circuit(
    fd: FunctionDescription, target: MacTag, cap: int = DEFAULT_CIRCUIT_CAP
) -> Circuit:
    """Unroll all n*n computations into one circuit that is true exactly for
    the inputs p whose tag equals ``target``.

    Each step instantiates the full clause circuitry of H: q-literals read
    CONST gates and are not folded, so per step the circuit holds n*n*(k-1)
    OR2, one NOT per negated literal and n*(n-1) AND2, plus 4 gates per bit
    for the xor with the state two steps back.
    """
    n = fd.n
    if n > cap:
        raise ScaleRefused(f"composed circuit for n={n} exceeds the construction cap {cap}")
    if target.width != n:
        raise WidthMismatch(f"target must be {n} bits, got {target.width}")
    fd.validate()
    b = CircuitBuilder(n)
    zero, one = b.const(0), b.const(1)
    variables = fd.h.variables.tolist()
    negated = fd.h.negated.tolist()
    state = list(range(n))
    prev = [zero] * n
    for q in fd.q_set:
        wires = state + [one if q[j] else zero for j in range(n)]
        clause_refs = []
        for vs, ss in zip(variables, negated):
            lits = [b.not1(wires[v]) if s else wires[v] for v, s in zip(vs, ss)]
            clause_refs.append(b.or_all(lits))
        outs = [b.and_all(clause_refs[j * n : (j + 1) * n]) for j in range(n)]
        state, prev = [b.xor2(o, p) for o, p in zip(outs, prev)], state
    matches = [s if target.value[j] else b.not1(s) for j, s in enumerate(state)]
    return b.finish(b.and_all(matches))
