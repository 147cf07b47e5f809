"""End-to-end inversion of small instances: circuit, CNF, self-reduction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..bits import Bitvec
from ..oneway import FunctionDescription, MacTag, evaluate
from .circuit import DEFAULT_CIRCUIT_CAP, build_composed_circuit
from .sat import DEFAULT_VAR_CAP, sat_decide
from .tseytin import TseytinStats, tseytin_stats, tseytin_transform


@dataclass(frozen=True)
class InversionResult:
    """``preimage`` is None when no input maps to the target.

    ``sat_calls`` counts every decision actually made (the initial
    satisfiability check plus at most one per input bit); ``model_sat_calls``
    is the 3n^4 count of the cost model, which recovers every variable.
    """

    preimage: Optional[Bitvec]
    sat_calls: int
    recovery_calls: int
    model_sat_calls: int
    stats: TseytinStats

    @property
    def found(self) -> bool:
        return self.preimage is not None


def invert_small(
    fd: FunctionDescription,
    target: MacTag,
    circuit_cap: int = DEFAULT_CIRCUIT_CAP,
    var_cap: int = DEFAULT_VAR_CAP,
) -> InversionResult:
    n = fd.n
    circuit = build_composed_circuit(fd, target, circuit_cap)
    formula = tseytin_transform(circuit)
    stats = tseytin_stats(circuit, formula)
    model_calls = 3 * n**4
    if not sat_decide(formula, var_cap=var_cap):
        return InversionResult(None, 1, 0, model_calls, stats)
    fixed: dict[int, bool] = {}
    recovery_calls = 0
    for var in range(n):
        recovery_calls += 1
        fixed[var] = not sat_decide(formula, {**fixed, var: False}, var_cap=var_cap).satisfiable
    p = Bitvec.from_bits([fixed[v] for v in range(n)])
    if evaluate(fd, p)[0] != target:
        raise AssertionError(f"self-reduction produced {p} which does not reproduce the target")
    return InversionResult(p, 1 + recovery_calls, recovery_calls, model_calls, stats)
