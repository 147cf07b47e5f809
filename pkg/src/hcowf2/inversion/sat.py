"""A small complete DPLL decision procedure.

Two watched literals per clause, chronological backtracking, and decisions
on the lowest-numbered unassigned variable (so on a Tseytin formula the
circuit inputs are decided first and everything else follows by
propagation).  Not meant to compete with real solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

from ..errors import ScaleRefused
from .tseytin import CnfFormula

DEFAULT_VAR_CAP = 20_000

UNASSIGNED = -1


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    assignment: Optional[tuple[bool, ...]] = None
    decisions: int = 0
    conflicts: int = 0

    def __bool__(self) -> bool:
        return self.satisfiable


class _Solver:
    def __init__(self, formula: CnfFormula):
        self.num_vars = formula.num_vars
        self.value = [UNASSIGNED] * formula.num_vars
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * formula.num_vars)]
        self.units: list[int] = []
        self.empty = False
        self.trail: list[int] = []
        self.decisions = 0
        self.conflicts = 0
        for raw in formula.clauses:
            clause = list(dict.fromkeys(raw))
            if any(x ^ 1 in clause for x in clause):
                continue  # tautology
            if not clause:
                self.empty = True
            elif len(clause) == 1:
                self.units.append(clause[0])
            else:
                self.watches[clause[0]].append(clause)
                self.watches[clause[1]].append(clause)

    def lit_value(self, x: int) -> int:
        v = self.value[x >> 1]
        return UNASSIGNED if v == UNASSIGNED else v ^ (x & 1)

    def assign(self, x: int) -> bool:
        """Make literal x true; False if it is already false."""
        current = self.lit_value(x)
        if current != UNASSIGNED:
            return current == 1
        self.value[x >> 1] = 1 ^ (x & 1)
        self.trail.append(x)
        return True

    def propagate(self, head: int) -> bool:
        value = self.value
        watches = self.watches
        while head < len(self.trail):
            false_lit = self.trail[head] ^ 1
            head += 1
            watching = watches[false_lit]
            i = 0
            while i < len(watching):
                clause = watching[i]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                other = clause[0]
                ov = value[other >> 1]
                if ov != UNASSIGNED and ov ^ (other & 1) == 1:
                    i += 1
                    continue
                for j in range(2, len(clause)):
                    cand = clause[j]
                    cv = value[cand >> 1]
                    if cv == UNASSIGNED or cv ^ (cand & 1) == 1:
                        clause[1], clause[j] = cand, false_lit
                        watches[cand].append(clause)
                        watching[i] = watching[-1]
                        watching.pop()
                        break
                else:
                    if ov == UNASSIGNED:
                        value[other >> 1] = 1 ^ (other & 1)
                        self.trail.append(other)
                        i += 1
                        continue
                    return False
        return True

    def solve(self, assumptions: Sequence[int]) -> Optional[tuple[bool, ...]]:
        if self.empty:
            return None
        for x in list(self.units) + list(assumptions):
            if not self.assign(x):
                return None
        if not self.propagate(0):
            return None
        # Decision stack entries: (trail length before the decision, literal, flipped?)
        stack: list[tuple[int, int, bool]] = []
        head = len(self.trail)
        cursor = 0
        while True:
            while cursor < self.num_vars and self.value[cursor] != UNASSIGNED:
                cursor += 1
            if cursor == self.num_vars:
                return tuple(v == 1 for v in self.value)
            decision = 2 * cursor + 1  # try False first
            self.decisions += 1
            stack.append((len(self.trail), decision, False))
            self.assign(decision)
            while not self.propagate(head):
                self.conflicts += 1
                while stack and stack[-1][2]:
                    stack.pop()
                if not stack:
                    return None
                mark, literal, _ = stack.pop()
                for x in self.trail[mark:]:
                    self.value[x >> 1] = UNASSIGNED
                del self.trail[mark:]
                stack.append((mark, literal ^ 1, True))
                self.assign(literal ^ 1)
                head = mark
                cursor = min(cursor, literal >> 1)
            head = len(self.trail)


def _assumption_literals(assumptions) -> list[int]:
    if assumptions is None:
        return []
    if isinstance(assumptions, Mapping):
        return [2 * v + (0 if val else 1) for v, val in assumptions.items()]
    return list(assumptions)


def sat_decide(
    formula: CnfFormula,
    assumptions: Mapping[int, bool] | Sequence[int] | None = None,
    var_cap: int = DEFAULT_VAR_CAP,
) -> SatResult:
    """Decide ``formula`` under a partial assignment.

    ``assumptions`` maps variable -> value, or is a sequence of literals.  A
    satisfying assignment covers every variable and satisfies every clause.
    """
    if formula.num_vars > var_cap:
        raise ScaleRefused(f"formula has {formula.num_vars} variables, cap is {var_cap}")
    solver = _Solver(formula)
    model = solver.solve(_assumption_literals(assumptions))
    return SatResult(model is not None, model, solver.decisions, solver.conflicts)


def iter_models(
    formula: CnfFormula, project: Sequence[int], var_cap: int = DEFAULT_VAR_CAP
) -> Iterator[tuple[bool, ...]]:
    """Distinct satisfying assignments restricted to ``project``, found by
    repeated solving with blocking clauses."""
    blocked = CnfFormula(formula.num_vars, list(formula.clauses))
    while True:
        result = sat_decide(blocked, var_cap=var_cap)
        if not result:
            return
        values = tuple(result.assignment[v] for v in project)
        yield values
        blocked.clauses.append(tuple(2 * v + int(val) for v, val in zip(project, values)))
