"""Analytical size and time accounting for inverting the function with SAT.

All quantities follow the 3-CNF accounting of the unrolled circuit: 3n^4
clauses and 3n^4 + n variables, three literals per clause, each literal
taking log2(variables) + 1 bits.  A machine scans ``bytes_per_cycle`` bytes
of formula per clock cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..errors import InsufficientCluster, ParameterError

HOURS_PER_YEAR = 8760
TB = 10**12
TIB = 2**40


@dataclass(frozen=True)
class FormulaSizeReport:
    n: int
    variables: int
    clauses: int
    bits_per_literal: float
    bits_per_clause: float
    total_bits: float
    ceil_log: bool = False

    @property
    def total_bytes(self) -> float:
        return self.total_bits / 8


@dataclass(frozen=True)
class MachineModel:
    clock_hz: float = 4e9
    bytes_per_cycle: float = 1.0
    node_memory_bytes: float = 1e12

    def __post_init__(self) -> None:
        for name in ("clock_hz", "bytes_per_cycle", "node_memory_bytes"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")

    def scan_seconds(self, nbytes: float) -> float:
        return nbytes / (self.clock_hz * self.bytes_per_cycle)


@dataclass(frozen=True)
class ClusterModel:
    nodes: int = 1000
    machine: MachineModel = field(default_factory=MachineModel)

    def __post_init__(self) -> None:
        if self.nodes < 1:
            raise ParameterError("a cluster needs at least one node")


@dataclass(frozen=True)
class CostReport:
    n: int
    single_scan_seconds: float
    sat_calls: float

    @property
    def single_scan_hours(self) -> float:
        return self.single_scan_seconds / 3600

    @property
    def total_hours(self) -> float:
        return self.single_scan_hours * self.sat_calls

    @property
    def total_years(self) -> float:
        return self.total_hours / HOURS_PER_YEAR


class Strategy(str, Enum):
    FORMULA = "formula"
    SEARCH_SPACE = "search_space"


@dataclass(frozen=True)
class PartitionReport:
    strategy: Strategy
    partitions: int
    bytes_per_node: float
    min_wall_seconds: float
    notes: str


def formula_stats(n: int, ceil_log: bool = False) -> FormulaSizeReport:
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    clauses = 3 * n**4
    variables = clauses + n
    log_vars = math.ceil(math.log2(variables)) if ceil_log else math.log2(variables)
    bits_per_literal = log_vars + 1
    bits_per_clause = 3 * bits_per_literal
    return FormulaSizeReport(
        n=n,
        variables=variables,
        clauses=clauses,
        bits_per_literal=bits_per_literal,
        bits_per_clause=bits_per_clause,
        total_bits=clauses * bits_per_clause,
        ceil_log=ceil_log,
    )


def inversion_cost(n: int, machine: MachineModel = MachineModel(), ceil_log: bool = False) -> CostReport:
    """One full scan of the formula per SAT decision, 3n^4 decisions under
    self-reduction (one per variable of the formula)."""
    size = formula_stats(n, ceil_log)
    return CostReport(
        n=n,
        single_scan_seconds=machine.scan_seconds(size.total_bytes),
        sat_calls=float(3 * n**4),
    )


def partition_plan(
    report: FormulaSizeReport, cluster: ClusterModel, strategy: Strategy | str
) -> PartitionReport:
    strategy = Strategy(strategy)
    machine = cluster.machine
    total = report.total_bytes
    full_scan = machine.scan_seconds(total)
    if strategy is Strategy.FORMULA:
        partitions = max(1, math.ceil(total / machine.node_memory_bytes))
        if partitions > cluster.nodes:
            raise InsufficientCluster(
                f"formula of {total:.3e} bytes needs {partitions} nodes of "
                f"{machine.node_memory_bytes:.3e} bytes, cluster has {cluster.nodes}"
            )
        per_node = total / partitions
        return PartitionReport(
            strategy=strategy,
            partitions=partitions,
            bytes_per_node=per_node,
            min_wall_seconds=full_scan + machine.scan_seconds(per_node),
            notes="partitioner scans the whole formula on one node, then each node scans its partition",
        )
    return PartitionReport(
        strategy=strategy,
        partitions=cluster.nodes,
        bytes_per_node=total,
        min_wall_seconds=full_scan,
        notes="every node scans the whole formula against its slice of the assignments",
    )


def report_items(
    size: FormulaSizeReport, cost: CostReport, plan: PartitionReport | None
) -> dict[str, float]:
    """Flat key -> number mapping; units are part of each key."""
    items = {
        "n": size.n,
        "formula_variables": size.variables,
        "formula_clauses": size.clauses,
        "formula_bits_per_literal": size.bits_per_literal,
        "formula_bits_per_clause": size.bits_per_clause,
        "formula_total_bits": size.total_bits,
        "formula_total_bytes": size.total_bytes,
        "formula_total_tb": size.total_bytes / TB,
        "formula_total_tib": size.total_bytes / TIB,
        "cost_single_scan_seconds": cost.single_scan_seconds,
        "cost_single_scan_hours": cost.single_scan_hours,
        "cost_sat_calls": cost.sat_calls,
        "cost_total_hours": cost.total_hours,
        "cost_total_years": cost.total_years,
    }
    if plan is not None:
        items.update(
            {
                "partition_count": plan.partitions,
                "partition_bytes_per_node": plan.bytes_per_node,
                "partition_min_wall_seconds": plan.min_wall_seconds,
            }
        )
    return items
