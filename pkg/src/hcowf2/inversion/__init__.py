from .circuit import AND2, CONST, NOT, OR2, Circuit, CircuitBuilder, Gate, build_composed_circuit
from .cost import (
    ClusterModel,
    CostReport,
    FormulaSizeReport,
    MachineModel,
    PartitionReport,
    Strategy,
    formula_stats,
    inversion_cost,
    partition_plan,
    report_items,
)
from .invert import InversionResult, invert_small
from .sat import SatResult, iter_models, sat_decide
from .tseytin import CnfFormula, TseytinStats, tseytin_stats, tseytin_transform
