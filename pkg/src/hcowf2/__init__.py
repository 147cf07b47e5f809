"""Chained random k-CNF one-way function, its MAC exchange, and the cost of
inverting it with SAT."""

from .bits import Bitvec
from .circuit_core import (
    CharacteristicFunction,
    Clause,
    GateCountModel,
    Literal,
    OutputFormula,
    default_k,
    eval_H,
    gate_count,
    generate_characteristic_function,
    generate_clause,
    is_reducible_pair,
)
from .oneway import (
    CollisionStats,
    EvalTrace,
    Evaluator,
    FunctionDescription,
    MacTag,
    check_uniqueness,
    derive_input,
    evaluate,
    generate_fd,
)

__version__ = "0.1.0"
