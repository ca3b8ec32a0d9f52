"""Lowering of expression trees to programs of primitive embedded exponentials."""

from .analysis import Analyzer, NodeInfo
from .execute import Executor, apply_program, execute
from .lowering import Compiler, CompilerConfig, EqualSplit, compile, gate_matrix, split_segments
from .program import (
    AncillaInit,
    BudgetEntry,
    CompiledProgram,
    Fixed,
    Inverse,
    QueryExp,
    Repeat,
    Seq,
    SpectralTransform,
    iter_primitives,
    program_to_json,
    query_counts,
    steps_from_json,
)
from .verify import deviation, leakage, logical_block, reference_unitary

__all__ = [
    "AncillaInit",
    "Analyzer",
    "BudgetEntry",
    "CompiledProgram",
    "Compiler",
    "CompilerConfig",
    "EqualSplit",
    "Executor",
    "Fixed",
    "Inverse",
    "NodeInfo",
    "QueryExp",
    "Repeat",
    "Seq",
    "SpectralTransform",
    "apply_program",
    "compile",
    "deviation",
    "execute",
    "gate_matrix",
    "iter_primitives",
    "leakage",
    "logical_block",
    "program_to_json",
    "query_counts",
    "reference_unitary",
    "split_segments",
    "steps_from_json",
]
