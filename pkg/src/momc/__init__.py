"""momc: a mini compiler for dense matrix programs.

Pipeline: a small textual DSL is parsed into a property-typed matrix IR,
equations are simplified (identity elimination), intermediate types are
inferred from operand structure, variadic multiplications are re-grouped by
a structure-aware matrix-chain solver, and the result lowers to a loop-level
IR executed by instrumented dense or pattern-specialized kernels.
"""

from .chain import (
    ChainOperand,
    ChainSolution,
    cost_oracle,
    enumerate_parenthesizations,
    mul_cost,
    optimal_parenthesization,
)
from .equation_opt import OptOptions, optimize_and_rematerialize
from .errors import CompileError
from .executor import DenseBuffer, ExecMode, ExecutionReport, Executor, execute
from .frontend import Ast, SourceProgram, parse, parse_source, resolve_constants, tokenize
from .ir import IRModule, build_ir, print_ir, verify
from .loops import LoopModule, lower_to_loops, print_loops
from .properties import (
    ElemKind,
    Property,
    PropertySet,
    StoredPattern,
    canonicalize,
    infer_add,
    infer_mul,
    infer_transpose,
    stored_pattern,
)

__version__ = "0.1.0"

__all__ = [
    "Ast",
    "ChainOperand",
    "ChainSolution",
    "CompileError",
    "DenseBuffer",
    "ElemKind",
    "ExecMode",
    "ExecutionReport",
    "Executor",
    "IRModule",
    "LoopModule",
    "OptOptions",
    "Property",
    "PropertySet",
    "SourceProgram",
    "StoredPattern",
    "build_ir",
    "canonicalize",
    "cost_oracle",
    "enumerate_parenthesizations",
    "execute",
    "infer_add",
    "infer_mul",
    "infer_transpose",
    "lower_to_loops",
    "mul_cost",
    "optimal_parenthesization",
    "optimize_and_rematerialize",
    "parse",
    "parse_source",
    "print_ir",
    "print_loops",
    "resolve_constants",
    "stored_pattern",
    "tokenize",
    "verify",
]
