"""Dense row-major buffers and instrumented kernels.

The matmul kernel iterates the contraction index k in ascending order in
both modes and accumulates in the operand precision. Dense mode updates the
full (i, j) rectangle for every k; specialized mode restricts the rectangle
to the rows of a and columns of b that are stored at that k. Because entries
outside a stored pattern are exactly zero, both modes add the same nonzero
products in the same order per output element, so their results are
bit-identical while their multiplication counts differ.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import loops
from .errors import DimMismatch
from .ir import format_scalar
from .properties import ElemKind, PropertySet, StoredPattern, stored_pattern

_DTYPES = {ElemKind.F32: np.float32, ElemKind.F64: np.float64}


class DenseBuffer:
    """Row-major 2-D numeric storage; allocation zero-fills."""

    def __init__(self, rows: int, cols: int, elem: ElemKind) -> None:
        if rows <= 0 or cols <= 0:
            raise ValueError("buffer dims must be positive")
        self.rows = rows
        self.cols = cols
        self.elem = elem
        self.array = np.zeros((rows, cols), dtype=_DTYPES[elem])

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of length rows*cols."""
        return self.array.reshape(-1)


class ExecMode(enum.Enum):
    DENSE = "dense"
    SPECIALIZED = "specialized"


def _pattern_mask(pattern: StoredPattern, rows: int, cols: int) -> np.ndarray:
    i = np.arange(rows)[:, None]
    j = np.arange(cols)[None, :]
    if pattern is StoredPattern.FULL:
        return np.ones((rows, cols), dtype=bool)
    if pattern is StoredPattern.LOWER_INCL:
        return i >= j
    if pattern is StoredPattern.UPPER_INCL:
        return i <= j
    return i == j


def run_fill(buf: DenseBuffer, scalar: float, pattern: StoredPattern) -> None:
    """Set entries inside the pattern to the scalar, everything else to zero."""
    buf.array[:] = 0
    buf.array[_pattern_mask(pattern, buf.rows, buf.cols)] = scalar


def _row_span(pattern: StoredPattern, k: int, rows: int) -> tuple[int, int]:
    """Rows i with (i, k) stored in the left operand."""
    if pattern is StoredPattern.FULL:
        return 0, rows
    if pattern is StoredPattern.LOWER_INCL:
        return k, rows
    if pattern is StoredPattern.UPPER_INCL:
        return 0, min(k + 1, rows)
    return min(k, rows), min(k + 1, rows)


def _col_span(pattern: StoredPattern, k: int, cols: int) -> tuple[int, int]:
    """Columns j with (k, j) stored in the right operand."""
    if pattern is StoredPattern.FULL:
        return 0, cols
    if pattern is StoredPattern.LOWER_INCL:
        return 0, min(k + 1, cols)
    if pattern is StoredPattern.UPPER_INCL:
        return k, cols
    return min(k, cols), min(k + 1, cols)


def run_matmul(a: DenseBuffer, b: DenseBuffer, out: DenseBuffer,
               props_a: PropertySet, props_b: PropertySet,
               mode: ExecMode) -> int:
    """Accumulate a @ b into the zero-initialized out; returns the exact
    number of scalar multiplications performed."""
    if a.cols != b.rows:
        raise DimMismatch(f"inner dims disagree, {a.cols} vs {b.rows}")
    if (out.rows, out.cols) != (a.rows, b.cols):
        raise DimMismatch(f"out must be {a.rows}x{b.cols}, "
                          f"got {out.rows}x{out.cols}")
    if mode is ExecMode.DENSE:
        pa = pb = StoredPattern.FULL
    else:
        pa = stored_pattern(props_a)
        pb = stored_pattern(props_b)
    am, bm, om = a.array, b.array, out.array
    count = 0
    for k in range(a.cols):
        i0, i1 = _row_span(pa, k, a.rows)
        j0, j1 = _col_span(pb, k, b.cols)
        if i0 >= i1 or j0 >= j1:
            continue
        om[i0:i1, j0:j1] += am[i0:i1, k, None] * bm[None, k, j0:j1]
        count += (i1 - i0) * (j1 - j0)
    return count


def run_transpose(a: DenseBuffer, out: DenseBuffer) -> None:
    if (out.rows, out.cols) != (a.cols, a.rows):
        raise DimMismatch(f"out must be {a.cols}x{a.rows}, "
                          f"got {out.rows}x{out.cols}")
    out.array[:] = a.array.T


def run_add(a: DenseBuffer, b: DenseBuffer, out: DenseBuffer) -> None:
    if (a.rows, a.cols) != (b.rows, b.cols) or \
            (out.rows, out.cols) != (a.rows, a.cols):
        raise DimMismatch("add operands and out must share dims")
    np.add(a.array, b.array, out=out.array)


def format_print(buf: DenseBuffer) -> str:
    """`RxC elem` header then one row per line, entries space-separated."""
    header = f"{buf.rows}x{buf.cols} {buf.elem}"
    rows = [" ".join(format_scalar(float(v)) for v in row)
            for row in buf.array]
    return "\n".join([header] + rows)


@dataclass
class ExecutionReport:
    """Outputs and instrumentation of one module execution.

    Multiplication counts are deterministic and come from a single run;
    timings are the minimum over all runs, per compute op.
    """

    printed: tuple[str, ...] = ()
    mults: dict[int, int] = field(default_factory=dict)      # matmul op index
    min_ns: dict[int, int] = field(default_factory=dict)     # compute op index
    total_mults: int = 0
    total_min_ns: int = 0

    def to_kv(self) -> str:
        lines = []
        for k in sorted(self.min_ns):
            if k in self.mults:
                lines.append(f"op{k}.mults={self.mults[k]}")
            lines.append(f"op{k}.min_ns={self.min_ns[k]}")
        lines.append(f"total.mults={self.total_mults}")
        lines.append(f"total.min_ns={self.total_min_ns}")
        return "\n".join(lines) + "\n"


class Executor:
    """Runs a loop module; keeps the buffers of the last run for inspection."""

    def __init__(self, lm: loops.LoopModule) -> None:
        self.lm = lm
        self.buffers: dict[loops.TensorId, DenseBuffer] = {}

    def _allocate(self) -> None:
        self.buffers = {
            tid: DenseBuffer(info.rows, info.cols, info.elem)
            for tid, info in self.lm.tensors.items()
        }

    def run(self, mode: ExecMode = ExecMode.DENSE, repeats: int = 5) -> ExecutionReport:
        if repeats < 1:
            raise ValueError("repeats must be at least 1")
        report = ExecutionReport()
        printed: list[str] = []
        min_ns: dict[int, int] = {}
        for r in range(repeats):
            self._allocate()
            bufs = self.buffers
            for idx, op in enumerate(self.lm.ops):
                if isinstance(op, loops.Alloc):
                    continue
                if isinstance(op, loops.Fill):
                    run_fill(bufs[op.tensor], op.value, op.pattern)
                elif isinstance(op, loops.MatMul):
                    t0 = time.perf_counter_ns()
                    n = run_matmul(bufs[op.a], bufs[op.b], bufs[op.out],
                                   op.props_a, op.props_b, mode)
                    dt = time.perf_counter_ns() - t0
                    min_ns[idx] = min(dt, min_ns.get(idx, dt))
                    if r == 0:
                        report.mults[idx] = n
                elif isinstance(op, loops.Transpose):
                    t0 = time.perf_counter_ns()
                    run_transpose(bufs[op.a], bufs[op.out])
                    dt = time.perf_counter_ns() - t0
                    min_ns[idx] = min(dt, min_ns.get(idx, dt))
                elif isinstance(op, loops.Add):
                    t0 = time.perf_counter_ns()
                    run_add(bufs[op.a], bufs[op.b], bufs[op.out])
                    dt = time.perf_counter_ns() - t0
                    min_ns[idx] = min(dt, min_ns.get(idx, dt))
                else:
                    assert isinstance(op, loops.Print)
                    if r == 0:
                        printed.append(format_print(bufs[op.tensor]))
        report.printed = tuple(printed)
        report.min_ns = min_ns
        report.total_mults = sum(report.mults.values())
        report.total_min_ns = sum(min_ns.values())
        return report


def execute(lm: loops.LoopModule, mode: ExecMode = ExecMode.DENSE,
            repeats: int = 5) -> ExecutionReport:
    """Run the op list `repeats` times and report prints, counts and timings."""
    return Executor(lm).run(mode, repeats)
