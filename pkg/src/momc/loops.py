"""Loop-level IR: tensor allocation, property-aware fill, matmul, transpose,
add, print.

Lowering maps the optimized binary IR one-to-one: every produced value gets a
freshly allocated tensor (zero-initialized, so matmul can accumulate), fills
write their scalar into the stored pattern implied by the operand's
properties, and property annotations carry over unchanged onto the ops and
the tensor table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from . import ir
from .errors import UnresolvedTerm
from .properties import ElemKind, PropertySet, StoredPattern, stored_pattern

TensorId = int


@dataclass(frozen=True)
class TensorInfo:
    rows: int
    cols: int
    elem: ElemKind
    props: PropertySet


@dataclass(frozen=True)
class Alloc:
    tensor: TensorId


@dataclass(frozen=True)
class Fill:
    tensor: TensorId
    value: float
    pattern: StoredPattern


@dataclass(frozen=True)
class MatMul:
    a: TensorId
    b: TensorId
    out: TensorId
    props_a: PropertySet
    props_b: PropertySet


@dataclass(frozen=True)
class Transpose:
    a: TensorId
    out: TensorId


@dataclass(frozen=True)
class Add:
    a: TensorId
    b: TensorId
    out: TensorId


@dataclass(frozen=True)
class Print:
    tensor: TensorId


LoopOp = Union[Alloc, Fill, MatMul, Transpose, Add, Print]

COMPUTE_OPS = (MatMul, Transpose, Add)


@dataclass(frozen=True)
class LoopModule:
    ops: tuple[LoopOp, ...]
    tensors: dict[TensorId, TensorInfo] = field(default_factory=dict)


def lower_to_loops(m: ir.IRModule) -> LoopModule:
    """Lower a fully resolved, rematerialized module to loop ops."""
    for v, t in m.types.items():
        if isinstance(t, ir.TermType):
            raise UnresolvedTerm(f"value %{v} still has a placeholder term type")

    ops: list[LoopOp] = []
    tensors: dict[TensorId, TensorInfo] = {}
    tmap: dict[ir.ValueId, TensorId] = {}

    def alloc(v: ir.ValueId) -> TensorId:
        t = m.types[v]
        dims = ir.value_dims(t)
        assert dims is not None
        tid = len(tensors)
        tensors[tid] = TensorInfo(dims[0], dims[1], ir.value_elem(t),
                                  ir.value_props(t))
        tmap[v] = tid
        ops.append(Alloc(tid))
        return tid

    for op in m.ops:
        if isinstance(op, ir.Init):
            alloc(op.result)
        elif isinstance(op, ir.Fill):
            tid = tmap[op.operand]
            ops.append(Fill(tid, op.value, stored_pattern(tensors[tid].props)))
        elif isinstance(op, ir.Mul):
            assert len(op.operands) == 2
            a, bb = op.operands
            out = alloc(op.result)
            ops.append(MatMul(tmap[a], tmap[bb], out,
                              ir.value_props(m.types[a]),
                              ir.value_props(m.types[bb])))
        elif isinstance(op, ir.Transpose):
            out = alloc(op.result)
            ops.append(Transpose(tmap[op.operand], out))
        elif isinstance(op, ir.Add):
            a, bb = op.operands
            out = alloc(op.result)
            ops.append(Add(tmap[a], tmap[bb], out))
        elif isinstance(op, ir.Print):
            ops.append(Print(tmap[op.operand]))
        else:
            raise UnresolvedTerm(
                f"{type(op).__name__} cannot be lowered; run the optimizer first")

    return LoopModule(tuple(ops), tensors)


def print_loops(lm: LoopModule) -> str:
    """Deterministic one-op-per-line dump, pinned by golden tests."""

    def shape(tid: TensorId) -> str:
        t = lm.tensors[tid]
        return f"{t.rows}x{t.cols}x{t.elem}"

    def annotated(tid: TensorId) -> str:
        return f"%{tid}{lm.tensors[tid].props.render()}"

    lines: list[str] = []
    for op in lm.ops:
        if isinstance(op, Alloc):
            lines.append(f"%{op.tensor} = alloc : {shape(op.tensor)}")
        elif isinstance(op, Fill):
            lines.append(f"fill %{op.tensor}, {ir.format_scalar(op.value)} : "
                         f"pattern={op.pattern}")
        elif isinstance(op, MatMul):
            lines.append(f"matmul %{op.a}{op.props_a.render()}, "
                         f"%{op.b}{op.props_b.render()} -> "
                         f"{annotated(op.out)} : {shape(op.out)}")
        elif isinstance(op, Transpose):
            lines.append(f"transpose %{op.a} -> %{op.out} : {shape(op.out)}")
        elif isinstance(op, Add):
            lines.append(f"add %{op.a}, %{op.b} -> %{op.out} : {shape(op.out)}")
        else:
            assert isinstance(op, Print)
            lines.append(f"print %{op.tensor}")
    return "\n".join(lines) + "\n"
