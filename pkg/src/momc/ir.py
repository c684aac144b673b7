"""Property-typed matrix IR: types, operations, verifier, textual printer.

A module is an ordered list of operations plus a symbol table mapping value
ids to types. Equations carry one nested region of variadic compute ops that
produce placeholder `term` values; after optimization the module contains
only binary compute ops with concrete types at the top level.

The textual form is this project's own, pinned by golden tests:

    %0 = init : matrix<5x5xf32,[lowerTri]>
    fill %0, 1 : f32
    %2 = equation {
      %3 = mul %0, %1 : term
      yield %3
    } : term
    print %2 : term
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from . import frontend as fe
from .errors import NonSquareStructuralProperty
from .properties import (
    DIAGONAL_PROPS,
    ElemKind,
    Property,
    PropertySet,
    canonicalize,
)

ValueId = int


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixType:
    rows: int
    cols: int
    elem: ElemKind
    props: PropertySet

    def __post_init__(self) -> None:
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("matrix dimensions must be positive")
        if len(self.props) > 0 and self.rows != self.cols:
            raise ValueError("structured matrix types must be square")

    def __str__(self) -> str:
        return f"matrix<{self.rows}x{self.cols}x{self.elem},{self.props.render()}>"


@dataclass(frozen=True)
class IdentityType:
    order: int
    elem: ElemKind

    def __post_init__(self) -> None:
        if self.order <= 0:
            raise ValueError("identity order must be positive")

    def __str__(self) -> str:
        return f"identity<{self.order}x{self.elem}>"


@dataclass(frozen=True)
class TermType:
    def __str__(self) -> str:
        return "term"


TERM = TermType()

ValueType = Union[MatrixType, IdentityType, TermType]


def value_dims(t: ValueType) -> tuple[int, int] | None:
    """(rows, cols) of a concrete type; None for a placeholder term."""
    if isinstance(t, MatrixType):
        return (t.rows, t.cols)
    if isinstance(t, IdentityType):
        return (t.order, t.order)
    return None


def value_props(t: ValueType) -> PropertySet:
    """Structure properties of a concrete type; identities are diagonal."""
    if isinstance(t, MatrixType):
        return t.props
    if isinstance(t, IdentityType):
        return DIAGONAL_PROPS
    raise ValueError("a term carries no properties")


def value_elem(t: ValueType) -> ElemKind:
    if isinstance(t, (MatrixType, IdentityType)):
        return t.elem
    raise ValueError("a term carries no element kind")


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Init:
    result: ValueId
    type: ValueType


@dataclass(frozen=True)
class Fill:
    value: float
    operand: ValueId
    elem: ElemKind


@dataclass(frozen=True)
class Mul:
    result: ValueId
    operands: tuple[ValueId, ...]


@dataclass(frozen=True)
class Add:
    result: ValueId
    operands: tuple[ValueId, ...]


@dataclass(frozen=True)
class Transpose:
    result: ValueId
    operand: ValueId


@dataclass(frozen=True)
class Yield:
    operand: ValueId


@dataclass(frozen=True)
class Equation:
    result: ValueId
    region: tuple["IROp", ...]
    # Dims declared on the assignment target, checked after type resolution.
    declared_dims: tuple[int, int] | None = None


@dataclass(frozen=True)
class Print:
    operand: ValueId


IROp = Union[Init, Fill, Mul, Add, Transpose, Yield, Equation, Print]

_COMPUTE = (Mul, Add, Transpose)


def op_result(op: IROp) -> ValueId | None:
    return getattr(op, "result", None)


def op_operands(op: IROp) -> tuple[ValueId, ...]:
    if isinstance(op, (Mul, Add)):
        return op.operands
    if isinstance(op, (Transpose, Yield, Print)):
        return (op.operand,)
    if isinstance(op, Fill):
        return (op.operand,)
    return ()


@dataclass(frozen=True)
class IRModule:
    """Immutable op sequence plus the value-id -> type symbol table."""

    ops: tuple[IROp, ...]
    types: dict[ValueId, ValueType]
    names: dict[ValueId, str] = field(default_factory=dict)

    def walk(self) -> Iterator[tuple[tuple[int, ...], IROp]]:
        """Yield (path, op) for every op, descending into equation regions."""
        for i, op in enumerate(self.ops):
            yield (i,), op
            if isinstance(op, Equation):
                for j, inner in enumerate(op.region):
                    yield (i, j), inner


class IRBuilder:
    """Appends ops while allocating dense sequential value ids."""

    def __init__(self) -> None:
        self.ops: list[IROp] = []
        self.types: dict[ValueId, ValueType] = {}
        self.names: dict[ValueId, str] = {}
        self._next: ValueId = 0

    def new_value(self, t: ValueType, name: str | None = None) -> ValueId:
        v = self._next
        self._next += 1
        self.types[v] = t
        if name is not None:
            self.names[v] = name
        return v

    def append(self, op: IROp) -> None:
        self.ops.append(op)

    def init(self, t: ValueType, name: str | None = None) -> ValueId:
        v = self.new_value(t, name)
        self.append(Init(v, t))
        return v

    def fill(self, value: float, operand: ValueId) -> None:
        self.append(Fill(value, operand, value_elem(self.types[operand])))

    def module(self) -> IRModule:
        return IRModule(tuple(self.ops), dict(self.types), dict(self.names))


# --------------------------------------------------------------------------
# AST -> IR
# --------------------------------------------------------------------------


def build_ir(ast: fe.Ast) -> IRModule:
    """Lower a resolved Ast: one init+fill per input, one equation per assign.

    Declarations whose name is assigned are equation aliases and are not
    materialized; their declared dims are attached to the equation for a
    post-resolution cross-check. Inline `Identity(n)` literals hoist to
    anonymous top-level init+fill values.
    """
    b = IRBuilder()
    assigned = {s.target for s in ast.stmts if isinstance(s, fe.Assign)}
    declared: dict[str, fe.Decl] = {d.name: d for d in ast.decls}
    env: dict[str, ValueId] = {}

    for d in ast.decls:
        if d.name in assigned:
            continue
        if isinstance(d, fe.MatrixDecl):
            assert isinstance(d.rows, int) and isinstance(d.cols, int)
            try:
                props = canonicalize(d.props, d.rows, d.cols)
            except NonSquareStructuralProperty as e:
                raise e.at(d.loc.line, d.loc.col, ast.origin)
            v = b.init(MatrixType(d.rows, d.cols, d.elem, props), d.name)
            b.fill(d.fill, v)
        else:
            assert isinstance(d.order, int)
            v = b.init(IdentityType(d.order, d.elem), d.name)
            b.fill(1.0, v)
        env[d.name] = v

    idlits: dict[int, ValueId] = {}

    def hoist_identity_lits(e: fe.Expr) -> None:
        if isinstance(e, fe.IdentityLit):
            assert isinstance(e.order, int)
            v = b.init(IdentityType(e.order, ElemKind.F32))
            b.fill(1.0, v)
            idlits[id(e)] = v
        elif isinstance(e, (fe.Mul, fe.Add)):
            for o in e.operands:
                hoist_identity_lits(o)
        elif isinstance(e, fe.Transpose):
            hoist_identity_lits(e.operand)

    for s in ast.stmts:
        hoist_identity_lits(s.expr)

    def build_region(e: fe.Expr, region: list[IROp]) -> ValueId:
        if isinstance(e, fe.Ref):
            return env[e.name]
        if isinstance(e, fe.IdentityLit):
            return idlits[id(e)]
        if isinstance(e, fe.Transpose):
            v = b.new_value(TERM)
            region_op = Transpose(v, build_region(e.operand, region))
            region.append(region_op)
            return v
        operands = tuple(build_region(o, region) for o in e.operands)
        v = b.new_value(TERM)
        region.append(Mul(v, operands) if isinstance(e, fe.Mul)
                      else Add(v, operands))
        return v

    def build_equation(e: fe.Expr, declared_dims: tuple[int, int] | None) -> ValueId:
        result = b.new_value(TERM)
        region: list[IROp] = []
        yielded = build_region(e, region)
        region.append(Yield(yielded))
        b.append(Equation(result, tuple(region), declared_dims))
        return result

    for s in ast.stmts:
        if isinstance(s, fe.Assign):
            dims = None
            d = declared.get(s.target)
            if isinstance(d, fe.MatrixDecl):
                assert isinstance(d.rows, int) and isinstance(d.cols, int)
                dims = (d.rows, d.cols)
            env[s.target] = build_equation(s.expr, dims)
        else:
            if isinstance(s.expr, fe.Ref):
                operand = env[s.expr.name]
            elif isinstance(s.expr, fe.IdentityLit):
                operand = idlits[id(s.expr)]
            else:
                operand = build_equation(s.expr, None)
            b.append(Print(operand))

    return b.module()


# --------------------------------------------------------------------------
# Verifier
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    op_path: tuple[int, ...]
    reason: str

    def __str__(self) -> str:
        where = ".".join(str(i) for i in self.op_path)
        return f"op {where}: {self.reason}"


def _chain_dims_ok(dims: list[tuple[int, int] | None]) -> str | None:
    """Check consecutive inner dims where both sides are known."""
    for a, c in zip(dims, dims[1:]):
        if a is not None and c is not None and a[1] != c[0]:
            return f"inner dims disagree, {a[1]} vs {c[0]}"
    return None


def verify(m: IRModule) -> list[Diagnostic]:
    """Structural and dimension checks; an empty list means the module is valid.

    Variadic term-typed compute ops live only inside equation regions; binary
    concrete-typed compute ops are the rematerialized low-level form and are
    legal at the top level. Dimension checks skip operands whose type is still
    a term (resolution re-checks those).
    """
    diags: list[Diagnostic] = []
    defined: set[ValueId] = set()
    seen_defs: set[ValueId] = set()

    def out(path: tuple[int, ...], reason: str) -> None:
        diags.append(Diagnostic(path, reason))

    def check_value(path: tuple[int, ...], v: ValueId) -> None:
        if v not in m.types:
            out(path, f"value %{v} missing from the symbol table")
        if v not in defined:
            out(path, f"operand %{v} used before definition")

    def check_result(path: tuple[int, ...], v: ValueId) -> None:
        if v in seen_defs:
            out(path, f"value %{v} defined more than once")
        seen_defs.add(v)
        defined.add(v)
        if v not in m.types:
            out(path, f"value %{v} missing from the symbol table")

    def dims_of(v: ValueId) -> tuple[int, int] | None:
        t = m.types.get(v)
        return None if t is None else value_dims(t)

    def check_compute(path: tuple[int, ...], op: IROp, top_level: bool) -> None:
        for o in op_operands(op):
            check_value(path, o)
        result = op_result(op)
        assert result is not None
        check_result(path, result)
        rt = m.types.get(result)
        if top_level:
            if isinstance(rt, TermType):
                out(path, "top-level compute op must have a concrete type")
            if isinstance(op, (Mul, Add)) and len(op.operands) != 2:
                out(path, "top-level mul/add must be binary")
        elif rt is not None and not isinstance(rt, TermType):
            out(path, "compute op inside an equation must produce a term")
        if isinstance(op, (Mul, Add)) and len(op.operands) < 2:
            out(path, "mul/add needs at least 2 operands")
        if isinstance(op, Mul):
            msg = _chain_dims_ok([dims_of(o) for o in op.operands])
            if msg is not None:
                out(path, msg)
        elif isinstance(op, Add):
            dims = [dims_of(o) for o in op.operands]
            known = [d for d in dims if d is not None]
            if known and any(d != known[0] for d in known):
                out(path, "add operands must share dims")
            elems = {value_elem(m.types[o]) for o in op.operands
                     if o in m.types and not isinstance(m.types[o], TermType)}
            if len(elems) > 1:
                out(path, "add operands must share the element kind")
        elif isinstance(op, Transpose):
            d = dims_of(op.operand)
            rd = dims_of(result)
            if d is not None and rd is not None and rd != (d[1], d[0]):
                out(path, "transpose result dims must be swapped operand dims")

    inits: set[ValueId] = set()
    for i, op in enumerate(m.ops):
        path = (i,)
        if isinstance(op, Init):
            check_result(path, op.result)
            inits.add(op.result)
            t = m.types.get(op.result)
            if t is not None and t != op.type:
                out(path, "init type disagrees with the symbol table")
            if isinstance(t, MatrixType) and len(t.props) > 0 and t.rows != t.cols:
                out(path, "structured matrix type must be square")
        elif isinstance(op, Fill):
            check_value(path, op.operand)
            if op.operand not in inits:
                out(path, "fill operand must be an init result")
            t = m.types.get(op.operand)
            if t is not None and not isinstance(t, TermType) \
                    and value_elem(t) is not op.elem:
                out(path, "fill scalar kind must match the operand element kind")
        elif isinstance(op, Print):
            check_value(path, op.operand)
        elif isinstance(op, Equation):
            check_result(path, op.result)
            rt = m.types.get(op.result)
            if rt is not None and not isinstance(rt, TermType):
                out(path, "equation result must be a term")
            if not op.region:
                out(path, "equation region is empty")
                continue
            yields = [j for j, inner in enumerate(op.region)
                      if isinstance(inner, Yield)]
            if len(yields) != 1:
                out(path, "missing yield" if not yields
                    else "equation region must contain exactly one yield")
            elif yields[0] != len(op.region) - 1:
                out(path, "yield must be the last op in the region")
            region_defined: set[ValueId] = set()
            for j, inner in enumerate(op.region):
                ipath = (i, j)
                if isinstance(inner, Yield):
                    check_value(ipath, inner.operand)
                elif isinstance(inner, _COMPUTE):
                    check_compute(ipath, inner, top_level=False)
                    region_defined.add(op_result(inner))  # type: ignore[arg-type]
                else:
                    out(ipath, f"{type(inner).__name__.lower()} is not allowed "
                               "inside an equation region")
            defined.difference_update(region_defined)
        elif isinstance(op, _COMPUTE):
            check_compute(path, op, top_level=True)
        elif isinstance(op, Yield):
            out(path, "yield is only allowed inside an equation region")
    return diags


# --------------------------------------------------------------------------
# Printer
# --------------------------------------------------------------------------


def format_scalar(v: float) -> str:
    """Render a scalar with up to 6 significant digits; exact integers render
    without a fractional part and negative zero normalizes to 0."""
    f = float(v)
    if f == 0:
        return "0"
    if f.is_integer() and abs(f) < 1e18:
        return str(int(f))
    return f"{f:.6g}"


def print_ir(m: IRModule) -> str:
    """Deterministic textual dump, one op per line, values named %0, %1, ..."""

    def render(op: IROp, indent: str) -> list[str]:
        if isinstance(op, Init):
            return [f"{indent}%{op.result} = init : {m.types[op.result]}"]
        if isinstance(op, Fill):
            return [f"{indent}fill %{op.operand}, "
                    f"{format_scalar(op.value)} : {op.elem}"]
        if isinstance(op, Mul):
            ops = ", ".join(f"%{o}" for o in op.operands)
            return [f"{indent}%{op.result} = mul {ops} : {m.types[op.result]}"]
        if isinstance(op, Add):
            ops = ", ".join(f"%{o}" for o in op.operands)
            return [f"{indent}%{op.result} = add {ops} : {m.types[op.result]}"]
        if isinstance(op, Transpose):
            return [f"{indent}%{op.result} = transpose %{op.operand} : "
                    f"{m.types[op.result]}"]
        if isinstance(op, Yield):
            return [f"{indent}yield %{op.operand}"]
        if isinstance(op, Print):
            return [f"{indent}print %{op.operand} : {m.types[op.operand]}"]
        assert isinstance(op, Equation)
        lines = [f"{indent}%{op.result} = equation {{"]
        for inner in op.region:
            lines.extend(render(inner, indent + "  "))
        lines.append(f"{indent}}} : {m.types[op.result]}")
        return lines

    out: list[str] = []
    for op in m.ops:
        out.extend(render(op, ""))
    return "\n".join(out) + "\n"
