"""Frontend for the matrix DSL: lexer, recursive-descent parser, constant resolution.

Surface grammar (documented in full under docs/grammar.md):

    program       ::= line*
    line          ::= statement? comment? NEWLINE
    statement     ::= const_bind | matrix_decl | identity_decl | assign | print_stmt
    const_bind    ::= IDENT "=" INT
    matrix_decl   ::= "Matrix" IDENT "(" dim "," dim ")" "<" prop_list? ">"
                      (":" elem)? ("=" NUMBER)?
    identity_decl ::= "Identity" IDENT "(" dim ")" (":" elem)?
    assign        ::= IDENT "=" expr
    print_stmt    ::= "print" "(" expr ")"
    expr          ::= mulexpr ("+" mulexpr)*
    mulexpr       ::= atom ("*" atom)*
    atom          ::= IDENT | "transpose" "(" expr ")" | "Identity" "(" dim ")"
                    | "(" expr ")"
    dim           ::= IDENT | INT

Statements are newline-terminated; `#` starts a comment. Consecutive `*`
operands collect into one variadic Mul node and `+` into Add; parenthesized
groups flatten too, so no Mul has a Mul child and no Add has an Add child.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .errors import (
    AssignToIdentity,
    DuplicateDeclaration,
    LexError,
    MultipleAssignment,
    NonPositiveDimension,
    ParseError,
    UnboundConstant,
    UndeclaredIdentifier,
    UnknownProperty,
    UseBeforeAssign,
)
from .properties import DECLARED_NAMES, ElemKind


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<stdin>"


@dataclass(frozen=True)
class Loc:
    line: int
    col: int


_NOWHERE = Loc(0, 0)


class TokenKind(enum.Enum):
    IDENT = "identifier"
    INT = "integer"
    FLOAT = "number"
    KW_MATRIX = "'Matrix'"
    KW_IDENTITY = "'Identity'"
    KW_PRINT = "'print'"
    KW_TRANSPOSE = "'transpose'"
    EQUALS = "'='"
    LPAREN = "'('"
    RPAREN = "')'"
    LT = "'<'"
    GT = "'>'"
    COMMA = "','"
    STAR = "'*'"
    PLUS = "'+'"
    COLON = "':'"
    NEWLINE = "newline"
    EOF = "end of input"


_KEYWORDS = {
    "Matrix": TokenKind.KW_MATRIX,
    "Identity": TokenKind.KW_IDENTITY,
    "print": TokenKind.KW_PRINT,
    "transpose": TokenKind.KW_TRANSPOSE,
}

_PUNCT = {
    "=": TokenKind.EQUALS,
    "(": TokenKind.LPAREN,
    ")": TokenKind.RPAREN,
    "<": TokenKind.LT,
    ">": TokenKind.GT,
    ",": TokenKind.COMMA,
    "*": TokenKind.STAR,
    "+": TokenKind.PLUS,
    ":": TokenKind.COLON,
}


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    col: int


def tokenize(src: SourceProgram | str) -> list[Token]:
    """Lex a program into tokens carrying 1-based line/column positions."""
    if isinstance(src, str):
        src = SourceProgram(src)
    text = src.text
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            tokens.append(Token(TokenKind.NEWLINE, "\n", line, col))
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            i += 1
            col += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
        elif c.isalpha() or c == "_":
            start, startcol = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                col += 1
            word = text[start:i]
            tokens.append(Token(_KEYWORDS.get(word, TokenKind.IDENT),
                                word, line, startcol))
        elif c.isdigit():
            start, startcol = i, col
            while i < n and text[i].isdigit():
                i += 1
                col += 1
            kind = TokenKind.INT
            if i + 1 < n and text[i] == "." and text[i + 1].isdigit():
                kind = TokenKind.FLOAT
                i += 1
                col += 1
                while i < n and text[i].isdigit():
                    i += 1
                    col += 1
            tokens.append(Token(kind, text[start:i], line, startcol))
        elif c in _PUNCT:
            tokens.append(Token(_PUNCT[c], c, line, col))
            i += 1
            col += 1
        else:
            raise LexError(line, col, c, origin=src.origin)
    tokens.append(Token(TokenKind.EOF, "", line, col))
    return tokens


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

DimExpr = Union[int, str]  # literal or constant name


@dataclass(frozen=True)
class Ref:
    name: str
    loc: Loc = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class Mul:
    operands: tuple["Expr", ...]
    loc: Loc = field(default=_NOWHERE, compare=False)

    def __post_init__(self) -> None:
        assert len(self.operands) >= 2
        assert not any(isinstance(o, Mul) for o in self.operands)


@dataclass(frozen=True)
class Add:
    operands: tuple["Expr", ...]
    loc: Loc = field(default=_NOWHERE, compare=False)

    def __post_init__(self) -> None:
        assert len(self.operands) >= 2
        assert not any(isinstance(o, Add) for o in self.operands)


@dataclass(frozen=True)
class Transpose:
    operand: "Expr"
    loc: Loc = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class IdentityLit:
    order: DimExpr
    loc: Loc = field(default=_NOWHERE, compare=False)


Expr = Union[Ref, Mul, Add, Transpose, IdentityLit]


@dataclass(frozen=True)
class ConstBinding:
    name: str
    value: int
    loc: Loc = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class MatrixDecl:
    name: str
    rows: DimExpr
    cols: DimExpr
    props: tuple[str, ...]
    elem: ElemKind = ElemKind.F32
    fill: float = 1.0
    loc: Loc = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class IdentityDecl:
    name: str
    order: DimExpr
    elem: ElemKind = ElemKind.F32
    loc: Loc = field(default=_NOWHERE, compare=False)


Decl = Union[MatrixDecl, IdentityDecl]


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    loc: Loc = field(default=_NOWHERE, compare=False)


@dataclass(frozen=True)
class PrintStmt:
    expr: Expr
    loc: Loc = field(default=_NOWHERE, compare=False)


Stmt = Union[Assign, PrintStmt]


@dataclass(frozen=True)
class Ast:
    consts: tuple[ConstBinding, ...]
    decls: tuple[Decl, ...]
    stmts: tuple[Stmt, ...]
    origin: str = "<stdin>"

    @property
    def const_bindings(self) -> dict[str, int]:
        return {c.name: c.value for c in self.consts}


def flat_mul(operands: Iterable[Expr], loc: Loc = _NOWHERE) -> Expr:
    """Build a Mul, splicing in children that are themselves Mul nodes."""
    ops: list[Expr] = []
    for o in operands:
        ops.extend(o.operands) if isinstance(o, Mul) else ops.append(o)
    return ops[0] if len(ops) == 1 else Mul(tuple(ops), loc)


def flat_add(operands: Iterable[Expr], loc: Loc = _NOWHERE) -> Expr:
    ops: list[Expr] = []
    for o in operands:
        ops.extend(o.operands) if isinstance(o, Add) else ops.append(o)
    return ops[0] if len(ops) == 1 else Add(tuple(ops), loc)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token], origin: str) -> None:
        self.tokens = tokens
        self.origin = origin
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def expect(self, kind: TokenKind) -> Token:
        tok = self.peek()
        if tok.kind is not kind:
            self.fail((kind.value,), tok)
        return self.advance()

    def fail(self, expected: tuple[str, ...], tok: Token) -> None:
        found = tok.kind.value if tok.text == "" else repr(tok.text)
        raise ParseError(tok.line, tok.col, expected, found, origin=self.origin)

    def skip_newlines(self) -> None:
        while self.peek().kind is TokenKind.NEWLINE:
            self.advance()

    def end_statement(self) -> None:
        tok = self.peek()
        if tok.kind is TokenKind.NEWLINE:
            self.advance()
        elif tok.kind is not TokenKind.EOF:
            self.fail(("newline",), tok)

    def parse_program(self) -> Ast:
        consts: list[ConstBinding] = []
        decls: list[Decl] = []
        stmts: list[Stmt] = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind is TokenKind.EOF:
                break
            if tok.kind is TokenKind.KW_MATRIX:
                decls.append(self.parse_matrix_decl())
            elif tok.kind is TokenKind.KW_IDENTITY:
                decls.append(self.parse_identity_decl())
            elif tok.kind is TokenKind.KW_PRINT:
                stmts.append(self.parse_print())
            elif tok.kind is TokenKind.IDENT:
                stmt = self.parse_const_or_assign()
                consts.append(stmt) if isinstance(stmt, ConstBinding) \
                    else stmts.append(stmt)
            else:
                self.fail(("a statement",), tok)
            self.end_statement()
        return Ast(tuple(consts), tuple(decls), tuple(stmts), self.origin)

    def parse_dim(self) -> DimExpr:
        tok = self.peek()
        if tok.kind is TokenKind.INT:
            self.advance()
            return int(tok.text)
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return tok.text
        self.fail(("dimension (integer or constant name)",), tok)
        raise AssertionError  # fail always raises

    def parse_elem_suffix(self) -> ElemKind:
        if self.peek().kind is not TokenKind.COLON:
            return ElemKind.F32
        self.advance()
        tok = self.expect(TokenKind.IDENT)
        for kind in ElemKind:
            if tok.text == kind.value:
                return kind
        raise ParseError(tok.line, tok.col, ("'f32'", "'f64'"),
                         repr(tok.text), origin=self.origin)

    def parse_matrix_decl(self) -> MatrixDecl:
        kw = self.expect(TokenKind.KW_MATRIX)
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.LPAREN)
        rows = self.parse_dim()
        self.expect(TokenKind.COMMA)
        cols = self.parse_dim()
        self.expect(TokenKind.RPAREN)
        self.expect(TokenKind.LT)
        props: list[str] = []
        if self.peek().kind is TokenKind.IDENT:
            props.append(self.advance().text)
            while self.peek().kind is TokenKind.COMMA:
                self.advance()
                props.append(self.expect(TokenKind.IDENT).text)
        self.expect(TokenKind.GT)
        elem = self.parse_elem_suffix()
        fill = 1.0
        if self.peek().kind is TokenKind.EQUALS:
            self.advance()
            tok = self.peek()
            if tok.kind not in (TokenKind.INT, TokenKind.FLOAT):
                self.fail(("fill value (number)",), tok)
            self.advance()
            fill = float(tok.text)
        return MatrixDecl(name, rows, cols, tuple(props), elem, fill,
                          Loc(kw.line, kw.col))

    def parse_identity_decl(self) -> IdentityDecl:
        kw = self.expect(TokenKind.KW_IDENTITY)
        name = self.expect(TokenKind.IDENT).text
        self.expect(TokenKind.LPAREN)
        order = self.parse_dim()
        self.expect(TokenKind.RPAREN)
        elem = self.parse_elem_suffix()
        return IdentityDecl(name, order, elem, Loc(kw.line, kw.col))

    def parse_print(self) -> PrintStmt:
        kw = self.expect(TokenKind.KW_PRINT)
        self.expect(TokenKind.LPAREN)
        expr = self.parse_expr()
        self.expect(TokenKind.RPAREN)
        return PrintStmt(expr, Loc(kw.line, kw.col))

    def parse_const_or_assign(self) -> ConstBinding | Assign:
        name_tok = self.expect(TokenKind.IDENT)
        self.expect(TokenKind.EQUALS)
        loc = Loc(name_tok.line, name_tok.col)
        # `x = 5` alone on a line binds a constant; anything else is an
        # equation assignment (scalars are not matrix expressions).
        if self.peek().kind is TokenKind.INT and \
                self.peek(1).kind in (TokenKind.NEWLINE, TokenKind.EOF):
            value = int(self.advance().text)
            return ConstBinding(name_tok.text, value, loc)
        return Assign(name_tok.text, self.parse_expr(), loc)

    def parse_expr(self) -> Expr:
        tok = self.peek()
        operands = [self.parse_mulexpr()]
        while self.peek().kind is TokenKind.PLUS:
            self.advance()
            operands.append(self.parse_mulexpr())
        return flat_add(operands, Loc(tok.line, tok.col))

    def parse_mulexpr(self) -> Expr:
        tok = self.peek()
        operands = [self.parse_atom()]
        while self.peek().kind is TokenKind.STAR:
            self.advance()
            operands.append(self.parse_atom())
        return flat_mul(operands, Loc(tok.line, tok.col))

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return Ref(tok.text, Loc(tok.line, tok.col))
        if tok.kind is TokenKind.KW_TRANSPOSE:
            self.advance()
            self.expect(TokenKind.LPAREN)
            inner = self.parse_expr()
            self.expect(TokenKind.RPAREN)
            return Transpose(inner, Loc(tok.line, tok.col))
        if tok.kind is TokenKind.KW_IDENTITY:
            self.advance()
            self.expect(TokenKind.LPAREN)
            order = self.parse_dim()
            self.expect(TokenKind.RPAREN)
            return IdentityLit(order, Loc(tok.line, tok.col))
        if tok.kind is TokenKind.LPAREN:
            self.advance()
            inner = self.parse_expr()
            self.expect(TokenKind.RPAREN)
            return inner
        self.fail(("matrix expression",), tok)
        raise AssertionError


def _expr_names(e: Expr) -> Iterable[tuple[str, Loc]]:
    if isinstance(e, Ref):
        yield e.name, e.loc
    elif isinstance(e, (Mul, Add)):
        for o in e.operands:
            yield from _expr_names(o)
    elif isinstance(e, Transpose):
        yield from _expr_names(e.operand)


def _validate(ast: Ast) -> None:
    """Name and single-assignment checks over the parsed program.

    A name assigned anywhere is an equation alias: uses must follow the
    assignment. A declared name never assigned is an input matrix.
    """
    origin = ast.origin
    consts: dict[str, ConstBinding] = {}
    for c in ast.consts:
        if c.name in consts:
            raise DuplicateDeclaration(f"constant {c.name!r} bound twice",
                                       line=c.loc.line, col=c.loc.col,
                                       origin=origin)
        consts[c.name] = c

    decls: dict[str, Decl] = {}
    for d in ast.decls:
        if d.name in decls or d.name in consts:
            raise DuplicateDeclaration(f"{d.name!r} declared twice",
                                       line=d.loc.line, col=d.loc.col,
                                       origin=origin)
        if isinstance(d, MatrixDecl):
            for p in d.props:
                if p not in DECLARED_NAMES:
                    raise UnknownProperty(f"unknown property {p!r}",
                                          line=d.loc.line, col=d.loc.col,
                                          origin=origin)
        decls[d.name] = d

    assign_line: dict[str, int] = {}
    for s in ast.stmts:
        if isinstance(s, Assign):
            if s.target in assign_line:
                raise MultipleAssignment(
                    f"{s.target!r} assigned more than once",
                    line=s.loc.line, col=s.loc.col, origin=origin)
            if s.target in consts:
                raise DuplicateDeclaration(
                    f"{s.target!r} is already a constant",
                    line=s.loc.line, col=s.loc.col, origin=origin)
            if isinstance(decls.get(s.target), IdentityDecl):
                raise AssignToIdentity(
                    f"cannot assign to identity {s.target!r}",
                    line=s.loc.line, col=s.loc.col, origin=origin)
            assign_line[s.target] = s.loc.line

    for s in ast.stmts:
        for name, loc in _expr_names(s.expr):
            if name in assign_line:
                if assign_line[name] >= s.loc.line:
                    raise UseBeforeAssign(
                        f"{name!r} used before its assignment",
                        line=loc.line, col=loc.col, origin=origin)
            elif name not in decls:
                raise UndeclaredIdentifier(f"{name!r} is not declared",
                                           line=loc.line, col=loc.col,
                                           origin=origin)


def parse(tokens: list[Token], origin: str = "<stdin>") -> Ast:
    """Parse a token stream into a validated Ast."""
    ast = _Parser(tokens, origin).parse_program()
    _validate(ast)
    return ast


def parse_source(src: SourceProgram | str) -> Ast:
    if isinstance(src, str):
        src = SourceProgram(src)
    return parse(tokenize(src), src.origin)


# --------------------------------------------------------------------------
# Constant resolution and dimension scaling
# --------------------------------------------------------------------------


def resolve_constants(ast: Ast) -> Ast:
    """Replace every dimension expression by its integer value.

    Constants bind in declaration order: a dimension may only reference a
    constant bound on an earlier line.
    """
    bound: dict[str, ConstBinding] = {c.name: c for c in ast.consts}

    def resolve(dim: DimExpr, use: Loc) -> int:
        if isinstance(dim, str):
            c = bound.get(dim)
            if c is None or c.loc.line >= use.line:
                raise UnboundConstant(f"constant {dim!r} is not bound here",
                                      line=use.line, col=use.col,
                                      origin=ast.origin)
            value = c.value
        else:
            value = dim
        if value <= 0:
            raise NonPositiveDimension(f"dimension must be positive, got {value}",
                                       line=use.line, col=use.col,
                                       origin=ast.origin)
        return value

    def resolve_expr(e: Expr, use: Loc) -> Expr:
        if isinstance(e, IdentityLit):
            return replace(e, order=resolve(e.order, use))
        if isinstance(e, Mul):
            return replace(e, operands=tuple(resolve_expr(o, use) for o in e.operands))
        if isinstance(e, Add):
            return replace(e, operands=tuple(resolve_expr(o, use) for o in e.operands))
        if isinstance(e, Transpose):
            return replace(e, operand=resolve_expr(e.operand, use))
        return e

    decls: list[Decl] = []
    for d in ast.decls:
        if isinstance(d, MatrixDecl):
            decls.append(replace(d, rows=resolve(d.rows, d.loc),
                                 cols=resolve(d.cols, d.loc)))
        else:
            decls.append(replace(d, order=resolve(d.order, d.loc)))
    stmts: list[Stmt] = []
    for s in ast.stmts:
        stmts.append(replace(s, expr=resolve_expr(s.expr, s.loc)))
    return Ast(ast.consts, tuple(decls), tuple(stmts), ast.origin)


def scale_dimensions(ast: Ast, divisor: int) -> Ast:
    """Divide every resolved dimension by `divisor` (clamped to at least 1)."""
    if divisor == 1:
        return ast

    def scale(dim: DimExpr) -> int:
        assert isinstance(dim, int), "scale_dimensions requires a resolved Ast"
        return max(1, dim // divisor)

    def scale_expr(e: Expr) -> Expr:
        if isinstance(e, IdentityLit):
            return replace(e, order=scale(e.order))
        if isinstance(e, (Mul, Add)):
            return replace(e, operands=tuple(scale_expr(o) for o in e.operands))
        if isinstance(e, Transpose):
            return replace(e, operand=scale_expr(e.operand))
        return e

    decls: list[Decl] = []
    for d in ast.decls:
        if isinstance(d, MatrixDecl):
            decls.append(replace(d, rows=scale(d.rows), cols=scale(d.cols)))
        else:
            decls.append(replace(d, order=scale(d.order)))
    stmts = tuple(replace(s, expr=scale_expr(s.expr)) for s in ast.stmts)
    return Ast(ast.consts, tuple(decls), stmts, ast.origin)


# --------------------------------------------------------------------------
# Pretty-printer (canonical source form; parse(pretty(ast)) == ast)
# --------------------------------------------------------------------------


def _fmt_fill(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(v)


def pretty_expr(e: Expr) -> str:
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, Transpose):
        return f"transpose({pretty_expr(e.operand)})"
    if isinstance(e, IdentityLit):
        return f"Identity({e.order})"
    if isinstance(e, Mul):
        parts = [f"({pretty_expr(o)})" if isinstance(o, Add) else pretty_expr(o)
                 for o in e.operands]
        return " * ".join(parts)
    return " + ".join(pretty_expr(o) for o in e.operands)


def pretty(ast: Ast) -> str:
    """Canonical source text: constants, then declarations, then statements."""
    lines: list[str] = []
    for c in ast.consts:
        lines.append(f"{c.name} = {c.value}")
    for d in ast.decls:
        if isinstance(d, MatrixDecl):
            line = f"Matrix {d.name}({d.rows}, {d.cols}) <{', '.join(d.props)}>"
            if d.elem is not ElemKind.F32:
                line += f" : {d.elem}"
            if d.fill != 1.0:
                line += f" = {_fmt_fill(d.fill)}"
        else:
            line = f"Identity {d.name}({d.order})"
            if d.elem is not ElemKind.F32:
                line += f" : {d.elem}"
        lines.append(line)
    for s in ast.stmts:
        if isinstance(s, Assign):
            lines.append(f"{s.target} = {pretty_expr(s.expr)}")
        else:
            lines.append(f"print({pretty_expr(s.expr)})")
    return "\n".join(lines) + "\n"
