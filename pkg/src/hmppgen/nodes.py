"""AST for the supported C subset.

Statements carry the pragmas that precede them; a Block additionally
keeps trailing accelerator pragmas so transfer directives can land after
its last statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

# ---------------------------------------------------------------------------
# expressions


class Expr:
    pass


@dataclass
class Num(Expr):
    lexeme: str  # original spelling, e.g. "0.0", "99"


@dataclass
class Str(Expr):
    lexeme: str  # includes quotes


@dataclass
class Name(Expr):
    ident: str


@dataclass
class Paren(Expr):
    inner: Expr


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Call(Expr):
    func: str
    args: list[Expr]


@dataclass
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Unary(Expr):
    op: str  # - ! * & ++ --
    operand: Expr
    prefix: bool = True


@dataclass
class Assign(Expr):
    op: str  # = += -= *= /= %=
    target: Expr
    value: Expr


# ---------------------------------------------------------------------------
# statements


class Stmt:
    pragmas: list
    line: int


@dataclass
class VarDecl:
    name: str
    elem_type: str  # int | float | double
    dims: list[Expr] = field(default_factory=list)  # [] scalar, [n] array, [r, c] matrix
    init: Optional[Expr] = None
    pointer: bool = False
    reference: bool = False  # C++-style `int &a`, parameters only


@dataclass
class DeclStmt(Stmt):
    decls: list[VarDecl]
    elem_type: str = "int"
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class ExprStmt(Stmt):
    expr: Expr
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class Block(Stmt):
    stmts: list[Stmt] = field(default_factory=list)
    trailing_pragmas: list = field(default_factory=list)
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class For(Stmt):
    init: Union[Expr, DeclStmt, None]
    cond: Optional[Expr]
    update: Optional[Expr]
    body: Stmt = None
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class While(Stmt):
    cond: Expr = None
    body: Stmt = None
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class If(Stmt):
    cond: Expr = None
    then: Stmt = None
    orelse: Optional[Stmt] = None
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class CallsiteStmt(Stmt):
    """Invocation of an outlined accelerator function (emitted form only)."""

    label: str = ""
    args: list[Expr] = field(default_factory=list)
    pragmas: list = field(default_factory=list)
    line: int = 0


# ---------------------------------------------------------------------------
# top level


@dataclass
class Param:
    name: str
    elem_type: str
    dims: list[Expr] = field(default_factory=list)
    pointer: bool = False
    reference: bool = False
    io: Optional[str] = "in"  # in | out | inout | by-value-scalar | None
    size_expr: Optional[Expr] = None  # product of declared dims for pointer params
    reduced: bool = False  # pointer standing in for a reduction scalar

    @property
    def caller_symbol(self) -> str:
        return self.name[:-len("_reduced")] if self.reduced else self.name

    @property
    def is_array(self) -> bool:
        return bool(self.dims) or (self.pointer and not self.reduced)


@dataclass
class FunctionDef:
    name: str
    return_type: str
    params: list[Param]
    body: Block
    pragmas: list = field(default_factory=list)
    line: int = 0


@dataclass
class ProtoDecl:
    """Function prototype kept as raw text (e.g. `int printf(const char *, ...)`)."""

    name: str
    return_type: str
    raw_params: str
    pointer_result: bool = False
    line: int = 0


@dataclass
class GlobalDecl:
    decl_stmt: DeclStmt


@dataclass
class Symbol:
    name: str
    elem_type: str
    dims: tuple = ()  # dim expressions; () scalar, 1 entry array, 2 entries matrix
    storage: str = "local"  # global | parameter | local
    pointer: bool = False
    reference: bool = False
    decl: object = None  # DeclStmt / Param / GlobalDecl that introduced it

    @property
    def shape(self) -> str:
        if self.pointer:
            return "pointer"
        if len(self.dims) == 0:
            return "scalar"
        if len(self.dims) == 1:
            return "array"
        return "matrix"


@dataclass
class SourceUnit:
    filename: str = "<input>"
    items: list = field(default_factory=list)  # GlobalDecl | ProtoDecl | FunctionDef
    source_text: str = ""

    @property
    def functions(self) -> list[FunctionDef]:
        return [x for x in self.items if isinstance(x, FunctionDef)]

    @property
    def globals(self) -> list[GlobalDecl]:
        return [x for x in self.items if isinstance(x, GlobalDecl)]

    @property
    def prototypes(self) -> list[ProtoDecl]:
        return [x for x in self.items if isinstance(x, ProtoDecl)]

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


# ---------------------------------------------------------------------------
# traversal helpers


def child_stmts(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Block):
        return list(stmt.stmts)
    if isinstance(stmt, For):
        out = [stmt.init] if isinstance(stmt.init, DeclStmt) else []
        return out + [stmt.body]
    if isinstance(stmt, While):
        return [stmt.body]
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.orelse] if stmt.orelse is not None else [])
    return []


def walk_stmts(stmt: Stmt) -> Iterator[Stmt]:
    """Pre-order walk of a statement subtree."""
    yield stmt
    for c in child_stmts(stmt):
        yield from walk_stmts(c)


def walk_exprs(node) -> Iterator[Expr]:
    if isinstance(node, Expr):
        yield node
        if isinstance(node, Paren):
            yield from walk_exprs(node.inner)
        elif isinstance(node, Index):
            yield from walk_exprs(node.base)
            yield from walk_exprs(node.index)
        elif isinstance(node, Call):
            for a in node.args:
                yield from walk_exprs(a)
        elif isinstance(node, BinOp):
            yield from walk_exprs(node.left)
            yield from walk_exprs(node.right)
        elif isinstance(node, Unary):
            yield from walk_exprs(node.operand)
        elif isinstance(node, Assign):
            yield from walk_exprs(node.target)
            yield from walk_exprs(node.value)


def stmt_exprs(stmt: Stmt) -> list[Expr]:
    """Top-level expressions owned directly by one statement."""
    out = []
    if isinstance(stmt, DeclStmt):
        out.extend(d.init for d in stmt.decls if d.init is not None)
        for d in stmt.decls:
            out.extend(d.dims)
    elif isinstance(stmt, ExprStmt):
        out.append(stmt.expr)
    elif isinstance(stmt, Return) and stmt.value is not None:
        out.append(stmt.value)
    elif isinstance(stmt, For):
        if isinstance(stmt.init, Expr):
            out.append(stmt.init)
        for e in (stmt.cond, stmt.update):
            if e is not None:
                out.append(e)
    elif isinstance(stmt, While):
        out.append(stmt.cond)
    elif isinstance(stmt, If):
        out.append(stmt.cond)
    elif isinstance(stmt, CallsiteStmt):
        out.extend(stmt.args)
    return out
