"""Outline and inline phases.

Outlining moves an annotated loop nest verbatim into a fresh accelerator
function and leaves a call in its place; inlining substitutes callee
bodies into call sites with freshly named parameter copies so kernel
bodies end up call-free (math builtins excepted).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import TransformError
from .nodes import (
    Assign, BinOp, Block, Call, CallsiteStmt, DeclStmt, Expr, ExprStmt, For,
    FunctionDef, GlobalDecl, If, Index, Name, Num, Param, Paren, Return,
    SourceUnit, Stmt, Str, Symbol, Unary, VarDecl, While, child_stmts,
    stmt_exprs, walk_stmts,
)
from .parser import Resolution, resolve
from .pragmas import HmppDirective, OmpPragma
from .variants import FlagSet

# Callable from accelerator code without inlining (CUDA provides them).
MATH_BUILTINS = frozenset({
    "cos", "sin", "tan", "acos", "asin", "atan", "atan2", "sqrt", "exp",
    "log", "pow", "fabs", "floor", "ceil", "fmin", "fmax", "abs",
})

# Opaque calls that only read their arguments.
READONLY_OPAQUE = frozenset({"printf", "fprintf", "puts"})


# ---------------------------------------------------------------------------
# block discovery


@dataclass
class OmpRegion:
    pragma: OmpPragma
    stmt: Stmt
    line: int
    blocks: list["OmpBlock"] = field(default_factory=list)


@dataclass
class OmpBlock:
    block_id: int
    pragma: OmpPragma
    stmt: Stmt
    fn: FunctionDef
    line: int
    region: Optional[OmpRegion] = None

    @property
    def annotated(self) -> bool:
        return self.pragma.check or self.pragma.fixed is not None


def _omp_pragma_of(stmt: Stmt) -> Optional[OmpPragma]:
    for p in stmt.pragmas:
        if isinstance(p, OmpPragma):
            return p
    return None


def find_omp_blocks(unit: SourceUnit) -> list[OmpBlock]:
    """All OpenMP blocks in source order; `omp for` loops inside an
    `omp parallel` are reported as sub-blocks of that region."""
    out: list[OmpBlock] = []
    counter = [0]

    def block(pragma, stmt, fn, region=None):
        counter[0] += 1
        b = OmpBlock(counter[0], pragma, stmt, fn, pragma.line, region)
        if region is not None:
            region.blocks.append(b)
        out.append(b)
        return b

    def visit(stmt: Stmt, fn: FunctionDef, region: Optional[OmpRegion]):
        p = _omp_pragma_of(stmt)
        if p is not None:
            if p.kind == "parallel":
                inner = OmpRegion(p, stmt, p.line)
                for c in child_stmts(stmt):
                    visit(c, fn, inner)
                return
            if p.kind in ("parallel_for", "for"):
                block(p, stmt, fn, region if p.kind == "for" else None)
        for c in child_stmts(stmt):
            visit(c, fn, region)

    for fn in unit.functions:
        visit(fn.body, fn, None)
    return out


# ---------------------------------------------------------------------------
# access classification


@dataclass
class Access:
    symbol: Symbol
    kind: str  # read | write | addr


def expr_accesses(e: Expr, res: Resolution, unit: SourceUnit,
                  out: list[Access]):
    """Appends symbol accesses of one expression in textual order.

    Compound assignment records a read then a write; opaque calls read
    every argument and also write array arguments (they decay to
    mutable pointers) unless the callee is a known pure printer or a
    math builtin.
    """

    def sym(node) -> Optional[Symbol]:
        return res.symbol_of(node) if isinstance(node, Name) else None

    def base_symbol(target: Expr) -> Optional[Symbol]:
        while isinstance(target, (Index, Paren, Unary)):
            target = (target.base if isinstance(target, Index) else
                      target.inner if isinstance(target, Paren) else
                      target.operand)
        return sym(target)

    def walk(node: Expr):
        if isinstance(node, Name):
            s = sym(node)
            if s is not None:
                out.append(Access(s, "read"))
        elif isinstance(node, Paren):
            walk(node.inner)
        elif isinstance(node, Index):
            walk(node.base)
            walk(node.index)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Unary):
            if node.op == "&":
                s = base_symbol(node.operand)
                if s is not None:
                    out.append(Access(s, "addr"))
                for e2 in _index_exprs(node.operand):
                    walk(e2)
            elif node.op in ("++", "--"):
                s = base_symbol(node.operand)
                walk(node.operand)
                if s is not None:
                    out.append(Access(s, "write"))
            else:
                walk(node.operand)
        elif isinstance(node, Call):
            defined = {f.name for f in unit.functions}
            for a in node.args:
                if isinstance(a, Str):
                    continue
                walk(a)
                if node.func in MATH_BUILTINS or node.func in READONLY_OPAQUE:
                    continue
                if node.func in defined:
                    continue  # analyzable later; treat like opaque below
                s = base_symbol(a)
                if s is not None and s.shape in ("array", "matrix"):
                    out.append(Access(s, "write"))
            if node.func in defined:
                for a in node.args:
                    s = base_symbol(a)
                    if s is not None and s.shape in ("array", "matrix"):
                        out.append(Access(s, "write"))
        elif isinstance(node, Assign):
            # textual order: target base, its indexes, then the value
            s = base_symbol(node.target)
            if s is not None:
                if node.op != "=":
                    out.append(Access(s, "read"))
                if isinstance(node.target, Unary) and node.target.op == "*":
                    # write through a pointer reads the pointer itself
                    out.append(Access(s, "read"))
                out.append(Access(s, "write"))
            for e2 in reversed(_index_exprs(node.target)):
                walk(e2)
            walk(node.value)


    walk(e)


def _index_exprs(target: Expr) -> list[Expr]:
    out = []
    while isinstance(target, (Index, Paren, Unary)):
        if isinstance(target, Index):
            out.append(target.index)
            target = target.base
        elif isinstance(target, Paren):
            target = target.inner
        else:
            target = target.operand
    return out


def stmt_accesses(stmt: Stmt, res: Resolution, unit: SourceUnit) -> list[Access]:
    """Accesses of one statement, not descending into child statements."""
    out: list[Access] = []
    if isinstance(stmt, DeclStmt):
        for d in stmt.decls:
            for dim in d.dims:
                expr_accesses(dim, res, unit, out)
            if d.init is not None:
                expr_accesses(d.init, res, unit, out)
        return out
    for e in stmt_exprs(stmt):
        expr_accesses(e, res, unit, out)
    return out


def subtree_accesses(stmt: Stmt, res: Resolution, unit: SourceUnit) -> list[Access]:
    out = []
    for s in walk_stmts(stmt):
        out.extend(stmt_accesses(s, res, unit))
    return out


def _local_decls(stmt: Stmt) -> set[str]:
    names = set()
    for s in walk_stmts(stmt):
        if isinstance(s, DeclStmt):
            names.update(d.name for d in s.decls)
        elif isinstance(s, For) and isinstance(s.init, DeclStmt):
            names.update(d.name for d in s.init.decls)
    return names


# ---------------------------------------------------------------------------
# parameter inference


def infer_codelet_params(block_stmt: Stmt, res: Resolution, unit: SourceUnit,
                         reduction: Optional[tuple[str, str]] = None,
                         filename: str = "") -> list[Param]:
    """Free variables of the block in first-use order, shaped for the
    accelerator signature.

    Scalars pass by value, 1-D arrays as sized pointers, matrices with
    their declared dimensions.  A reduction variable becomes a
    `<name>_reduced` pointer of size 1 in its first-use slot.
    """
    locals_ = _local_decls(block_stmt)
    accesses = subtree_accesses(block_stmt, res, unit)
    reads: dict[str, bool] = {}
    writes: dict[str, bool] = {}
    order: list[Symbol] = []
    seen: set[str] = set()
    for a in accesses:
        name = a.symbol.name
        if name in locals_:
            continue
        if name not in seen:
            seen.add(name)
            order.append(a.symbol)
        if a.kind in ("read", "addr"):
            reads[name] = True
        if a.kind == "write":
            writes[name] = True

    params: list[Param] = []
    red_var = reduction[1] if reduction else None
    for sym in order:
        if sym.name == red_var:
            params.append(Param(sym.name + "_reduced", sym.elem_type,
                                pointer=True, io=None, size_expr=Num("1"),
                                reduced=True))
            continue
        if sym.shape == "scalar":
            params.append(Param(sym.name, sym.elem_type, io="by-value-scalar"))
        elif sym.shape == "array":
            io = _io_of(reads.get(sym.name), writes.get(sym.name))
            params.append(Param(sym.name, sym.elem_type, pointer=True, io=io,
                                size_expr=Paren(copy.deepcopy(sym.dims[0]))))
        elif sym.shape == "matrix":
            io = _io_of(reads.get(sym.name), writes.get(sym.name))
            params.append(Param(sym.name, sym.elem_type,
                                dims=[copy.deepcopy(d) for d in sym.dims],
                                io=io))
        else:
            raise TransformError(
                "free variable %r has unknown dimensions and cannot be "
                "passed to the accelerator" % sym.name,
                getattr(block_stmt, "line", None), None, filename)
    if red_var is not None and red_var not in seen:
        sym = _fn_symbol(res, "", red_var, unit, block_stmt)
        params.append(Param(red_var + "_reduced", sym.elem_type,
                            pointer=True, io=None, size_expr=Num("1"),
                            reduced=True))
    return params


def _io_of(read, write) -> str:
    if read and write:
        return "inout"
    if write:
        return "out"
    return "in"


def _fn_symbol(res: Resolution, fn_name: str, name: str, unit: SourceUnit,
               stmt: Stmt = None) -> Symbol:
    scope = res.fn_scopes.get(fn_name)
    if scope is not None and name in scope:
        return scope[name]
    for fn_scope in res.fn_scopes.values():
        if name in fn_scope:
            return fn_scope[name]
    if name in res.globals:
        return res.globals[name]
    raise TransformError("unknown symbol %r" % name,
                         getattr(stmt, "line", None), None, unit.filename)


# ---------------------------------------------------------------------------
# gridify


def loop_ivar(loop: For) -> Optional[str]:
    init = loop.init
    if isinstance(init, DeclStmt) and len(init.decls) == 1:
        return init.decls[0].name
    if isinstance(init, Assign) and isinstance(init.target, Name):
        return init.target.ident
    if init is None and isinstance(loop.cond, (BinOp, Paren)):
        cond = loop.cond.inner if isinstance(loop.cond, Paren) else loop.cond
        if isinstance(cond, BinOp) and isinstance(cond.left, Name):
            return cond.left.ident
    return None


def _sole_inner_for(loop: For) -> Optional[For]:
    body = loop.body
    if isinstance(body, Block):
        stmts = [s for s in body.stmts]
        if len(stmts) == 1 and isinstance(stmts[0], For):
            return stmts[0]
        return None
    return body if isinstance(body, For) else None


def gridify_spec(block_stmt: Stmt,
                 reduction: Optional[tuple[str, str]] = None) -> list[str]:
    """Grid dimensions for a loop nest: a perfect two-deep prefix maps both
    induction variables; a reduction collapses the outer one to 1."""
    if not isinstance(block_stmt, For):
        return []
    outer = loop_ivar(block_stmt)
    if outer is None:
        return []
    inner_for = _sole_inner_for(block_stmt)
    inner = loop_ivar(inner_for) if inner_for is not None else None
    if inner is not None:
        return ["1", inner] if reduction else [outer, inner]
    return [outer]


# ---------------------------------------------------------------------------
# outlining


@dataclass
class CodeletDef:
    label: str
    fn_name: str
    params: list[Param]
    body: Block
    loop: Stmt
    gridify: list[str]
    reduce: Optional[tuple[str, str]] = None  # (op, local name)
    target: str = "CUDA"
    line: int = 0


@dataclass
class Kernel:
    """One outlined block: its codelet, callsite and bookkeeping."""

    label: str
    block_id: int
    line: int
    flags: FlagSet
    codelet: CodeletDef
    callsite: CallsiteStmt
    fn_name: str
    group: Optional[str] = None  # group label, filled by planning
    reduce: Optional[tuple[str, str]] = None  # (op, caller symbol)

    @property
    def array_params(self) -> list[Param]:
        return [p for p in self.codelet.params if p.is_array]


def codelet_label(fn_name: str, line: int, tag: str) -> str:
    return "_instr_for%s_ol_%d_%s" % (tag, line, fn_name)


def outline_block(unit: SourceUnit, block: OmpBlock, flags: FlagSet,
                  tag: str = "") -> Kernel:
    """Rewrites `unit` in place: the block's loop nest moves verbatim into a
    fresh codelet function and a callsite takes its place."""
    res = resolve(unit)
    if not isinstance(block.stmt, For):
        raise TransformError("annotated block must start with a for loop",
                             block.line, None, unit.filename)
    reduction = block.pragma.reduction
    if reduction is not None:
        sym = _fn_symbol(res, block.fn.name, reduction[1], unit, block.stmt)
        if sym.shape != "scalar":
            raise TransformError("reduction variable %r must be scalar"
                                 % reduction[1], block.line, None, unit.filename)
    _check_scalar_liveness(unit, block, res)
    params = infer_codelet_params(block.stmt, res, unit, reduction,
                                  unit.filename)
    label = codelet_label(block.fn.name, block.line, tag)

    loop = copy.deepcopy(block.stmt)
    loop.pragmas = []
    grid = gridify_spec(loop, reduction)
    if grid:
        loop.pragmas = [HmppDirective(kind="gridify", gridify_dims=grid,
                                      reduce=reduction and
                                      (reduction[0], reduction[1]))]
    body = Block(stmts=[loop])
    if reduction is not None:
        op, var = reduction
        elem = _fn_symbol(res, block.fn.name, var, unit, block.stmt).elem_type
        body.stmts.insert(0, DeclStmt(
            [VarDecl(var, elem, init=Unary("*", Name(var + "_reduced")))], elem))
        body.stmts.append(ExprStmt(
            Assign("=", Unary("*", Name(var + "_reduced")), Name(var))))

    codelet = CodeletDef(label, block.fn.name, params, body, loop, grid,
                         reduction and (reduction[0], reduction[1]),
                         line=block.line)
    args: list[Expr] = []
    for p in params:
        if p.reduced:
            args.append(Unary("&", Name(p.caller_symbol)))
        else:
            args.append(Name(p.name))
    callsite = CallsiteStmt(label=label, args=args, line=block.line)
    _replace_stmt(block.fn, block.stmt, callsite, unit)
    return Kernel(label, block.block_id, block.line, flags, codelet, callsite,
                  block.fn.name, reduce=reduction)


def _check_scalar_liveness(unit: SourceUnit, block: OmpBlock, res: Resolution):
    """A scalar written inside the block stays by-value, so it must be dead
    (re-written before any read) on the CPU afterwards."""
    locals_ = _local_decls(block.stmt)
    red_var = block.pragma.reduction[1] if block.pragma.reduction else None
    written = set()
    for a in subtree_accesses(block.stmt, res, unit):
        if (a.kind == "write" and a.symbol.shape == "scalar"
                and a.symbol.name not in locals_ and a.symbol.name != red_var):
            written.add(a.symbol.name)
    if not written:
        return
    ordered = list(walk_stmts(block.fn.body))
    inside = set(map(id, walk_stmts(block.stmt)))
    after = ordered[ordered.index(block.stmt) + 1:]
    for stmt in after:
        if id(stmt) in inside:
            continue
        for a in stmt_accesses(stmt, res, unit):
            name = a.symbol.name
            if name not in written:
                continue
            if a.kind == "read":
                raise TransformError(
                    "scalar %r is written inside the accelerated block and "
                    "read afterwards on the CPU; by-value outlining would "
                    "change its value (use a reduction)" % name,
                    block.line, None, unit.filename)
            if a.kind == "write":
                written.discard(name)
        if not written:
            return


def _replace_stmt(fn: FunctionDef, old: Stmt, new: Stmt, unit: SourceUnit):
    # bare loop/branch bodies are wrapped so directives can land around the
    # replacement later
    for stmt in walk_stmts(fn.body):
        if isinstance(stmt, Block):
            for i, s in enumerate(stmt.stmts):
                if s is old:
                    stmt.stmts[i] = new
                    return
        elif isinstance(stmt, (For, While)) and stmt.body is old:
            stmt.body = Block(stmts=[new], line=new.line)
            return
        elif isinstance(stmt, If):
            if stmt.then is old:
                stmt.then = Block(stmts=[new], line=new.line)
                return
            if stmt.orelse is old:
                stmt.orelse = Block(stmts=[new], line=new.line)
                return
    raise TransformError("internal: statement to outline not found",
                         old.line, None, unit.filename)


def insert_codelets(unit: SourceUnit, kernels: list[Kernel]):
    """Places codelet function definitions ahead of the function that calls
    them, in kernel order."""
    for fn in unit.functions:
        ks = [k for k in kernels if k.fn_name == fn.name]
        if not ks:
            continue
        at = unit.items.index(fn)
        for k in ks:
            fdef = FunctionDef(k.label, "void", k.codelet.params,
                               k.codelet.body, line=k.line)
            unit.items.insert(at, fdef)
            at += 1


def check_global_scope(codelet: CodeletDef, unit: SourceUnit) -> list[str]:
    """Diagnostics for identifiers in the codelet body that resolve neither
    to a parameter nor to a body-local declaration."""
    diags: list[str] = []
    scope: list[set[str]] = [{p.name for p in codelet.params}]

    def visible(name: str) -> bool:
        return any(name in s for s in scope)

    def check_expr(e: Expr):
        for node in _expr_nodes(e):
            if isinstance(node, Name) and not visible(node.ident):
                diags.append("codelet %s: identifier %r does not resolve to "
                             "a parameter or local" % (codelet.label, node.ident))
            elif isinstance(node, Call) and node.func not in MATH_BUILTINS:
                diags.append("codelet %s: un-inlinable call to %r"
                             % (codelet.label, node.func))

    def walk(stmt: Stmt):
        if isinstance(stmt, Block):
            scope.append(set())
            for s in stmt.stmts:
                walk(s)
            scope.pop()
            return
        if isinstance(stmt, DeclStmt):
            for d in stmt.decls:
                if d.init is not None:
                    check_expr(d.init)
                for dim in d.dims:
                    check_expr(dim)
                scope[-1].add(d.name)
            return
        if isinstance(stmt, For):
            scope.append(set())
            if isinstance(stmt.init, DeclStmt):
                walk(stmt.init)
            elif stmt.init is not None:
                check_expr(stmt.init)
            for e in (stmt.cond, stmt.update):
                if e is not None:
                    check_expr(e)
            walk(stmt.body)
            scope.pop()
            return
        for e in stmt_exprs(stmt):
            check_expr(e)
        for c in child_stmts(stmt):
            walk(c)

    walk(codelet.body)
    return diags


def _expr_nodes(e: Expr):
    yield e
    if isinstance(e, Paren):
        yield from _expr_nodes(e.inner)
    elif isinstance(e, Index):
        yield from _expr_nodes(e.base)
        yield from _expr_nodes(e.index)
    elif isinstance(e, Call):
        for a in e.args:
            yield from _expr_nodes(a)
    elif isinstance(e, BinOp):
        yield from _expr_nodes(e.left)
        yield from _expr_nodes(e.right)
    elif isinstance(e, Unary):
        yield from _expr_nodes(e.operand)
    elif isinstance(e, Assign):
        yield from _expr_nodes(e.target)
        yield from _expr_nodes(e.value)


# ---------------------------------------------------------------------------
# inline phase


@dataclass
class InlineReport:
    inlined: list[str] = field(default_factory=list)
    call_indices: list[tuple[str, int]] = field(default_factory=list)
    markers: list[str] = field(default_factory=list)


class _InlineState:
    def __init__(self, unit: SourceUnit, targets: set[str]):
        self.unit = unit
        self.targets = targets
        self.fn_map = {f.name: f for f in unit.functions}
        self.counter = 0
        self.report = InlineReport()
        self.active: list[str] = []

    def next_index(self) -> int:
        y = self.counter
        self.counter += 1
        return y


def _check_acyclic(unit: SourceUnit, targets: set[str]):
    fn_map = {f.name: f for f in unit.functions}
    edges = {}
    for name in targets:
        callees = set()
        for stmt in walk_stmts(fn_map[name].body):
            for e in stmt_exprs(stmt):
                for node in _expr_nodes(e):
                    if isinstance(node, Call) and node.func in targets:
                        callees.add(node.func)
        edges[name] = callees
    state: dict[str, int] = {}

    def dfs(n):
        state[n] = 1
        for m in edges.get(n, ()):
            if state.get(m) == 1:
                raise TransformError("recursive function %r cannot be inlined" % m)
            if state.get(m, 0) == 0:
                dfs(m)
        state[n] = 2

    for n in targets:
        if state.get(n, 0) == 0:
            dfs(n)


def _rename_uses(block: Block, mapping: dict[str, tuple[str, bool]],
                 fname: str):
    """Renames parameter uses; reference parameters become pointer derefs."""
    for stmt in walk_stmts(block):
        if isinstance(stmt, DeclStmt) or (isinstance(stmt, For) and
                                          isinstance(stmt.init, DeclStmt)):
            decls = stmt.decls if isinstance(stmt, DeclStmt) else stmt.init.decls
            for d in decls:
                if d.name in mapping:
                    raise TransformError(
                        "local %r in %r shadows a parameter; cannot inline"
                        % (d.name, fname))

    def rewrite(e: Expr) -> Expr:
        if isinstance(e, Name):
            if e.ident in mapping:
                new, is_ref = mapping[e.ident]
                return Unary("*", Name(new)) if is_ref else Name(new)
            return e
        if isinstance(e, Paren):
            e.inner = rewrite(e.inner)
        elif isinstance(e, Index):
            e.base = rewrite(e.base)
            e.index = rewrite(e.index)
        elif isinstance(e, Call):
            e.args = [rewrite(a) for a in e.args]
        elif isinstance(e, BinOp):
            e.left = rewrite(e.left)
            e.right = rewrite(e.right)
        elif isinstance(e, Unary):
            e.operand = rewrite(e.operand)
        elif isinstance(e, Assign):
            e.target = rewrite(e.target)
            e.value = rewrite(e.value)
        return e

    for stmt in walk_stmts(block):
        if isinstance(stmt, DeclStmt):
            for d in stmt.decls:
                if d.init is not None:
                    d.init = rewrite(d.init)
                d.dims = [rewrite(x) for x in d.dims]
        elif isinstance(stmt, ExprStmt):
            stmt.expr = rewrite(stmt.expr)
        elif isinstance(stmt, Return) and stmt.value is not None:
            stmt.value = rewrite(stmt.value)
        elif isinstance(stmt, For):
            if isinstance(stmt.init, Expr):
                stmt.init = rewrite(stmt.init)
            if stmt.cond is not None:
                stmt.cond = rewrite(stmt.cond)
            if stmt.update is not None:
                stmt.update = rewrite(stmt.update)
        elif isinstance(stmt, While):
            stmt.cond = rewrite(stmt.cond)
        elif isinstance(stmt, If):
            stmt.cond = rewrite(stmt.cond)


def _find_local_ret(body: Block) -> Optional[VarDecl]:
    for stmt in walk_stmts(body):
        if isinstance(stmt, DeclStmt):
            for d in stmt.decls:
                if d.name == "ret":
                    return d
    return None


def _expand_call(call: Call, y: int, state: _InlineState,
                 capture: bool) -> tuple[list[Stmt], Optional[str]]:
    """Builds the statements replacing one call; returns them plus the name
    of the `_return_<y>` variable when the result is captured."""
    fn = state.fn_map[call.func]
    if call.func in state.active:
        raise TransformError("recursive function %r cannot be inlined" % call.func)
    if len(call.args) != len(fn.params):
        raise TransformError(
            "call to %r passes %d arguments, expected %d"
            % (call.func, len(call.args), len(fn.params)))
    out: list[Stmt] = []
    mapping: dict[str, tuple[str, bool]] = {}
    for x, (p, arg) in enumerate(zip(fn.params, call.args)):
        pname = "_p_%d_%s_%d" % (x, fn.name, y)
        if p.reference:
            if not _is_addressable(arg):
                raise TransformError(
                    "argument %d of %r must be addressable (reference "
                    "parameter)" % (x, fn.name))
            out.append(DeclStmt([VarDecl(pname, p.elem_type, init=Unary("&", arg),
                                         pointer=True)], p.elem_type))
        else:
            out.append(DeclStmt([VarDecl(pname, p.elem_type, init=arg)],
                                p.elem_type))
        mapping[p.name] = (pname, p.reference)

    body = copy.deepcopy(fn.body)
    body.pragmas = []
    _rename_uses(body, mapping, fn.name)

    ret_name = "ret_%s%d" % (fn.name, y)
    return_var = "_return_%d" % y
    returns = [s for s in walk_stmts(body) if isinstance(s, Return)]
    if fn.return_type != "void":
        if len(returns) != 1 or body.stmts[-1] is not returns[0]:
            raise TransformError(
                "%r must end in a single tail return to be inlined" % fn.name)
        ret = returns[0]
        body.stmts[-1] = ExprStmt(Assign("=", Name(ret_name),
                                         ret.value if ret.value is not None
                                         else Num("0")))
        body.stmts.insert(0, DeclStmt([VarDecl(ret_name, fn.return_type)],
                                      fn.return_type))
        if capture:
            body.stmts.append(ExprStmt(Assign("=", Name(return_var),
                                              Name(ret_name))))
        result_type = fn.return_type
    else:
        if returns:
            raise TransformError("void %r has a return statement; cannot "
                                 "inline" % fn.name)
        local_ret = _find_local_ret(body)
        if capture:
            if local_ret is None:
                raise TransformError(
                    "void function %r used in an expression" % fn.name)
            body.stmts.append(DeclStmt([VarDecl(ret_name, local_ret.elem_type)],
                                       local_ret.elem_type))
            body.stmts.append(ExprStmt(Assign("=", Name(ret_name), Name("ret"))))
            body.stmts.append(ExprStmt(Assign("=", Name(return_var),
                                              Name(ret_name))))
            result_type = local_ret.elem_type
        else:
            result_type = None

    state.active.append(fn.name)
    _inline_block(body, state)
    state.active.pop()
    state.report.call_indices.append((fn.name, y))
    if fn.name not in state.report.inlined:
        state.report.inlined.append(fn.name)

    if capture:
        out.append(DeclStmt([VarDecl(return_var, result_type)], result_type))
    out.append(body)
    return out, return_var if capture else None


def _is_addressable(e: Expr) -> bool:
    return isinstance(e, (Name, Index))


def _calls_in(e: Expr, targets: set[str]) -> list[Call]:
    return [n for n in _expr_nodes(e)
            if isinstance(n, Call) and n.func in targets]


def _substitute(e: Expr, call: Call, replacement: Expr) -> Expr:
    if e is call:
        return replacement
    if isinstance(e, Paren):
        e.inner = _substitute(e.inner, call, replacement)
    elif isinstance(e, Index):
        e.base = _substitute(e.base, call, replacement)
        e.index = _substitute(e.index, call, replacement)
    elif isinstance(e, Call):
        e.args = [_substitute(a, call, replacement) for a in e.args]
    elif isinstance(e, BinOp):
        e.left = _substitute(e.left, call, replacement)
        e.right = _substitute(e.right, call, replacement)
    elif isinstance(e, Unary):
        e.operand = _substitute(e.operand, call, replacement)
    elif isinstance(e, Assign):
        e.target = _substitute(e.target, call, replacement)
        e.value = _substitute(e.value, call, replacement)
    return e


def _inline_stmt(stmt: Stmt, state: _InlineState) -> list[Stmt]:
    if isinstance(stmt, ExprStmt):
        calls = _calls_in(stmt.expr, state.targets)
        if not calls:
            return [stmt]
        out: list[Stmt] = []
        if stmt.expr in calls:
            # bare call statement: expand nested argument calls first, then
            # the outer call in place with its result discarded
            for call in calls[1:]:
                stmts, ret = _expand_call(call, state.next_index(), state,
                                          capture=True)
                out.extend(stmts)
                _substitute(stmt.expr, call, Name(ret))
            stmts, _ = _expand_call(stmt.expr, state.next_index(), state,
                                    capture=False)
            out.extend(stmts)
            if out:
                out[0].pragmas = stmt.pragmas + out[0].pragmas
            return out
        for call in calls:
            stmts, ret = _expand_call(call, state.next_index(), state,
                                      capture=True)
            out.extend(stmts)
            _substitute(stmt.expr, call, Name(ret))
        out.append(stmt)
        return out
    if isinstance(stmt, DeclStmt):
        out = []
        for d in stmt.decls:
            if d.init is None:
                continue
            for call in _calls_in(d.init, state.targets):
                stmts, ret = _expand_call(call, state.next_index(), state,
                                          capture=True)
                out.extend(stmts)
                d.init = _substitute(d.init, call, Name(ret))
        return out + [stmt]
    for e in stmt_exprs(stmt):
        if _calls_in(e, state.targets):
            raise TransformError(
                "call to inlined function in an unsupported position "
                "(loop header or condition)", stmt.line)
    return [stmt]


def _has_target_calls(stmt: Stmt, state: _InlineState) -> bool:
    for s in walk_stmts(stmt):
        for e in stmt_exprs(s):
            if _calls_in(e, state.targets):
                return True
    return False


def _inline_into_children(stmt: Stmt, state: _InlineState):
    """Recurses into nested statement bodies, wrapping a bare body in a
    block only when splicing is needed there."""

    def descend(body: Stmt) -> Stmt:
        if isinstance(body, Block):
            _inline_block(body, state)
            return body
        if _has_target_calls(body, state):
            wrapped = Block(stmts=[body], line=body.line)
            _inline_block(wrapped, state)
            return wrapped
        _inline_into_children(body, state)
        return body

    if isinstance(stmt, (For, While)):
        stmt.body = descend(stmt.body)
    elif isinstance(stmt, If):
        stmt.then = descend(stmt.then)
        if stmt.orelse is not None:
            stmt.orelse = descend(stmt.orelse)
    elif isinstance(stmt, Block):
        _inline_block(stmt, state)


def _inline_block(block: Block, state: _InlineState):
    new_stmts: list[Stmt] = []
    for stmt in block.stmts:
        _inline_into_children(stmt, state)
        new_stmts.extend(_inline_stmt(stmt, state))
    block.stmts = new_stmts


def split_multi_call_expr(stmt: Stmt, unit: SourceUnit,
                          targets: Optional[Iterable[str]] = None,
                          start_index: int = 0) -> list[Stmt]:
    """Splits a statement with several calls into per-call captures bound to
    `_return_<y>` in left-to-right order plus a recombining statement."""
    fn_map = {f.name: f for f in unit.functions}
    names = set(targets) if targets is not None else set(fn_map)
    if not isinstance(stmt, ExprStmt):
        return [stmt]
    stmt = copy.deepcopy(stmt)
    calls = _calls_in(stmt.expr, names)
    if not calls:
        return [stmt]
    out: list[Stmt] = []
    y = start_index
    for call in calls:
        fn = fn_map[call.func]
        rtype = fn.return_type
        if rtype == "void":
            local = _find_local_ret(fn.body)
            rtype = local.elem_type if local is not None else "int"
        ret = "_return_%d" % y
        out.append(DeclStmt([VarDecl(ret, rtype, init=call)], rtype))
        _substitute(stmt.expr, call, Name(ret))
        y += 1
    out.append(stmt)
    return out


def inline_calls_in_place(unit: SourceUnit,
                          targets: Iterable[str] | str = "all") -> InlineReport:
    """Inlines the named defined functions (or all of them) into their call
    sites, rewriting `unit`; fully inlined functions are removed and
    announced by a `deletedFunctionBodyNamed_<f>` marker."""
    defined = {f.name for f in unit.functions}
    if targets == "all":
        selected = {n for n in defined if n != "main"}
    else:
        selected = set(targets)
        missing = selected - defined
        if missing:
            raise TransformError("cannot inline undefined function(s): %s"
                                 % ", ".join(sorted(missing)))
    called: set[str] = set()
    for f in unit.functions:
        for stmt in walk_stmts(f.body):
            for e in stmt_exprs(stmt):
                for node in _expr_nodes(e):
                    if isinstance(node, Call):
                        called.add(node.func)
    selected &= called
    if not selected:
        return InlineReport()
    _check_acyclic(unit, selected)
    state = _InlineState(unit, selected)
    for f in unit.functions:
        if f.name not in selected:
            _inline_block(f.body, state)

    remaining: set[str] = set()
    for f in unit.functions:
        for stmt in walk_stmts(f.body):
            for e in stmt_exprs(stmt):
                for node in _expr_nodes(e):
                    if isinstance(node, Call):
                        remaining.add(node.func)
    fully = [f.name for f in unit.functions
             if f.name in selected and f.name not in remaining]
    unit.items = [it for it in unit.items
                  if not (isinstance(it, FunctionDef) and it.name in fully)]
    markers = []
    for name in fully:
        marker = "deletedFunctionBodyNamed_%s" % name
        markers.append(marker)
        unit.items.insert(len(markers) - 1, GlobalDecl(DeclStmt(
            [VarDecl(marker, "int", init=Num("1"))], "int")))
    state.report.markers = markers
    return state.report


def inline_calls(unit: SourceUnit,
                 targets: Iterable[str] | str = "all") -> tuple[SourceUnit, InlineReport]:
    """Pure-function form of inline_calls_in_place."""
    out = copy.deepcopy(unit)
    report = inline_calls_in_place(out, targets)
    return out, report


def kernel_path_targets(unit: SourceUnit, kernels: list[Kernel]) -> set[str]:
    """Defined functions reachable from codelet bodies; these must inline."""
    defined = {f.name for f in unit.functions}
    fn_map = {f.name: f for f in unit.functions}
    roots: set[str] = set()
    for k in kernels:
        for stmt in walk_stmts(k.codelet.body):
            for e in stmt_exprs(stmt):
                for node in _expr_nodes(e):
                    if isinstance(node, Call) and node.func not in MATH_BUILTINS:
                        if node.func not in defined:
                            raise TransformError(
                                "codelet %s calls undeclared function %r, "
                                "which cannot run on the accelerator"
                                % (k.label, node.func), stmt.line)
                        roots.add(node.func)
    closure = set()
    work = list(roots)
    while work:
        n = work.pop()
        if n in closure:
            continue
        closure.add(n)
        for stmt in walk_stmts(fn_map[n].body):
            for e in stmt_exprs(stmt):
                for node in _expr_nodes(e):
                    if isinstance(node, Call) and node.func in defined \
                            and node.func not in MATH_BUILTINS:
                        work.append(node.func)
    return closure
