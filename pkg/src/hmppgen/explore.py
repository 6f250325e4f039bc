"""Executing variants and aggregating median time and energy.

Two executor modes: `shell` builds and runs each variant through user
command templates, sampling a cumulative watt-hour counter around the
run; `simulated` replays the variant's transfer plan and statement
structure through a deterministic closed-form cost model.

The simulator counts *logical* whole-object transfers: an upload is
charged only when the host copy changed since the last upload of that
symbol, a download only when an accelerator kernel wrote the symbol
since the last download.  Redundant per-callsite copies of unchanged
data are therefore free, which is exactly the waste the directives
remove, and grouped/noupdate plans come out ahead by construction.
"""

from __future__ import annotations

import statistics
import subprocess
import time as _time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .context import TransferPlan
from .errors import ExploreError
from .nodes import (
    Assign, BinOp, Block, Call, CallsiteStmt, DeclStmt, Expr, ExprStmt, For,
    FunctionDef, If, Index, Name, Num, Paren, Return, Stmt, Str, Unary, While,
    walk_stmts,
)
from .emit import RenderedVariant

ELEM_BYTES = {"int": 4, "float": 4, "double": 8}


def median(samples) -> float:
    """Middle element for odd counts, mean of the two middle ones for even."""
    data = list(samples)
    if not data:
        raise ExploreError("median of an empty sample list")
    return float(statistics.median(data))


def wh_to_joules(wh: float) -> float:
    """Exact conversion, 1 Wh = 3600 J."""
    if wh < 0:
        raise ExploreError("negative watt-hours: %r" % wh)
    return wh * 3600.0


# ---------------------------------------------------------------------------
# cost model


@dataclass(frozen=True)
class CostModelParams:
    """Calibration constants for the simulator.

    The defaults are arbitrary desk-scale values chosen to give the
    accelerator a clear advantage on large parallel loops; they are not
    measurements of any real machine.
    """

    h2d_bandwidth: float = 8e9  # bytes/s
    d2h_bandwidth: float = 8e9  # bytes/s
    kernel_launch_overhead: float = 30e-6  # s
    gpu_throughput: float = 4e11  # ops/s
    cpu_throughput: float = 4e9  # ops/s
    power_cpu_active: float = 95.0  # W
    power_cpu_idle: float = 45.0  # W
    power_gpu_active: float = 180.0  # W
    power_memory: float = 30.0  # W

    def validate(self):
        for name, v in self.__dict__.items():
            if not v > 0:
                raise ExploreError("cost model parameter %s must be positive"
                                   % name)


@dataclass
class SimResult:
    time_s: float
    energy_J: float
    h2d_count: int
    d2h_count: int
    h2d_bytes: int
    d2h_bytes: int
    h2d_array_count: int
    d2h_array_count: int
    launches: int
    gpu_ops: float
    cpu_ops: float

    def breakdown(self) -> str:
        return ("time_s=%.9f energy_J=%.9f h2d=%d d2h=%d h2d_bytes=%d "
                "d2h_bytes=%d h2d_arrays=%d d2h_arrays=%d launches=%d "
                "gpu_ops=%d cpu_ops=%d"
                % (self.time_s, self.energy_J, self.h2d_count, self.d2h_count,
                   self.h2d_bytes, self.d2h_bytes, self.h2d_array_count,
                   self.d2h_array_count, self.launches,
                   int(self.gpu_ops), int(self.cpu_ops)))


# -- static expression folding ------------------------------------------------


def fold_expr(e: Expr, env: dict[str, float]) -> Optional[float]:
    if isinstance(e, Num):
        try:
            return float(e.lexeme)
        except ValueError:
            return None
    if isinstance(e, Paren):
        return fold_expr(e.inner, env)
    if isinstance(e, Name):
        return env.get(e.ident)
    if isinstance(e, Unary) and e.op == "-" and e.prefix:
        v = fold_expr(e.operand, env)
        return None if v is None else -v
    if isinstance(e, BinOp):
        a = fold_expr(e.left, env)
        b = fold_expr(e.right, env)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/" and b != 0:
            return a / b
    return None


def const_env(fn: FunctionDef) -> dict[str, float]:
    """Initializer constants of the function's scalars, first value wins."""
    env: dict[str, float] = {}
    for stmt in walk_stmts(fn.body):
        if isinstance(stmt, DeclStmt):
            for d in stmt.decls:
                if d.init is not None and not d.dims and d.name not in env:
                    v = fold_expr(d.init, env)
                    if v is not None:
                        env[d.name] = v
    return env


def expr_ops(e: Expr) -> int:
    if isinstance(e, (Num, Str, Name)) or e is None:
        return 0
    if isinstance(e, Paren):
        return expr_ops(e.inner)
    if isinstance(e, Index):
        return 1 + expr_ops(e.base) + expr_ops(e.index)
    if isinstance(e, Call):
        return 1 + sum(expr_ops(a) for a in e.args)
    if isinstance(e, BinOp):
        return 1 + expr_ops(e.left) + expr_ops(e.right)
    if isinstance(e, Unary):
        return 1 + expr_ops(e.operand)
    if isinstance(e, Assign):
        return 1 + expr_ops(e.target) + expr_ops(e.value)
    return 0


def stmt_own_ops(stmt: Stmt) -> int:
    total = 0
    if isinstance(stmt, DeclStmt):
        total += sum(expr_ops(d.init) for d in stmt.decls if d.init is not None)
    elif isinstance(stmt, ExprStmt):
        total += expr_ops(stmt.expr)
    elif isinstance(stmt, Return) and stmt.value is not None:
        total += expr_ops(stmt.value)
    elif isinstance(stmt, (While, If)):
        total += expr_ops(stmt.cond)
    elif isinstance(stmt, CallsiteStmt):
        total += sum(expr_ops(a) for a in stmt.args)
    return total


def loop_trips(stmt: Stmt, env: dict[str, float]) -> float:
    """Statically folded trip count; 1 when the bounds do not fold."""
    if isinstance(stmt, For):
        var = None
        start = None
        if isinstance(stmt.init, DeclStmt) and len(stmt.init.decls) == 1:
            var = stmt.init.decls[0].name
            if stmt.init.decls[0].init is not None:
                start = fold_expr(stmt.init.decls[0].init, env)
        elif isinstance(stmt.init, Assign) and isinstance(stmt.init.target, Name):
            var = stmt.init.target.ident
            start = fold_expr(stmt.init.value, env)
        cond = stmt.cond
        if isinstance(cond, Paren):
            cond = cond.inner
        if not (isinstance(cond, BinOp) and cond.op in ("<", "<=")):
            return 1.0
        if var is None and isinstance(cond.left, Name):
            var = cond.left.ident
            start = env.get(var)
        if not (isinstance(cond.left, Name) and cond.left.ident == var):
            return 1.0
        stop = fold_expr(cond.right, env)
        if start is None or stop is None:
            return 1.0
        trips = stop - start + (1 if cond.op == "<=" else 0)
        return max(trips, 0.0)
    if isinstance(stmt, While):
        cond = stmt.cond
        if isinstance(cond, Paren):
            cond = cond.inner
        if isinstance(cond, BinOp) and cond.op in ("<", "<=") \
                and isinstance(cond.left, Name):
            start = env.get(cond.left.ident)
            stop = fold_expr(cond.right, env)
            if start is not None and stop is not None:
                return max(stop - start + (1 if cond.op == "<=" else 0), 0.0)
        return 1.0
    return 1.0


def static_ops(stmt: Stmt, env: dict[str, float]) -> float:
    """Operation count of a statement subtree with loop trips folded in."""
    env = dict(env)

    def walk(s: Stmt) -> float:
        total = float(stmt_own_ops(s))
        if isinstance(s, (For, While)):
            if isinstance(s, For):
                header = (expr_ops(s.init) if isinstance(s.init, Expr) else 0) \
                    + expr_ops(s.cond) + expr_ops(s.update)
                if isinstance(s.init, DeclStmt):
                    for d in s.init.decls:
                        if d.init is not None:
                            v = fold_expr(d.init, env)
                            if v is not None:
                                env[d.name] = v
                        header += expr_ops(d.init)
            else:
                header = expr_ops(s.cond)
            trips = loop_trips(s, env)
            return trips * (header + walk_body(s.body))
        if isinstance(s, Block):
            return total + sum(walk(c) for c in s.stmts)
        if isinstance(s, If):
            branches = walk(s.then) + (walk(s.orelse) if s.orelse else 0.0)
            return total + branches
        if isinstance(s, ExprStmt) and isinstance(s.expr, Assign) \
                and isinstance(s.expr.target, Name):
            v = fold_expr(s.expr.value, env)
            if v is not None and s.expr.op == "=":
                env[s.expr.target.ident] = v
        return total

    def walk_body(body: Stmt) -> float:
        return walk(body)

    return walk(stmt)


# -- the replay ---------------------------------------------------------------


class _Residency:
    """Whole-object transfer state: logical uploads move changed host data,
    logical downloads move accelerator-written data back."""

    def __init__(self, sizes: dict[str, int], params: CostModelParams,
                 array_syms: Optional[set] = None):
        self.sizes = sizes
        self.params = params
        self.array_syms = array_syms or set()
        self.host_version: dict[str, int] = {}
        self.uploaded_version: dict[str, int] = {}
        self.device_has: dict[tuple[str, str], bool] = {}
        self.gpu_dirty: dict[str, bool] = {}
        self.cpu_fresh: dict[str, bool] = {}
        self.h2d_count = 0
        self.d2h_count = 0
        self.h2d_array_count = 0
        self.d2h_array_count = 0
        self.h2d_bytes = 0
        self.d2h_bytes = 0
        self.t_h2d = 0.0
        self.t_d2h = 0.0

    def _size(self, sym: str) -> int:
        return self.sizes.get(sym, ELEM_BYTES["double"])

    def cpu_write(self, sym: str):
        self.host_version[sym] = self.host_version.get(sym, 0) + 1
        self.cpu_fresh[sym] = True
        for key in list(self.device_has):
            if key[1] == sym:
                self.device_has[key] = False

    def cpu_read(self, sym: str):
        if self.gpu_dirty.get(sym) and not self.cpu_fresh.get(sym, True):
            raise ExploreError(
                "unsound plan: CPU reads %r before the accelerator value "
                "was stored back" % sym)

    def upload(self, scope: str, sym: str):
        hv = self.host_version.get(sym, 0)
        if self.uploaded_version.get(sym) != hv:
            self.uploaded_version[sym] = hv
            size = self._size(sym)
            self.h2d_count += 1
            if sym in self.array_syms:
                self.h2d_array_count += 1
            self.h2d_bytes += size
            self.t_h2d += size / self.params.h2d_bandwidth
        self.device_has[(scope, sym)] = True

    def gpu_read(self, scope: str, sym: str):
        if not self.device_has.get((scope, sym)):
            raise ExploreError(
                "unsound plan: accelerator reads %r with no prior load or "
                "in-group producer" % sym)

    def gpu_write(self, scope: str, sym: str):
        self.gpu_dirty[sym] = True
        self.cpu_fresh[sym] = False
        self.device_has[(scope, sym)] = True

    def download(self, sym: str):
        if self.gpu_dirty.get(sym):
            self.gpu_dirty[sym] = False
            size = self._size(sym)
            self.d2h_count += 1
            if sym in self.array_syms:
                self.d2h_array_count += 1
            self.d2h_bytes += size
            self.t_d2h += size / self.params.d2h_bandwidth
            # the freshly downloaded host version has not been uploaded
            # anywhere, so the next upload of this symbol must be paid
            self.host_version[sym] = self.host_version.get(sym, 0) + 1
            self.uploaded_version.pop(sym, None)
        self.cpu_fresh[sym] = True


class _Replay:
    def __init__(self, rv: RenderedVariant, params: CostModelParams):
        self.rv = rv
        self.params = params
        self.table = rv.table
        self.plan: TransferPlan = rv.plan
        self.env = const_env(self.table.fn) if self.table else {}
        arrays = {name for name, sym in
                  (self.table.symbols.items() if self.table else ())
                  if sym.shape in ("array", "matrix")}
        self.res = _Residency(self._symbol_sizes(), params, arrays)
        self.t_cpu = 0.0
        self.t_gpu = 0.0
        self.launches = 0
        self.gpu_ops = 0.0
        self.cpu_ops = 0.0
        self.overlap_saved = 0.0
        self.pending_async: dict[str, dict] = {}  # kernel -> span/cpu info
        self.kernel_by_callsite = {id(k.callsite): k for k in rv.kernels}
        self.kernel_op_cache: dict[str, float] = {}
        self.fn_ops_cache: dict[str, float] = {}
        self.actions = self._index_actions()
        self.stmt_events = self._index_events()

    # -- static facts

    def _symbol_sizes(self) -> dict[str, int]:
        sizes = {}
        if self.table is None:
            return sizes
        env = const_env(self.table.fn)
        for name, sym in self.table.symbols.items():
            if sym.shape in ("array", "matrix"):
                n = 1.0
                for d in sym.dims:
                    v = fold_expr(d, env)
                    n *= v if v is not None else 1.0
                sizes[name] = int(n) * ELEM_BYTES.get(sym.elem_type, 8)
            else:
                sizes[name] = ELEM_BYTES.get(sym.elem_type, 8)
        return sizes

    def _index_actions(self) -> dict[tuple[str, int], list]:
        out: dict[tuple[str, int], list] = {}
        if self.plan is None:
            return out

        def add(point, prio, kind, payload):
            key = (point.position, id(point.anchor))
            out.setdefault(key, []).append((prio, kind, payload))

        for l in self.plan.loads:
            add(l.point, 2, "load", l)
        for s in self.plan.stores:
            add(s.point, 5, "store", s)
        for a in self.plan.asyncs:
            add(a.point, 4, "sync", a)
        for entries in out.values():
            entries.sort(key=lambda e: e[0])
        return out

    def _index_events(self) -> dict[int, list]:
        out: dict[int, list] = {}
        if self.table is None:
            return out
        for sym, events in self.table.events.items():
            s = self.table.symbols.get(sym)
            tracked = s is not None and (
                s.shape in ("array", "matrix") or self._sym_has_gpu(sym))
            if not tracked:
                continue
            for ev in events:
                if ev.host.kind == "CPU":
                    out.setdefault(id(ev.stmt), []).append((sym, ev.kind))
        return out

    def _sym_has_gpu(self, sym: str) -> bool:
        return any(ev.host.kind == "GPU" for ev in self.table.of(sym))

    def _kernel_ops(self, k) -> float:
        if k.label not in self.kernel_op_cache:
            env = dict(self.env)
            kenv = {}
            for p, arg in zip(k.codelet.params, k.callsite.args):
                v = fold_expr(arg, env)
                if v is not None:
                    kenv[p.name] = v
            self.kernel_op_cache[k.label] = static_ops(k.codelet.body, kenv)
        return self.kernel_op_cache[k.label]

    def _function_ops(self, name: str) -> float:
        if name not in self.fn_ops_cache:
            ops = 0.0
            for f in self.rv.unit.functions:
                if f.name == name:
                    ops = static_ops(f.body, const_env(f))
            self.fn_ops_cache[name] = ops
        return self.fn_ops_cache[name]

    # -- replay

    def run(self) -> SimResult:
        fn = self.table.fn if self.table else self.rv.unit.function("main")
        self._run_block(fn.body)
        # asynchronous kernels missing a synchronize finish at program end
        for label in list(self.pending_async):
            self._finish_async(label)
        p = self.params
        total = (self.res.t_h2d + self.res.t_d2h + self.t_gpu
                 + self.launches * p.kernel_launch_overhead + self.t_cpu
                 - self.overlap_saved)
        t_gpu_active = (self.res.t_h2d + self.res.t_d2h + self.t_gpu
                        + self.launches * p.kernel_launch_overhead)
        energy = (p.power_cpu_active * self.t_cpu
                  + p.power_cpu_idle * max(total - self.t_cpu, 0.0)
                  + p.power_gpu_active * t_gpu_active
                  + p.power_memory * total)
        return SimResult(total, energy, self.res.h2d_count, self.res.d2h_count,
                         self.res.h2d_bytes, self.res.d2h_bytes,
                         self.res.h2d_array_count, self.res.d2h_array_count,
                         self.launches, self.gpu_ops, self.cpu_ops)

    def _run_actions(self, position: str, stmt: Stmt):
        for prio, kind, payload in self.actions.get((position, id(stmt)), ()):
            if kind == "load":
                scope = payload.group or payload.label
                self.res.upload(scope, payload.symbol)
            elif kind == "store":
                self.res.download(payload.bytes_symbol)
            elif kind == "sync":
                self._finish_async(payload.label)

    def _cpu_time(self, ops: float):
        self.cpu_ops += ops
        dt = ops / self.params.cpu_throughput
        self.t_cpu += dt
        for info in self.pending_async.values():
            info["cpu_since"] += dt

    def _finish_async(self, label: str):
        info = self.pending_async.pop(label, None)
        if info is None:
            return
        self.overlap_saved += min(info["span"], info["cpu_since"])
        for sym in info["downloads"]:
            self.res.download(sym)

    def _run_stmt(self, stmt: Stmt):
        self._run_actions("before", stmt)
        k = self.kernel_by_callsite.get(id(stmt))
        if k is not None:
            self._run_callsite(k)
        else:
            for sym, kind in self.stmt_events.get(id(stmt), ()):
                if kind == "read":
                    self.res.cpu_read(sym)
                elif kind in ("write", "addr"):
                    self.res.cpu_write(sym)
            if not isinstance(stmt, (For, While)):
                self._cpu_time(float(stmt_own_ops(stmt)))
            if isinstance(stmt, ExprStmt):
                for node in self._call_nodes(stmt.expr):
                    self._cpu_time(self._function_ops(node.func))
            if isinstance(stmt, Block):
                for c in stmt.stmts:
                    self._run_stmt(c)
            elif isinstance(stmt, (For, While)):
                self._run_loop(stmt)
            elif isinstance(stmt, If):
                self._run_stmt(stmt.then)
                if stmt.orelse is not None:
                    self._run_stmt(stmt.orelse)
        self._run_actions("after", stmt)

    def _call_nodes(self, e: Expr):
        from .transform import _expr_nodes
        return [n for n in _expr_nodes(e) if isinstance(n, Call)]

    def _run_loop(self, stmt):
        trips = loop_trips(stmt, self.env)
        if isinstance(stmt, For):
            header = expr_ops(stmt.cond) + expr_ops(stmt.update)
            if isinstance(stmt.init, Expr):
                self._cpu_time(float(expr_ops(stmt.init)))
            elif isinstance(stmt.init, DeclStmt):
                self._run_stmt(stmt.init)
        else:
            header = expr_ops(stmt.cond)
        if trips <= 0:
            return
        # first iteration warms residency; the rest repeat its steady state
        snapshot = self._counters()
        self._cpu_time(float(header))
        self._run_stmt(stmt.body)
        if trips > 1:
            snapshot2 = self._counters()
            self._cpu_time(float(header))
            self._run_stmt(stmt.body)
            self._scale_delta(snapshot2, trips - 2.0)

    def _counters(self):
        r = self.res
        return (r.h2d_count, r.d2h_count, r.h2d_bytes, r.d2h_bytes, r.t_h2d,
                r.t_d2h, self.t_cpu, self.t_gpu, self.launches, self.gpu_ops,
                self.cpu_ops, self.overlap_saved, r.h2d_array_count,
                r.d2h_array_count)

    def _scale_delta(self, snapshot, extra: float):
        if extra <= 0:
            return
        cur = self._counters()
        delta = [c - s for c, s in zip(cur, snapshot)]
        r = self.res
        r.h2d_count += int(delta[0] * extra)
        r.d2h_count += int(delta[1] * extra)
        r.h2d_bytes += int(delta[2] * extra)
        r.d2h_bytes += int(delta[3] * extra)
        r.t_h2d += delta[4] * extra
        r.t_d2h += delta[5] * extra
        self.t_cpu += delta[6] * extra
        self.t_gpu += delta[7] * extra
        self.launches += int(delta[8] * extra)
        self.gpu_ops += delta[9] * extra
        self.cpu_ops += delta[10] * extra
        self.overlap_saved += delta[11] * extra
        r.h2d_array_count += int(delta[12] * extra)
        r.d2h_array_count += int(delta[13] * extra)

    def _run_callsite(self, k):
        plan = self.plan
        scope = plan.group_of.get(k.label) or k.label
        planned_stores = {(s.label, s.bytes_symbol) for s in plan.stores}
        # by-value argument evaluation happens on the CPU
        self._cpu_time(float(sum(expr_ops(a) for a in k.callsite.args)))
        for p in k.codelet.params:
            if p.io == "by-value-scalar":
                continue
            sym = p.caller_symbol
            mapped = plan.is_mapped(k.label, sym)
            noup = plan.has_noupdate(k.label, sym)
            reads = p.reduced or p.io in ("in", "inout")
            if not noup and (reads or mapped):
                self.res.upload(scope, sym)
            if reads:
                self.res.gpu_read(scope, sym)
        ops = self._kernel_ops(k)
        self.gpu_ops += ops
        self.launches += 1
        span = ops / self.params.gpu_throughput
        self.t_gpu += span
        downloads = []
        for p in k.codelet.params:
            if p.io == "by-value-scalar":
                continue
            sym = p.caller_symbol
            if not (p.reduced or p.io in ("out", "inout")):
                continue
            self.res.gpu_write(scope, sym)
            if plan.is_mapped(k.label, sym) or plan.has_noupdate(k.label, sym):
                continue  # an explicit store moves it when needed
            if not p.reduced and k.flags.delegatedstore \
                    and (k.label, sym) in planned_stores:
                continue  # far store planned instead of the auto copy
            downloads.append(sym)
        if k.flags.asynchronous:
            self.pending_async[k.label] = {
                "span": span, "cpu_since": 0.0, "downloads": downloads}
        else:
            for sym in downloads:
                self.res.download(sym)

    def _run_block(self, block: Block):
        self._run_stmt(block)


def simulate_variant(rv: RenderedVariant,
                     params: CostModelParams = CostModelParams()) -> SimResult:
    """Deterministic closed-form cost of one rendered variant."""
    params.validate()
    if rv.table is None:
        # untransformed baseline: everything runs on the CPU
        unit = rv.unit
        main = unit.function("main") if any(
            f.name == "main" for f in unit.functions) else unit.functions[-1]
        ops = static_ops(main.body, const_env(main))
        for stmt in walk_stmts(main.body):
            if isinstance(stmt, ExprStmt):
                from .transform import _expr_nodes
                for node in _expr_nodes(stmt.expr):
                    if isinstance(node, Call):
                        for f in unit.functions:
                            if f.name == node.func:
                                ops += static_ops(f.body, const_env(f))
        t = ops / params.cpu_throughput
        energy = (params.power_cpu_active + params.power_memory) * t
        return SimResult(t, energy, 0, 0, 0, 0, 0, 0, 0, 0.0, ops)
    return _Replay(rv, params).run()


# ---------------------------------------------------------------------------
# executors and the sweep


@dataclass
class ExecutorSpec:
    mode: str = "simulated"  # simulated | shell
    build: str = ""  # must contain {file}; {exe} is provided
    run: str = "{exe}"
    timeout: float = 60.0
    energy_cmd: str = ""  # prints cumulative watt-hours
    params: CostModelParams = field(default_factory=CostModelParams)

    def validate(self):
        if self.mode not in ("simulated", "shell"):
            raise ExploreError("executor mode must be simulated or shell")
        if self.mode == "shell":
            if "{file}" not in self.build:
                raise ExploreError(
                    "shell executor build template must contain {file}")
            if not self.energy_cmd:
                raise ExploreError(
                    "shell executor needs an energy_cmd printing cumulative "
                    "watt-hours")
            if not self.timeout > 0:
                raise ExploreError("timeout must be positive")
        self.params.validate()


def parse_executor_config(path) -> ExecutorSpec:
    """Line-oriented `key = value` executor configuration."""
    spec = ExecutorSpec()
    overrides = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ExploreError("malformed executor config line: %r" % raw)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in ("mode", "build", "run", "energy_cmd"):
            setattr(spec, key, value)
        elif key == "timeout":
            spec.timeout = float(value)
        elif key in CostModelParams().__dict__:
            overrides[key] = float(value)
        else:
            raise ExploreError("unknown executor config key %r" % key)
    if overrides:
        spec.params = replace(spec.params, **overrides)
    spec.validate()
    return spec


@dataclass
class Measurement:
    name: str
    signature_text: str
    time_ms: Optional[float]
    energy_J: Optional[float]
    samples: list[tuple[float, float]] = field(default_factory=list)
    failed: bool = False
    reason: str = ""

    @classmethod
    def from_samples(cls, name, signature_text, samples) -> "Measurement":
        return cls(name, signature_text,
                   median(t for t, _ in samples),
                   median(e for _, e in samples), list(samples))

    @classmethod
    def failure(cls, name, signature_text, reason) -> "Measurement":
        return cls(name, signature_text, None, None, [], True, reason)


def _read_energy_wh(cmd: str) -> float:
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True,
                          timeout=30)
    if proc.returncode != 0:
        raise ExploreError("energy source unavailable: %s"
                           % (proc.stderr.strip() or "nonzero exit"))
    try:
        return float(proc.stdout.strip().split()[-1])
    except (ValueError, IndexError):
        raise ExploreError("energy source printed no number: %r" % proc.stdout)


def _run_shell_variant(rv: RenderedVariant, spec: ExecutorSpec, reps: int,
                       work_dir: Path, log) -> Measurement:
    src = work_dir / ("%s.c" % rv.filename_sig)
    exe = work_dir / ("%s.bin" % rv.filename_sig)
    src.write_text(rv.source, encoding="utf-8")
    build_cmd = spec.build.format(file=str(src), exe=str(exe))
    log("build: %s" % build_cmd)
    proc = subprocess.run(build_cmd, shell=True, capture_output=True,
                          text=True, timeout=spec.timeout)
    if proc.returncode != 0:
        log("build failed: %s" % proc.stderr.strip())
        return Measurement.failure(rv.name, rv.signature_text,
                                   "build failure: %s" % proc.stderr.strip())
    run_cmd = spec.run.format(file=str(src), exe=str(exe))
    samples = []
    for i in range(reps):
        try:
            wh_before = _read_energy_wh(spec.energy_cmd)
            t0 = _time.perf_counter()
            run = subprocess.run(run_cmd, shell=True, capture_output=True,
                                 text=True, timeout=spec.timeout)
            elapsed = _time.perf_counter() - t0
            wh_after = _read_energy_wh(spec.energy_cmd)
        except subprocess.TimeoutExpired:
            log("rep %d: timeout" % i)
            return Measurement.failure(rv.name, rv.signature_text,
                                       "run timeout after %gs" % spec.timeout)
        except ExploreError as e:
            log("rep %d: %s" % (i, e))
            return Measurement.failure(rv.name, rv.signature_text, str(e))
        if run.returncode != 0:
            log("rep %d: nonzero exit %d" % (i, run.returncode))
            return Measurement.failure(rv.name, rv.signature_text,
                                       "run failed with exit %d"
                                       % run.returncode)
        samples.append((elapsed * 1000.0,
                        wh_to_joules(max(wh_after - wh_before, 0.0))))
        log("rep %d: %.3f ms, %.3f J" % (i, samples[-1][0], samples[-1][1]))
    return Measurement.from_samples(rv.name, rv.signature_text, samples)


def run_exploration(variants: list[RenderedVariant], executor: ExecutorSpec,
                    repetitions: int = 5,
                    log_dir=None) -> list[Measurement]:
    """One Measurement per variant, medians over `repetitions` samples;
    failures are recorded per variant without aborting the sweep."""
    if repetitions < 1:
        raise ExploreError("repetitions must be >= 1")
    executor.validate()
    logs = Path(log_dir) if log_dir is not None else None
    if logs is not None:
        logs.mkdir(parents=True, exist_ok=True)
    out: list[Measurement] = []
    for rv in variants:
        log_lines: list[str] = []
        log = log_lines.append
        if executor.mode == "simulated":
            try:
                sim = simulate_variant(rv, executor.params)
                log("simulated: " + sim.breakdown())
                sample = (sim.time_s * 1000.0, sim.energy_J)
                m = Measurement.from_samples(rv.name, rv.signature_text,
                                             [sample] * repetitions)
            except ExploreError as e:
                log("simulation failed: %s" % e)
                m = Measurement.failure(rv.name, rv.signature_text, str(e))
        else:
            work = logs if logs is not None else Path(".")
            m = _run_shell_variant(rv, executor, repetitions, work, log)
        out.append(m)
        if logs is not None:
            (logs / ("%s.log" % rv.filename_sig)).write_text(
                "\n".join(log_lines) + "\n", encoding="utf-8")
    return out
