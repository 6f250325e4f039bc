"""Per-variable access facts and transfer placement.

The analysis walks the outlined program, records who touches each array
on which host, and derives where uploads, downloads, group
declarations, noupdate markings and synchronize points belong so that
every accelerator read sees loaded data and every CPU read sees stored
data, with as few whole-object transfers as possible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import AnalysisError, PlanError
from .nodes import (
    Block, CallsiteStmt, DeclStmt, For, FunctionDef, SourceUnit, Stmt,
    Symbol, While, walk_stmts,
)
from .parser import Resolution, resolve
from .transform import (
    Kernel, OmpBlock, stmt_accesses, subtree_accesses,
)
from .variants import FlagSet


@dataclass(frozen=True)
class Host:
    kind: str  # CPU | GPU
    kernel: Optional[str] = None  # kernel label when on the accelerator

    def render(self) -> str:
        return self.kind if self.kind == "CPU" else "GPU(%s)" % self.kernel


CPU = Host("CPU")


@dataclass
class AccessEvent:
    symbol: str
    kind: str  # read | write | addr
    site: int
    stmt: Stmt
    host: Host
    loop_path: tuple[int, ...]


@dataclass(frozen=True)
class InsertionPoint:
    anchor: Stmt
    position: str  # before | after


@dataclass
class ContextTable:
    fn: FunctionDef
    events: dict[str, list[AccessEvent]] = field(default_factory=dict)
    kernels: list[Kernel] = field(default_factory=list)
    site_of: dict[int, int] = field(default_factory=dict)  # id(stmt) -> site
    loop_path_of: dict[int, tuple[int, ...]] = field(default_factory=dict)
    stmt_at: dict[int, Stmt] = field(default_factory=dict)  # site -> stmt
    symbols: dict[str, Symbol] = field(default_factory=dict)

    def add(self, ev: AccessEvent):
        self.events.setdefault(ev.symbol, []).append(ev)

    def of(self, symbol: str) -> list[AccessEvent]:
        return self.events.get(symbol, [])

    def callsite_of(self, label: str) -> CallsiteStmt:
        for k in self.kernels:
            if k.label == label:
                return k.callsite
        raise KeyError(label)

    def kernel_of(self, label: str) -> Kernel:
        for k in self.kernels:
            if k.label == label:
                return k
        raise KeyError(label)

    def site(self, stmt: Stmt) -> int:
        return self.site_of[id(stmt)]

    def path(self, stmt: Stmt) -> tuple[int, ...]:
        return self.loop_path_of[id(stmt)]


def _common_prefix(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return tuple(out)


# ---------------------------------------------------------------------------
# building the table


def build_context_table(unit: SourceUnit, kernels: list[Kernel]) -> ContextTable:
    """Access facts for the function hosting the callsites.

    Codelet accesses surface at the callsite, attributed to the kernel;
    compound assignments yield a read then a write.  By-value scalar
    arguments count as CPU reads at the call.
    """
    if not kernels:
        fn = unit.function("main") if any(
            f.name == "main" for f in unit.functions) else unit.functions[-1]
    else:
        fns = {k.fn_name for k in kernels}
        if len(fns) > 1:
            raise AnalysisError("kernels span multiple functions: %s"
                                % ", ".join(sorted(fns)))
        fn = unit.function(fns.pop())
    res = resolve(unit)
    table = ContextTable(fn=fn, kernels=list(kernels))
    table.symbols = dict(res.fn_scopes.get(fn.name, {}))
    by_callsite = {id(k.callsite): k for k in kernels}

    site = [0]
    loop_stack: list[int] = []

    def visit(stmt: Stmt):
        site[0] += 1
        s = site[0]
        table.site_of[id(stmt)] = s
        table.loop_path_of[id(stmt)] = tuple(loop_stack)
        table.stmt_at[s] = stmt
        k = by_callsite.get(id(stmt))
        if k is not None:
            _record_kernel_events(table, k, s, tuple(loop_stack), unit, res)
        else:
            for a in stmt_accesses(stmt, res, unit):
                table.add(AccessEvent(a.symbol.name, a.kind, s, stmt, CPU,
                                      tuple(loop_stack)))
        if isinstance(stmt, (For, While)):
            loop_stack.append(s)
            if isinstance(stmt, For) and isinstance(stmt.init, DeclStmt):
                visit(stmt.init)
            visit(stmt.body)
            loop_stack.pop()
        elif isinstance(stmt, Block):
            for c in stmt.stmts:
                visit(c)
        else:
            from .nodes import child_stmts
            for c in child_stmts(stmt):
                visit(c)

    visit(fn.body)
    return table


def _record_kernel_events(table: ContextTable, k: Kernel, site: int,
                          path: tuple[int, ...], unit: SourceUnit,
                          res: Resolution):
    host = Host("GPU", k.label)
    stmt = k.callsite
    # facts per parameter, from the codelet body
    kres = _codelet_resolution(unit, k)
    facts: dict[str, set[str]] = {}
    for a in subtree_accesses(k.codelet.body, kres, unit):
        facts.setdefault(a.symbol.name, set()).add(a.kind)
    for p, arg in zip(k.codelet.params, k.callsite.args):
        sym = p.caller_symbol
        kinds = facts.get(p.name, set())
        if p.io == "by-value-scalar":
            table.add(AccessEvent(sym, "read", site, stmt, CPU, path))
            continue
        if "read" in kinds or "addr" in kinds:
            table.add(AccessEvent(sym, "read", site, stmt, host, path))
        if "write" in kinds:
            table.add(AccessEvent(sym, "write", site, stmt, host, path))


def _codelet_resolution(unit: SourceUnit, k: Kernel) -> Resolution:
    for f in unit.functions:
        if f.name == k.label:
            res = resolve(unit)
            return res
    # codelet not inserted yet: resolve it through a scratch unit
    import copy
    scratch = copy.deepcopy(unit)
    from .nodes import FunctionDef as FD
    scratch.items.append(FD(k.label, "void", k.codelet.params, k.codelet.body))
    return resolve(scratch)


# ---------------------------------------------------------------------------
# queries


def infer_io_direction(symbol: str, kernel: str, table: ContextTable) -> str:
    """in / out / inout from the kernel's own accesses of the symbol."""
    reads = writes = False
    for ev in table.of(symbol):
        if ev.host.kernel == kernel:
            reads |= ev.kind in ("read", "addr")
            writes |= ev.kind == "write"
    if reads and writes:
        return "inout"
    if writes:
        return "out"
    return "in"


def last_cpu_write_site(symbol: str, kernel: str,
                        table: ContextTable) -> InsertionPoint:
    """Point just after the last CPU write before the kernel, backtracking
    out of loops that do not enclose the callsite; falls back to the
    declaration (or function start) when no write precedes."""
    call = table.callsite_of(kernel)
    ks = table.site(call)
    kpath = table.path(call)
    last: Optional[AccessEvent] = None
    for ev in table.of(symbol):
        if ev.host.kind == "CPU" and ev.kind in ("write", "addr") \
                and ev.site < ks:
            last = ev
    if last is None:
        sym = table.symbols.get(symbol)
        decl = sym.decl if sym is not None else None
        if isinstance(decl, DeclStmt) and id(decl) in table.site_of:
            return InsertionPoint(decl, "after")
        return InsertionPoint(_first_stmt(table.fn), "before")
    common = _common_prefix(last.loop_path, kpath)
    if len(last.loop_path) > len(common):
        offending = last.loop_path[len(common)]
        return InsertionPoint(table.stmt_at[offending], "after")
    return InsertionPoint(last.stmt, "after")


def first_cpu_read_site(symbol: str, kernel: str,
                        table: ContextTable) -> Optional[InsertionPoint]:
    """Point just before the first CPU read after the kernel, hoisted above
    loops that do not enclose the callsite; None when never read.

    A CPU read textually before the callsite but inside a shared loop is a
    wrap-around consumer (it sees the value in the next iteration), so the
    store must stay right after the callsite, once per iteration.
    """
    call = table.callsite_of(kernel)
    ks = table.site(call)
    kpath = table.path(call)
    for ev in table.of(symbol):
        if ev.host.kind == "CPU" and ev.kind in ("read", "addr") \
                and ev.site < ks and set(ev.loop_path) & set(kpath):
            return InsertionPoint(call, "after")
    for ev in table.of(symbol):
        if ev.host.kind == "CPU" and ev.kind in ("read", "addr") \
                and ev.site > ks:
            common = _common_prefix(ev.loop_path, kpath)
            if len(ev.loop_path) > len(common):
                offending = ev.loop_path[len(common)]
                return InsertionPoint(table.stmt_at[offending], "before")
            return InsertionPoint(ev.stmt, "before")
    return None


def _first_stmt(fn: FunctionDef) -> Stmt:
    if not fn.body.stmts:
        raise AnalysisError("function %r has an empty body" % fn.name)
    return fn.body.stmts[0]


def _wrapping_cpu_write(symbol: str, kernel: str, table: ContextTable,
                        anchor: Optional[InsertionPoint]) -> bool:
    """True when a CPU write of the symbol sits inside a loop that encloses
    the callsite but not the load anchor, so residency dies every
    iteration."""
    call = table.callsite_of(kernel)
    kpath = set(table.path(call))
    anchor_path = set(table.path(anchor.anchor)) if anchor is not None else set()
    for ev in table.of(symbol):
        if ev.host.kind != "CPU" or ev.kind not in ("write", "addr"):
            continue
        for loop in ev.loop_path:
            if loop in kpath and loop not in anchor_path:
                return True
    return False


def address_disabled(symbol: str, table: ContextTable) -> bool:
    """Address taken on the CPU outside a callsite argument disables
    placement optimization for the symbol."""
    sym = table.symbols.get(symbol)
    if sym is None or sym.shape not in ("array", "matrix"):
        return False
    for ev in table.of(symbol):
        if ev.kind == "addr" and ev.host.kind == "CPU" \
                and not isinstance(ev.stmt, CallsiteStmt):
            return True
    return False


def load_point(symbol: str, kernel: str,
               table: ContextTable) -> Optional[InsertionPoint]:
    """Early-load point for a kernel input, or None when an early load buys
    nothing (the data is invalidated on the CPU every iteration anyway,
    so the per-callsite transfer is already optimal)."""
    if address_disabled(symbol, table):
        return None
    anchor = last_cpu_write_site(symbol, kernel, table)
    kpath = table.path(table.callsite_of(kernel))
    apath = table.path(anchor.anchor)
    if len(kpath) > 0 and len(apath) >= len(kpath):
        return None
    if apath != kpath[:len(apath)]:
        return None
    if _wrapping_cpu_write(symbol, kernel, table, anchor):
        return None
    return anchor


# ---------------------------------------------------------------------------
# group formation (runs before outlining so names can carry the anchor)


@dataclass
class GroupAssignment:
    ordinal: int
    label: str
    anchor_line: int
    block_ids: list[int]


def form_groups(unit: SourceUnit, blocks: list[OmpBlock],
                flags_by_block: dict[int, FlagSet]) -> dict[int, GroupAssignment]:
    """Connected components of group-flagged blocks that share an array with
    no intervening CPU write; singleton groups are allowed (a pinned block
    can keep its own state resident across a loop)."""
    res = resolve(unit)
    members = [b for b in blocks
               if flags_by_block.get(b.block_id) is not None
               and not flags_by_block[b.block_id].baseline
               and flags_by_block[b.block_id].group]
    if not members:
        return {}
    arrays: dict[int, set[str]] = {}
    for b in members:
        syms = set()
        for a in subtree_accesses(b.stmt, res, unit):
            if a.symbol.shape in ("array", "matrix"):
                syms.add(a.symbol.name)
        arrays[b.block_id] = syms

    order = {id(s): i for i, s in enumerate(walk_stmts(members[0].fn.body))}

    def between_writes(b1: OmpBlock, b2: OmpBlock, sym: str) -> bool:
        lo, hi = sorted((order[id(b1.stmt)], order[id(b2.stmt)]))
        inside = set()
        for b in (b1, b2):
            inside |= set(map(id, walk_stmts(b.stmt)))
        for stmt in walk_stmts(b1.fn.body):
            pos = order[id(stmt)]
            if not (lo < pos < hi) or id(stmt) in inside:
                continue
            for a in stmt_accesses(stmt, res, unit):
                if a.symbol.name == sym and a.kind in ("write", "addr"):
                    return True
        return False

    parent = {b.block_id: b.block_id for b in members}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, b1 in enumerate(members):
        for b2 in members[i + 1:]:
            if b1.fn is not b2.fn:
                continue
            shared = arrays[b1.block_id] & arrays[b2.block_id]
            if any(not between_writes(b1, b2, s) for s in shared):
                parent[find(b1.block_id)] = find(b2.block_id)

    comps: dict[int, list[OmpBlock]] = {}
    for b in members:
        comps.setdefault(find(b.block_id), []).append(b)
    out: dict[int, GroupAssignment] = {}
    ordinal = 0
    for comp in sorted(comps.values(), key=lambda bs: min(x.line for x in bs)):
        comp.sort(key=lambda x: x.line)
        anchor = comp[0].line
        ga = GroupAssignment(ordinal, "group%d_%d" % (ordinal, anchor), anchor,
                             [b.block_id for b in comp])
        for b in comp:
            out[b.block_id] = ga
        ordinal += 1
    return out


# ---------------------------------------------------------------------------
# transfer planning


@dataclass
class GroupPlan:
    label: str
    kernels: list[str]
    mapbyname: list[str] = field(default_factory=list)


@dataclass
class LoadPlan:
    symbol: str
    point: InsertionPoint
    label: str
    group: Optional[str]


@dataclass
class StorePlan:
    symbol: str  # argument name in the pragma (may be `x_reduced`)
    addr: str  # address expression for args[..].addr="..."
    point: InsertionPoint
    label: str
    group: Optional[str]
    bytes_symbol: str = ""  # caller symbol whose bytes move

    def __post_init__(self):
        if not self.bytes_symbol:
            self.bytes_symbol = self.symbol if not self.addr.startswith("&") \
                else self.addr[1:]


@dataclass
class SyncPlan:
    label: str
    group: Optional[str]
    point: InsertionPoint


@dataclass
class ReleasePlan:
    name: str  # group label or codelet label
    grouped: bool
    point: InsertionPoint


@dataclass
class TransferPlan:
    groups: list[GroupPlan] = field(default_factory=list)
    loads: list[LoadPlan] = field(default_factory=list)
    stores: list[StorePlan] = field(default_factory=list)
    noupdate: dict[str, list[str]] = field(default_factory=dict)
    asyncs: list[SyncPlan] = field(default_factory=list)
    releases: list[ReleasePlan] = field(default_factory=list)
    io_override: dict[tuple[str, str], str] = field(default_factory=dict)
    group_of: dict[str, str] = field(default_factory=dict)  # kernel -> group
    mapped: dict[str, list[str]] = field(default_factory=dict)  # group -> syms
    diagnostics: list[str] = field(default_factory=list)

    def is_mapped(self, kernel: str, symbol: str) -> bool:
        g = self.group_of.get(kernel)
        return g is not None and symbol in self.mapped.get(g, ())

    def has_noupdate(self, kernel: str, symbol: str) -> bool:
        return symbol in self.noupdate.get(kernel, ())


def build_transfer_plan(unit: SourceUnit, table: ContextTable,
                        groups: dict[int, GroupAssignment]) -> TransferPlan:
    """Derives directive placements for the outlined unit.

    Flags select placement, never soundness: without `advancedload` or
    `delegatedstore` the transfers stay at the callsite; the flags move
    them to the last-CPU-write / first-CPU-read points, `noupdate`
    suppresses redundant per-call copies of resident data, `group`
    shares residency between kernels, and `asynchronous` defers
    completion to an explicit synchronize.
    """
    plan = TransferPlan()
    kernels = table.kernels
    for k in kernels:
        k.flags.validate()
        if k.flags.noupdate and not k.flags.advancedload:
            raise PlanError("noupdate requested without any load for %s"
                            % k.label)

    # groups: members in program order, shared symbols mapped by name
    by_ga: dict[int, list[Kernel]] = {}
    for k in kernels:
        ga = groups.get(k.block_id)
        if ga is not None and k.flags.group:
            by_ga.setdefault(ga.ordinal, []).append(k)
            plan.group_of[k.label] = ga.label
    for ordinal in sorted(by_ga):
        ks = sorted(by_ga[ordinal], key=lambda k: table.site(k.callsite))
        label = groups[ks[0].block_id].label
        gp = GroupPlan(label, [k.label for k in ks])
        plan.groups.append(gp)

    # per-group mapped (resident) symbols, in first kernel-use order;
    # a symbol maps only when every member can rely on the early load
    for gp in plan.groups:
        members = [table.kernel_of(lbl) for lbl in gp.kernels]
        seen: list[str] = []
        for k in members:
            for p in k.array_params:
                sym = p.caller_symbol
                if sym in seen:
                    continue
                users = [m for m in members
                         if any(q.caller_symbol == sym for q in m.array_params)]
                if all(load_point(sym, m.label, table) is not None
                       for m in users):
                    seen.append(sym)
        gp.mapbyname = seen
        plan.mapped[gp.label] = seen
        for k_label in gp.kernels:
            for sym in seen:
                plan.io_override[(k_label, sym)] = "in"

    _plan_loads(plan, table)
    _plan_stores(plan, table)
    _plan_async(plan, table)
    _plan_releases(plan, table)
    return plan


def _kernel_inputs(k: Kernel) -> list[str]:
    return [p.caller_symbol for p in k.array_params if p.io in ("in", "inout")]


def _kernel_outputs(k: Kernel) -> list[str]:
    out = [p.caller_symbol for p in k.array_params if p.io in ("out", "inout")]
    out.extend(p.caller_symbol for p in k.codelet.params if p.reduced)
    return out


def _plan_loads(plan: TransferPlan, table: ContextTable):
    loaded: dict[tuple[str, str], InsertionPoint] = {}  # (scope, sym) -> point
    for k in table.kernels:
        group = plan.group_of.get(k.label)
        scope = group or k.label
        if not k.flags.advancedload:
            continue
        for p in k.array_params:
            sym = p.caller_symbol
            if address_disabled(sym, table):
                plan.diagnostics.append(
                    "address of %r is taken; falling back to per-callsite "
                    "transfers" % sym)
                continue
            mapped = plan.is_mapped(k.label, sym)
            group_read = group is not None and mapped and _group_reads(
                plan, table, group, sym)
            if p.io not in ("in", "inout") and not group_read:
                continue
            if (scope, sym) in loaded:
                continue
            point = load_point(sym, k.label, table)
            if point is None:
                continue  # per-callsite transfer is already optimal
            loaded[(scope, sym)] = point
            plan.loads.append(LoadPlan(sym, point, k.label, group))
        # noupdate marks arguments whose device copy stays valid: ones
        # loaded early, plus group-mapped ones (resident by construction)
        if k.flags.noupdate:
            marks = []
            for p in k.array_params:
                sym = p.caller_symbol
                if (scope, sym) in loaded or plan.is_mapped(k.label, sym):
                    marks.append(sym)
            if marks:
                plan.noupdate[k.label] = marks


def _group_reads(plan: TransferPlan, table: ContextTable, group: str,
                 sym: str) -> bool:
    """True when any member of the group reads the symbol, making it a
    group-level input worth one shared upload."""
    labels = [l for gp in plan.groups if gp.label == group for l in gp.kernels]
    for label in labels:
        for ev in table.of(sym):
            if ev.host.kernel == label and ev.kind in ("read", "addr"):
                return True
    return False


def _plan_stores(plan: TransferPlan, table: ContextTable):
    stored: set[tuple[str, str]] = set()
    for k in table.kernels:
        group = plan.group_of.get(k.label)
        scope = group or k.label
        for p in k.codelet.params:
            if not (p.is_array or p.reduced):
                continue
            sym = p.caller_symbol
            is_output = (p.reduced or p.io in ("out", "inout"))
            if not is_output:
                continue
            read = first_cpu_read_site(sym, k.label, table)
            if read is None:
                continue  # dead output, no download
            mapped = plan.is_mapped(k.label, sym)
            noup = plan.has_noupdate(k.label, sym)
            suppressed = mapped or noup
            if p.reduced:
                # auto per-call transfer handles the scalar except under
                # asynchronous execution, where completion is explicit
                if not k.flags.asynchronous:
                    continue
                point = (read if k.flags.delegatedstore
                         else InsertionPoint(k.callsite, "after"))
                plan.stores.append(StorePlan(p.name, "&" + sym, point,
                                             k.label, group, sym))
                continue
            if not suppressed and not k.flags.delegatedstore:
                continue  # auto download at the callsite
            writer = _last_writer(plan, table, k, sym)
            if (scope, sym) in stored:
                continue
            stored.add((scope, sym))
            point = (read if k.flags.delegatedstore
                     else InsertionPoint(writer.callsite, "after"))
            plan.stores.append(StorePlan(sym, sym, point, writer.label, group))


def _last_writer(plan: TransferPlan, table: ContextTable, k: Kernel,
                 sym: str) -> Kernel:
    group = plan.group_of.get(k.label)
    if group is None:
        return k
    members = [m for m in table.kernels
               if plan.group_of.get(m.label) == group]
    writers = [m for m in members
               if any(ev.host.kernel == m.label and ev.kind == "write"
                      for ev in table.of(sym))]
    if not writers:
        return k
    return max(writers, key=lambda m: table.site(m.callsite))


def _plan_async(plan: TransferPlan, table: ContextTable):
    for k in table.kernels:
        if not k.flags.asynchronous:
            continue
        best: Optional[InsertionPoint] = None
        best_site = None
        for sym in _kernel_outputs(k):
            point = first_cpu_read_site(sym, k.label, table)
            if point is None:
                continue
            site = table.site(point.anchor)
            if best_site is None or site < best_site:
                best, best_site = point, site
        if best is None:
            best = InsertionPoint(k.callsite, "after")
        plan.asyncs.append(SyncPlan(k.label, plan.group_of.get(k.label), best))


def _plan_releases(plan: TransferPlan, table: ContextTable):
    def last_anchor(labels: list[str]) -> InsertionPoint:
        latest: Optional[Stmt] = None
        latest_site = -1
        for k in table.kernels:
            if k.label not in labels:
                continue
            for cand in [k.callsite] + \
                    [s.point.anchor for s in plan.stores if s.label == k.label] + \
                    [l.point.anchor for l in plan.loads if l.label == k.label] + \
                    [a.point.anchor for a in plan.asyncs if a.label == k.label]:
                site = table.site(cand)
                if site > latest_site:
                    latest, latest_site = cand, site
        return InsertionPoint(latest, "after")

    for gp in plan.groups:
        if any(table.kernel_of(lbl).flags.release for lbl in gp.kernels):
            plan.releases.append(ReleasePlan(gp.label, True,
                                             last_anchor(gp.kernels)))
    for k in table.kernels:
        if k.flags.release and k.label not in plan.group_of:
            plan.releases.append(ReleasePlan(k.label, False,
                                             last_anchor([k.label])))


# ---------------------------------------------------------------------------
# debug dumps (line oriented, for golden tests)


def dump_context(table: ContextTable) -> str:
    lines = []
    for sym in sorted(table.events):
        for ev in table.of(sym):
            lines.append("event %s %s %s site=%d loops=%s"
                         % (sym, ev.kind, ev.host.render(), ev.site,
                            list(ev.loop_path)))
    return "\n".join(lines) + "\n"


def dump_plan(plan: TransferPlan, table: ContextTable) -> str:
    lines = []
    for gp in plan.groups:
        lines.append("group %s kernels=[%s] mapbyname=[%s]"
                     % (gp.label, ", ".join(gp.kernels),
                        ", ".join(gp.mapbyname)))
    for l in plan.loads:
        lines.append("advancedload %s %s site=%d label=%s"
                     % (l.symbol, l.point.position, table.site(l.point.anchor),
                        l.label))
    for s in plan.stores:
        lines.append("delegatedstore %s addr=%s %s site=%d label=%s"
                     % (s.symbol, s.addr, s.point.position,
                        table.site(s.point.anchor), s.label))
    for label in sorted(plan.noupdate):
        lines.append("noupdate %s [%s]" % (label,
                                           ", ".join(plan.noupdate[label])))
    for a in plan.asyncs:
        lines.append("asynchronous %s synchronize %s site=%d"
                     % (a.label, a.point.position, table.site(a.point.anchor)))
    for r in plan.releases:
        lines.append("release %s" % r.name)
    return "\n".join(lines) + "\n"
