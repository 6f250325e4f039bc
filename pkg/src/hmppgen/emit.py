"""Rendering transformed units into compilable C with canonical directives.

`build_variant` runs the whole per-variant pipeline (outline, inline,
context analysis, transfer planning, directive placement) and is the
single entry point the driver and the exploration harness use.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .context import (
    ContextTable, InsertionPoint, TransferPlan, build_context_table,
    build_transfer_plan, form_groups,
)
from .errors import PlanError
from .nodes import Block, SourceUnit, walk_stmts
from .pragmas import HmppArg, HmppDirective, OmpPragma
from .printer import print_expr, print_unit
from .transform import (
    Kernel, OmpBlock, check_global_scope, find_omp_blocks,
    inline_calls_in_place, insert_codelets, kernel_path_targets, outline_block,
)
from .variants import BASELINE, FlagSet, UnitVariant

# rendering order for directives sharing one insertion slot
_PRIORITY = {
    "group": 0, "mapbyname": 1, "advancedload": 2, "callsite": 3,
    "synchronize": 4, "delegatedstore": 5, "release": 6,
}


@dataclass
class RenderedVariant:
    name: str
    signature_text: str
    filename_sig: str
    source: str
    manifest: dict[str, int]
    unit: SourceUnit
    kernels: list[Kernel]
    plan: Optional[TransferPlan]
    table: Optional[ContextTable]
    diagnostics: list[str] = field(default_factory=list)


def _compact(expr) -> str:
    return print_expr(expr).replace(" ", "")


def _codelet_directive(k: Kernel, plan: TransferPlan) -> HmppDirective:
    group = plan.group_of.get(k.label)
    args = []
    for p in k.codelet.params:
        if p.io == "by-value-scalar":
            continue
        a = HmppArg(p.name)
        if p.reduced:
            a.size = "1"
        else:
            io = plan.io_override.get((k.label, p.caller_symbol), p.io)
            if io != "in" or plan.is_mapped(k.label, p.caller_symbol):
                a.io = io
            if p.size_expr is not None:
                a.size = _compact(p.size_expr)
        if a.io or a.size:
            args.append(a)
    star = not (k.flags.advancedload or k.flags.delegatedstore or k.flags.group)
    return HmppDirective(kind="codelet", group=group, label=k.label,
                         target=None if group else "CUDA", args=args,
                         star_transfer=star)


def _callsite_directive(k: Kernel, plan: TransferPlan) -> HmppDirective:
    group = plan.group_of.get(k.label)
    args = [HmppArg(s, noupdate=True) for s in plan.noupdate.get(k.label, [])]
    return HmppDirective(kind="callsite", group=group, label=k.label,
                         args=args, asynchronous=k.flags.asynchronous)


class _Attacher:
    """Resolves insertion points into concrete pragma slots."""

    def __init__(self, unit: SourceUnit):
        self.parent: dict[int, tuple[Block, int]] = {}
        for fn in unit.functions:
            for stmt in walk_stmts(fn.body):
                if isinstance(stmt, Block):
                    for i, s in enumerate(stmt.stmts):
                        self.parent[id(s)] = (stmt, i)
        self.slots: dict[int, list] = {}  # id(stmt)|id(block) -> entries
        self.trailing: dict[int, list] = {}
        self.seq = 0

    def add(self, point: InsertionPoint, directive: HmppDirective):
        self.seq += 1
        prio = _PRIORITY.get(directive.kind, 9)
        if point.position == "before":
            self.slots.setdefault(id(point.anchor), []).append(
                (prio, self.seq, directive, point.anchor))
            return
        if id(point.anchor) not in self.parent:
            raise PlanError("internal: insertion anchor is not inside a block")
        block, i = self.parent[id(point.anchor)]
        if i + 1 < len(block.stmts):
            nxt = block.stmts[i + 1]
            self.slots.setdefault(id(nxt), []).append(
                (prio, self.seq, directive, nxt))
        else:
            self.trailing.setdefault(id(block), []).append(
                (prio, self.seq, directive, block))

    def apply(self):
        for entries in self.slots.values():
            entries.sort(key=lambda e: (e[0], e[1]))
            anchor = entries[0][3]
            anchor.pragmas = [e[2] for e in entries] + anchor.pragmas
        for entries in self.trailing.values():
            entries.sort(key=lambda e: (e[0], e[1]))
            block = entries[0][3]
            block.trailing_pragmas.extend(e[2] for e in entries)


def attach_directives(unit: SourceUnit, kernels: list[Kernel],
                      plan: TransferPlan, table: ContextTable):
    """Places every planned directive onto the rewritten tree.

    Order at one callsite: group declaration, mapbyname, advancedloads,
    callsite, synchronize, delegatedstores, release.
    """
    att = _Attacher(unit)
    label_fn = {}
    for fn in unit.functions:
        label_fn[fn.name] = fn
    for k in kernels:
        codelet_fn = label_fn.get(k.label)
        if codelet_fn is not None:
            codelet_fn.pragmas = [_codelet_directive(k, plan)]
        k.callsite.pragmas = [_callsite_directive(k, plan)] + \
            [p for p in k.callsite.pragmas if not isinstance(p, HmppDirective)]
    if kernels:
        first = table.fn.body.stmts[0]
        for gp in plan.groups:
            att.add(InsertionPoint(first, "before"),
                    HmppDirective(kind="group", group=gp.label, target="CUDA"))
            if gp.mapbyname:
                att.add(InsertionPoint(first, "before"),
                        HmppDirective(kind="mapbyname", group=gp.label,
                                      symbols=list(gp.mapbyname)))
    for key, loads in _grouped_transfers(plan.loads):
        group, label, point = key
        args = [HmppArg(l.symbol, addr=l.symbol) for l in loads]
        att.add(point, HmppDirective(kind="advancedload", group=group,
                                     label=label, args=args))
    for key, stores in _grouped_transfers(plan.stores):
        group, label, point = key
        args = [HmppArg(s.symbol, addr=s.addr) for s in stores]
        att.add(point, HmppDirective(kind="delegatedstore", group=group,
                                     label=label, args=args))
    for sp in plan.asyncs:
        att.add(sp.point, HmppDirective(kind="synchronize", group=sp.group,
                                        label=sp.label))
    for rp in plan.releases:
        att.add(rp.point, HmppDirective(
            kind="release", group=rp.name if rp.grouped else None,
            label=None if rp.grouped else rp.name))
    att.apply()


def _grouped_transfers(plans):
    """Coalesces transfer plans sharing group, label and insertion point."""
    order = []
    groups = {}
    for p in plans:
        key = (p.group, p.label, id(p.point.anchor), p.point.position)
        if key not in groups:
            groups[key] = (p.point, [])
            order.append(key)
        groups[key][1].append(p)
    return [((groups[k][1][0].group, groups[k][1][0].label, groups[k][0]),
             groups[k][1]) for k in order]


def _dissolve_regions(blocks: list[OmpBlock],
                      flags_by_block: dict[int, FlagSet]):
    """When any sub-block of a parallel region is outlined, the region pragma
    dissolves and surviving sub-blocks become `parallel for` with the
    region's shared/private clauses carried over verbatim."""
    regions = {}
    for b in blocks:
        if b.region is not None:
            regions.setdefault(id(b.region), b.region)
    for region in regions.values():
        transformed = {id(b) for b in region.blocks
                       if not flags_by_block.get(b.block_id, BASELINE).baseline}
        if not transformed:
            continue
        region.stmt.pragmas = [p for p in region.stmt.pragmas
                               if p is not region.pragma]
        for b in region.blocks:
            if id(b) in transformed:
                continue
            merged = OmpPragma(
                kind="parallel_for",
                shared=b.pragma.shared + [s for s in region.pragma.shared
                                          if s not in b.pragma.shared],
                private=b.pragma.private + [s for s in region.pragma.private
                                            if s not in b.pragma.private],
                reduction=b.pragma.reduction, line=b.pragma.line)
            b.stmt.pragmas = [merged if p is b.pragma else p
                              for p in b.stmt.pragmas]


def build_variant(unit: SourceUnit, uv: UnitVariant,
                  extra_inline: "tuple[str, ...] | str" = ()) -> RenderedVariant:
    """Applies one UnitVariant to a parsed unit and renders the result."""
    work = copy.deepcopy(unit)
    blocks = find_omp_blocks(work)
    flags_by_block = {p.block_id: p.flags for p in uv.plans}
    diagnostics = []
    for b in blocks:
        if b.region is not None and (b.region.pragma.check or
                                     b.region.pragma.fixed):
            msg = ("check/fixed on a parallel region is not enumerable; "
                   "annotate the inner for blocks instead (line %d)"
                   % b.region.line)
            if msg not in diagnostics:
                diagnostics.append(msg)

    groups = form_groups(work, blocks, flags_by_block)
    kernels: list[Kernel] = []
    for b in blocks:
        flags = flags_by_block.get(b.block_id, BASELINE)
        if flags.baseline:
            continue
        if b.region is not None:
            tag = str(b.region.line)
        elif b.block_id in groups:
            tag = str(groups[b.block_id].anchor_line)
        else:
            tag = ""
        kernels.append(outline_block(work, b, flags, tag))
    _dissolve_regions(blocks, flags_by_block)

    plan = None
    table = None
    if kernels:
        insert_codelets(work, kernels)
        if extra_inline == "all":
            inline_calls_in_place(work, "all")
        else:
            targets = kernel_path_targets(work, kernels) | set(extra_inline)
            if targets:
                inline_calls_in_place(work, targets)
        table = build_context_table(work, kernels)
        for k in kernels:
            diagnostics.extend(check_global_scope(k.codelet, work))
        plan = build_transfer_plan(work, table, groups)
        diagnostics.extend(plan.diagnostics)
        attach_directives(work, kernels, plan, table)
    elif extra_inline:
        inline_calls_in_place(
            work, "all" if extra_inline == "all" else tuple(extra_inline))

    source = print_unit(work)
    manifest = _manifest_of(work)
    return RenderedVariant(
        name=uv.name, signature_text=uv.signature_text,
        filename_sig=uv.filename_sig, source=source, manifest=manifest,
        unit=work, kernels=kernels, plan=plan, table=table,
        diagnostics=diagnostics)


def _manifest_of(unit: SourceUnit) -> dict[str, int]:
    counts: dict[str, int] = {}

    def count(pragmas):
        for p in pragmas:
            if isinstance(p, HmppDirective):
                counts[p.kind] = counts.get(p.kind, 0) + 1

    for fn in unit.functions:
        count(fn.pragmas)
        for stmt in walk_stmts(fn.body):
            count(stmt.pragmas)
            if isinstance(stmt, Block):
                count(stmt.trailing_pragmas)
    return counts


def emit_variant(unit: SourceUnit, uv: UnitVariant) -> RenderedVariant:
    """Pure rendering entry point: same input, byte-identical output."""
    return build_variant(unit, uv)


def write_variants(rendered: list[RenderedVariant], stem: str,
                   out_dir) -> Path:
    """Writes `<stem>__<a>_<b>_<c>.c` files plus a line-oriented manifest
    index mapping variant name -> signature -> file path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for rv in rendered:
        path = out / ("%s__%s.c" % (stem, rv.filename_sig))
        path.write_text(rv.source, encoding="utf-8")
        lines.append("%s\t%s\t%s" % (rv.name, rv.signature_text, path.name))
    index = out / "manifest.txt"
    index.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return index
