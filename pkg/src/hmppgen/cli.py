"""Command-line driver: transform one configuration, explore a variant
space end to end, or post-process a measurement CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .context import dump_context, dump_plan
from .emit import build_variant, write_variants
from .errors import (
    AnalysisError, CParseError, ExploreError, PlanError, ReportError,
    SourceError, TransformError,
)
from .explore import (
    ExecutorSpec, Measurement, parse_executor_config, run_exploration,
)
from .parser import parse_file
from .report import emit_plot_data, parse_csv, speedup, write_csv
from .transform import find_omp_blocks
from .variants import (
    BASELINE, DEFAULT_VARIANT_CAP, FlagSet, Signature, UnitVariant,
    VariantPlan, decode_signature, enumerate_variants, plans_for_unit,
)


def _err(msg: str):
    print(msg, file=sys.stderr)


def _parse_blocks_filter(text: str | None) -> set[int] | None:
    if not text:
        return None
    try:
        return {int(p) for p in text.split(",") if p.strip()}
    except ValueError:
        raise ReportError("--blocks takes a comma-separated list of line "
                          "numbers, got %r" % text)


def _block_plan_lists(unit, blocks, selected_lines, group_probe):
    """Per-block plan lists in block order: fixed pins, check enumerates,
    anything else (or unselected) stays baseline."""
    out = []
    for b in blocks:
        if selected_lines is not None and b.line not in selected_lines:
            out.append([VariantPlan.of(b.block_id, BASELINE)])
            continue
        eligible = group_probe.get(b.block_id, False)
        out.append(enumerate_variants(b.block_id, b.pragma, eligible))
    return out


def _group_eligibility(unit, blocks) -> dict[int, bool]:
    """A block may enumerate group variants only when at least two kernels
    could share accelerator state."""
    from .context import form_groups
    probe_flags = {b.block_id: FlagSet(advancedload=True, group=True)
                   for b in blocks if b.annotated}
    ga = form_groups(unit, blocks, probe_flags)
    out = {}
    for b in blocks:
        a = ga.get(b.block_id)
        out[b.block_id] = a is not None and len(a.block_ids) >= 2
    return out


def _region_warnings(blocks) -> list[str]:
    seen = []
    for b in blocks:
        if b.region is not None and (b.region.pragma.check or
                                     b.region.pragma.fixed is not None):
            msg = ("warning: check/fixed on the parallel region at line %d "
                   "is not enumerable; annotate the inner for blocks"
                   % b.region.line)
            if msg not in seen:
                seen.append(msg)
    return seen


def cmd_transform(args) -> int:
    unit = parse_file(args.input)
    blocks = find_omp_blocks(unit)
    for w in _region_warnings(blocks):
        _err(w)
    selected = _parse_blocks_filter(args.blocks)
    out_dir = Path(args.out)
    stem = Path(args.input).stem
    annotated = {b.block_id for b in blocks
                 if b.annotated and (selected is None or b.line in selected)}
    if args.inline == "all":
        inline = "all"
    elif args.inline:
        inline = tuple(n.strip() for n in args.inline.split(",") if n.strip())
    else:
        inline = ()

    if not annotated and not inline:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / Path(args.input).name).write_text(
            Path(args.input).read_text(encoding="utf-8"), encoding="utf-8")
        _err("warning: no check/fixed block found; file copied unchanged")
        return 0

    plans = []
    for b in blocks:
        if b.block_id in annotated and b.pragma.fixed is not None:
            plans.append(VariantPlan.of(
                b.block_id, decode_signature(Signature(b.pragma.fixed))))
        elif b.block_id in annotated:
            plans.append(VariantPlan.of(b.block_id, FlagSet()))  # plain codelet
        else:
            plans.append(VariantPlan.of(b.block_id, BASELINE))
    varying = tuple(i for i, b in enumerate(blocks) if b.block_id in annotated)
    uv = UnitVariant(name="transformed", plans=tuple(plans), varying=varying)
    rv = build_variant(unit, uv, extra_inline=inline)
    for d in rv.diagnostics:
        _err(d)
    write_variants([rv], stem, out_dir)
    if args.dump_analysis and rv.table is not None and rv.plan is not None:
        Path(args.dump_analysis).write_text(
            dump_context(rv.table) + dump_plan(rv.plan, rv.table),
            encoding="utf-8")
    print("wrote %s__%s.c" % (stem, rv.filename_sig))
    return 0


def _measure(args, unit, blocks) -> tuple[list[Measurement], Path]:
    out_dir = Path(args.out)
    stem = Path(args.input).stem
    selected = _parse_blocks_filter(args.blocks)
    probe = _group_eligibility(unit, blocks)
    block_plans = _block_plan_lists(unit, blocks, selected, probe)
    unit_variants = plans_for_unit(block_plans, cap=args.cap)
    rendered = [build_variant(unit, uv) for uv in unit_variants]
    write_variants(rendered, stem, out_dir / "variants")
    executor = (parse_executor_config(args.executor) if args.executor
                else ExecutorSpec())
    measurements = run_exploration(rendered, executor, repetitions=args.reps,
                                   log_dir=out_dir / "logs")
    return measurements, out_dir


def cmd_explore(args) -> int:
    unit = parse_file(args.input)
    blocks = find_omp_blocks(unit)
    for w in _region_warnings(blocks):
        _err(w)
    if args.replay:
        measurements = parse_csv(Path(args.replay).read_text(encoding="utf-8"))
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    else:
        if not any(b.annotated for b in blocks):
            _err("error: explore needs at least one check or fixed block")
            return 2
        measurements, out_dir = _measure(args, unit, blocks)
    csv_text = write_csv(measurements)
    (out_dir / "report.csv").write_text(csv_text, encoding="utf-8")
    _summarize(measurements, out_dir, args.ops, args.baseline)
    failures = [m for m in measurements if m.failed]
    for m in failures:
        _err("variant %s failed: %s" % (m.name, m.reason))
    return 0


def cmd_report(args) -> int:
    measurements = parse_csv(Path(args.input).read_text(encoding="utf-8"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _summarize(measurements, out_dir, args.ops, args.baseline)
    return 0


def _summarize(measurements, out_dir, ops, baseline_sig):
    baseline_text = Signature.parse(baseline_sig).render() if baseline_sig \
        else "0, 0, 0"
    result = emit_plot_data(measurements, out_dir, op_count=ops,
                            baseline_signature=baseline_text)
    base = result["baseline"]
    for p in result["frontier"]:
        sig = next((m.signature_text for m in measurements
                    if m.name == p.variant), "?")
        print("pareto %s (%s) time_ms=%.6g energy_J=%.6g"
              % (p.variant, sig, p.time_ms, p.energy_J))
    for m in measurements:
        if m.failed:
            continue
        print("speedup %s (%s) %.6g" % (m.name, m.signature_text,
                                        speedup(base, m)))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hmppgen",
        description="Rewrite OpenMP-annotated C into HMPP directive variants "
                    "and rank them by time and energy.  Inputs must be "
                    "preprocessed (run `cpp` first); only #pragma lines may "
                    "remain.")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transform", help="render the pinned/default plans")
    t.add_argument("input")
    t.add_argument("--out", required=True)
    t.add_argument("--blocks", help="comma-separated pragma line numbers")
    t.add_argument("--inline", help="comma-separated functions to inline, "
                                    "or 'all'")
    t.add_argument("--dump-analysis", help="write the context/plan dump here")
    t.set_defaults(fn=cmd_transform)

    e = sub.add_parser("explore", help="enumerate, execute and rank variants")
    e.add_argument("input")
    e.add_argument("--out", required=True)
    e.add_argument("--executor", help="executor config file (key = value)")
    e.add_argument("--reps", type=int, default=5)
    e.add_argument("--cap", type=int, default=DEFAULT_VARIANT_CAP)
    e.add_argument("--ops", type=float, help="operation count for GOPS/W")
    e.add_argument("--baseline", help="baseline signature, e.g. '0,0,0'")
    e.add_argument("--replay", help="reuse a recorded CSV instead of running")
    e.add_argument("--blocks", help="comma-separated pragma line numbers")
    e.set_defaults(fn=cmd_explore)

    r = sub.add_parser("report", help="post-process a measurement CSV")
    r.add_argument("input")
    r.add_argument("--out", required=True)
    r.add_argument("--ops", type=float)
    r.add_argument("--baseline")
    r.set_defaults(fn=cmd_report)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (CParseError, TransformError, AnalysisError) as e:
        _err(e.format())
        return 1
    except (PlanError, ExploreError, ReportError, SourceError, OSError) as e:
        _err("error: %s" % e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
