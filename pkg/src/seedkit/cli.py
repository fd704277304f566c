"""Command-line entry point: ``seedkit {reduce,fuzz,compare,viz,report,gen-seed}``.

Settings resolve in three layers: built-in defaults, then an optional JSON
plan file (``--plan``), then explicit flags. ``--print-config`` shows the
result and exits.

Exit codes: 0 success (a rejected reduction included), 2 usage error,
3 target or oracle error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from typing import Optional

from . import __version__, reports
from .byteviz import DumpWriter, ImageLayout, render_dump
from .experiment import ExperimentPlan, load_plan, run_compare
from .fuzzer import MAX_INPUT_SIZE, CampaignConfig, run_campaign
from .model import ReductionConfig, SeedkitError, SeedType, Unit
from .oracle import parse_target
from .reducer import reduce
from .simulated import SAMPLE_XML, header_payload_seed

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TARGET = 3

log = logging.getLogger("seedkit")

DEFAULTS = {
    "target": None,
    "coverage_report": "{tmpdir}/coverage.txt",
    "workdir": None,
    "timeout": 10.0,
    "env": None,
    "target_name": None,
    "seed": None,
    "c": 75,
    "r": 40,
    "budget": 300.0,
    "seed_type": None,
    "unit_size": None,
    "duration": 60.0,
    "rng_seed": 1,
    "max_input_size": MAX_INPUT_SIZE,
    "stack": 4,
    "max_execs": None,
    "reps": 3,
    "out": None,
    "bucket": 1.0,
    "jobs": 1,
}

_DURATION = re.compile(r"^\s*(\d+(?:\.\d*)?|\.\d+)\s*(ms|s|m|min|h)?\s*$")
_SCALE = {None: 1.0, "s": 1.0, "ms": 1e-3, "m": 60.0, "min": 60.0, "h": 3600.0}


def parse_duration(text) -> float:
    """Seconds from ``"300"``, ``"300s"``, ``"5m"``, ``"250ms"`` or ``"1h"``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _DURATION.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r}")
    return float(m.group(1)) * _SCALE[m.group(2)]


def flatten_plan(plan: dict) -> dict:
    """Map a nested JSON plan onto the flat flag names."""
    flat = {}
    target = plan.get("target")
    if isinstance(target, str):
        flat["target"] = target
    elif isinstance(target, dict):
        flat["target"] = target.get("spec")
        for key, name in (("coverage_report", "coverage_report"), ("workdir", "workdir"),
                          ("timeout", "timeout"), ("env", "env"), ("name", "target_name")):
            if target.get(key) is not None:
                flat[name] = target[key]
    if "seed_path" in plan:
        flat["seed"] = plan["seed_path"]
    red = plan.get("reduction", {})
    for key, name in (("c_percent", "c"), ("r_percent", "r"), ("time_budget", "budget"),
                      ("unit_size", "unit_size")):
        if key in red:
            flat[name] = red[key]
    if "unit" in red:
        flat["seed_type"] = (SeedType.TEXT if Unit(red["unit"]) is Unit.CHAR else SeedType.BINARY).value
    camp = plan.get("campaign", {})
    for key, name in (("duration", "duration"), ("rng_seed", "rng_seed"),
                      ("max_input_size", "max_input_size"), ("mutation_stack_max", "stack"),
                      ("max_executions", "max_execs")):
        if key in camp:
            flat[name] = camp[key]
    for key, name in (("repetitions", "reps"), ("output_dir", "out"), ("bucket_seconds", "bucket")):
        if key in plan:
            flat[name] = plan[key]
    return flat


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(DEFAULTS)
    plan_path = getattr(args, "plan", None)
    if plan_path:
        settings.update(flatten_plan(load_plan(plan_path)))
    for key, value in vars(args).items():
        if key in DEFAULTS:
            settings[key] = value
    seed_type = SeedType(settings["seed_type"] or "binary")
    settings["seed_type"] = seed_type.value
    if settings["unit_size"] is None:
        settings["unit_size"] = seed_type.default_unit_size
    for key in ("budget", "duration", "timeout", "bucket"):
        settings[key] = parse_duration(settings[key])
    return settings


def build_target(s: dict):
    if not s["target"]:
        raise ValueError("a target is required (--target sim:<name> or a command with @@)")
    if s["target"].startswith("sim:"):
        return parse_target(s["target"])
    return parse_target(
        s["target"],
        coverage_report_path=s["coverage_report"],
        workdir=s["workdir"],
        per_run_timeout=s["timeout"],
        env_passthrough=s["env"],
        name=s["target_name"],
    )


def build_reduction(s: dict) -> ReductionConfig:
    seed_type = SeedType(s["seed_type"])
    return ReductionConfig(s["c"], s["r"], s["budget"], seed_type.default_unit, s["unit_size"])


def build_campaign(s: dict) -> CampaignConfig:
    return CampaignConfig(
        duration=s["duration"],
        rng_seed=s["rng_seed"],
        max_input_size=s["max_input_size"],
        mutation_stack_max=s["stack"],
        max_executions=s["max_execs"],
    )


def build_plan(s: dict) -> ExperimentPlan:
    if not s["seed"]:
        raise ValueError("--seed is required")
    return ExperimentPlan(
        target=build_target(s),
        seed_path=s["seed"],
        reduction=build_reduction(s),
        campaign=build_campaign(s),
        repetitions=s["reps"],
        output_dir=s["out"] or "compare-out",
        bucket_seconds=s["bucket"],
    )


def _read_seed(path: Optional[str]) -> bytes:
    if not path:
        raise ValueError("--seed is required")
    with open(path, "rb") as fh:
        return fh.read()


def _print_config(s: dict) -> int:
    print(json.dumps(s, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_reduce(args) -> int:
    s = resolve_settings(args)
    if args.print_config:
        return _print_config(s)
    target = build_target(s)
    config = build_reduction(s)
    data = _read_seed(s["seed"])
    report = reduce(target, data, config, workers=s["jobs"])

    output = args.output or f"{s['seed']}.reduced"
    with open(output, "wb") as fh:
        fh.write(report.reduced_bytes)
    out_dir = s["out"] or "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "reduction.csv")
    reports.write_reduction_csv(csv_path, [report])
    reports.write_reduction_json(os.path.join(out_dir, "reduction.json"), report)

    print(reports.format_reduction_table([reports.reduction_row(report)]), end="")
    status = report.status.value + (f" ({report.reason})" if report.reason else "")
    if report.budget_expired and report.reason is None:
        status += " (budget expired)"
    print(f"status: {status}; executions: {report.executions}")
    print(f"reduced seed: {output}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    s = resolve_settings(args)
    if args.print_config:
        return _print_config(s)
    target = build_target(s)
    config = build_campaign(s)
    data = _read_seed(s["seed"])
    out_dir = s["out"] or "fuzz-out"
    os.makedirs(out_dir, exist_ok=True)

    dump = None
    if args.emit_dump:
        dump = DumpWriter(args.emit_dump, flush_every=args.dump_flush, max_entries=args.dump_max)
    try:
        stats = run_campaign(target, data, config, on_input=dump)
    finally:
        if dump is not None:
            dump.close()
    reports.write_campaign(out_dir, stats)
    print(
        f"paths: {stats.total_paths}; unique crashes: {stats.unique_crashes}; "
        f"lines: {stats.cumulative_statements}; branches: {stats.cumulative_branches}; "
        f"executions: {stats.executions}; elapsed: {stats.elapsed:.3f}s"
    )
    if dump is not None:
        print(f"dump: {args.emit_dump} ({dump.written} entries)")
    return EXIT_OK


def cmd_compare(args) -> int:
    s = resolve_settings(args)
    if args.print_config:
        return _print_config(s)
    plan = build_plan(s)
    result = run_compare(plan, workers=s["jobs"], figure=not args.no_figure)
    with open(result.files["summary"], encoding="utf-8") as fh:
        print(fh.read(), end="")
    print(f"outputs in {plan.output_dir}")
    return EXIT_OK


def cmd_viz(args) -> int:
    layout = ImageLayout(box_px=args.box_px, boxes_per_row=args.row, max_bytes=args.max_bytes)
    frames = render_dump(args.dump, args.out, layout)
    print(f"wrote {len(frames)} frames to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    files = reports.build_report(args.dir, bucket_s=args.bucket, figure=not args.no_figure)
    with open(files["summary"], encoding="utf-8") as fh:
        print(fh.read(), end="")
    return EXIT_OK


def cmd_gen_seed(args) -> int:
    if args.kind == "header-payload":
        data = header_payload_seed(args.payload_size, rng_seed=args.random_payload)
    else:
        data = SAMPLE_XML
    with open(args.output, "wb") as fh:
        fh.write(data)
    print(f"wrote {len(data)} bytes to {args.output}")
    return EXIT_OK


def _add_target_args(p):
    g = p.add_argument_group("target")
    g.add_argument("--target", help="sim:<name> or a command template containing @@")
    g.add_argument("--coverage-report", dest="coverage_report",
                   help="coverage report path template ({tmpdir}, {run_id})")
    g.add_argument("--workdir")
    g.add_argument("--timeout", type=parse_duration, help="per-run timeout")
    g.add_argument("--env", action="append", help="environment variable to pass through (repeatable)")
    g.add_argument("--target-name", dest="target_name")


def _add_reduce_args(p):
    g = p.add_argument_group("reduction")
    g.add_argument("--c", type=float, help="minimum coverage similarity, percent (default 75)")
    g.add_argument("--r", type=float, help="minimum size reduction, percent (default 40)")
    g.add_argument("--budget", type=parse_duration, help="time budget (default 300s)")
    g.add_argument("--seed-type", dest="seed_type", choices=[t.value for t in SeedType],
                   help="text: 1-character units; binary: 1024-byte units")
    g.add_argument("--unit-size", dest="unit_size", type=int, help="override the chunk unit size")


def _add_campaign_args(p):
    g = p.add_argument_group("campaign")
    g.add_argument("--duration", type=parse_duration, help="campaign budget (default 60s)")
    g.add_argument("--rng-seed", dest="rng_seed", type=int)
    g.add_argument("--max-input-size", dest="max_input_size", type=int)
    g.add_argument("--stack", type=int, help="maximum stacked mutations per input")
    g.add_argument("--max-execs", dest="max_execs", type=int, help="execution-count budget")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seedkit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def subparser(name, func, help):
        p = sub.add_parser(name, help=help, argument_default=argparse.SUPPRESS)
        p.set_defaults(func=func)
        return p

    p = subparser("reduce", cmd_reduce, "reduce a seed under coverage/size/exit-status constraints")
    p.add_argument("--seed", help="seed file")
    p.add_argument("--plan", help="JSON plan file")
    p.add_argument("--output", default=None, help="reduced seed path (default <seed>.reduced)")
    p.add_argument("--out", help="directory for reduction.csv (default .)")
    p.add_argument("--jobs", type=int, help="speculative parallel candidate runs")
    p.add_argument("--print-config", dest="print_config", action="store_true", default=False)
    _add_target_args(p)
    _add_reduce_args(p)

    p = subparser("fuzz", cmd_fuzz, "run one fuzzing campaign")
    p.add_argument("--seed", help="initial seed file")
    p.add_argument("--plan", help="JSON plan file")
    p.add_argument("--out", help="directory for paths.csv etc. (default fuzz-out)")
    p.add_argument("--emit-dump", dest="emit_dump", default=None, help="append every generated input to this dump")
    p.add_argument("--dump-flush", dest="dump_flush", type=int, default=1)
    p.add_argument("--dump-max", dest="dump_max", type=int, default=None)
    p.add_argument("--print-config", dest="print_config", action="store_true", default=False)
    _add_target_args(p)
    _add_campaign_args(p)

    p = subparser("compare", cmd_compare, "reduce a seed, then fuzz original and reduced seeds")
    p.add_argument("--seed", help="seed file")
    p.add_argument("--plan", help="JSON plan file")
    p.add_argument("--out", help="output directory (default compare-out)")
    p.add_argument("--reps", type=int, help="campaigns per seed (default 3)")
    p.add_argument("--bucket", type=parse_duration, help="averaging bucket (default 1s)")
    p.add_argument("--jobs", type=int, help="campaigns to run in parallel")
    p.add_argument("--no-figure", dest="no_figure", action="store_true", default=False)
    p.add_argument("--print-config", dest="print_config", action="store_true", default=False)
    _add_target_args(p)
    _add_reduce_args(p)
    _add_campaign_args(p)

    p = subparser("viz", cmd_viz, "render a color dump as numbered PNG frames")
    p.add_argument("--dump", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--box-px", dest="box_px", type=int, default=8)
    p.add_argument("--row", type=int, default=32, help="boxes per row")
    p.add_argument("--max-bytes", dest="max_bytes", type=int, default=None)

    p = subparser("report", cmd_report, "rebuild summary tables and figures of a compare directory")
    p.add_argument("--dir", required=True)
    p.add_argument("--bucket", type=parse_duration, default=None)
    p.add_argument("--no-figure", dest="no_figure", action="store_true", default=False)

    p = subparser("gen-seed", cmd_gen_seed, "write a synthetic seed for a simulated target")
    p.add_argument("--kind", choices=["header-payload", "xml"], default="header-payload")
    p.add_argument("--payload-size", dest="payload_size", type=int, default=131_072)
    p.add_argument("--random-payload", dest="random_payload", type=int, default=None,
                   help="fill the payload from this RNG seed instead of zeros")
    p.add_argument("--output", required=True)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"seedkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SeedkitError as exc:
        print(f"seedkit: {exc}", file=sys.stderr)
        return EXIT_TARGET
    except OSError as exc:
        print(f"seedkit: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
