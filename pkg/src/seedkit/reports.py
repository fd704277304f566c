"""CSV files and plain-text tables for reductions and campaign comparisons.

Layout of a comparison directory::

    reduction.csv  reduction.json  seed.original  seed.reduced  plan.json
    original/job-1/{paths.csv,crashes.csv,coverage.txt,summary.csv}
    reduced/job-1/...
    paths_avg.csv  crash_summary.csv  coverage_summary.csv  summary.txt  paths.png

Everything past the per-job files is rebuilt from those files alone, so
``seedkit report`` can regenerate it.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from typing import Dict, List, Optional, Sequence, Tuple

from .model import CoverageSet, format_percent
from .oracle import parse_coverage_report, serialize_coverage

REDUCTION_COLUMNS = (
    "seed_type",
    "target",
    "original_size",
    "reduced_size",
    "size_reduction",
    "coverage_similarity",
    "reduction_time",
)
REDUCTION_HEADINGS = (
    "Seed type",
    "Test target",
    "t_o size (bytes)",
    "t_r size (bytes)",
    "Size reduction",
    "Coverage similarity",
    "Reduction time",
)
PATHS_COLUMNS = ("elapsed_ms", "total_paths")
CRASHES_COLUMNS = ("elapsed_ms", "signature")
RUN_SUMMARY_COLUMNS = ("total_paths", "unique_crashes", "lines", "branches", "executions", "elapsed_ms")
ARMS = ("original", "reduced")

Curve = List[Tuple[int, int]]


def elapsed_ms(seconds: float) -> int:
    return round(seconds * 1000)


def _write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def format_table(headings: Sequence[str], rows: Sequence[Sequence], title: Optional[str] = None) -> str:
    cells = [list(map(str, headings))] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headings))]
    rule = "+-" + "-+-".join("-" * w for w in widths) + "-+"

    def line(row):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |"

    out = []
    if title:
        out.append(title)
    out += [rule, line(cells[0]), rule]
    out += [line(r) for r in cells[1:]]
    out.append(rule)
    return "\n".join(out) + "\n"


# -- reductions -------------------------------------------------------------


def reduction_row(report) -> Dict[str, str]:
    return {
        "seed_type": report.seed_type.value,
        "target": report.target_name,
        "original_size": str(report.original_size),
        "reduced_size": str(report.reduced_size),
        "size_reduction": format_percent(report.size_reduction),
        "coverage_similarity": format_percent(100 * report.coverage_similarity),
        "reduction_time": f"{report.elapsed:.3f}s",
    }


def write_reduction_csv(path, reports) -> None:
    _write_csv(path, REDUCTION_COLUMNS, ([reduction_row(r)[c] for c in REDUCTION_COLUMNS] for r in reports))


def read_reduction_csv(path) -> List[Dict[str, str]]:
    return _read_csv(path)


def _thousands(value: str) -> str:
    return f"{int(value):,}" if value.isdigit() else value


def format_reduction_table(rows: Sequence[Dict[str, str]]) -> str:
    body = []
    for row in rows:
        cells = [row[c] for c in REDUCTION_COLUMNS]
        cells[2], cells[3] = _thousands(cells[2]), _thousands(cells[3])
        body.append(cells)
    return format_table(REDUCTION_HEADINGS, body, title="Reduction results")


def write_reduction_json(path, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- single campaigns -------------------------------------------------------


def write_campaign(run_dir, stats) -> None:
    os.makedirs(run_dir, exist_ok=True)
    _write_csv(
        os.path.join(run_dir, "paths.csv"),
        PATHS_COLUMNS,
        ((elapsed_ms(e.elapsed), e.total_paths) for e in stats.path_events),
    )
    _write_csv(
        os.path.join(run_dir, "crashes.csv"),
        CRASHES_COLUMNS,
        ((elapsed_ms(c.elapsed), c.signature) for c in stats.crashes),
    )
    with open(os.path.join(run_dir, "coverage.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_coverage(CoverageSet(stats.statements, stats.branches)))
    _write_csv(
        os.path.join(run_dir, "summary.csv"),
        RUN_SUMMARY_COLUMNS,
        [(
            stats.total_paths,
            stats.unique_crashes,
            stats.cumulative_statements,
            stats.cumulative_branches,
            stats.executions,
            elapsed_ms(stats.elapsed),
        )],
    )


def read_paths_csv(path) -> Curve:
    return [(int(r["elapsed_ms"]), int(r["total_paths"])) for r in _read_csv(path)]


def read_run_summary(path) -> Dict[str, int]:
    (row,) = _read_csv(path)
    return {k: int(v) for k, v in row.items()}


def read_run_coverage(path) -> CoverageSet:
    with open(path, encoding="utf-8") as fh:
        return parse_coverage_report(fh.read())


# -- comparisons ------------------------------------------------------------


def value_at(curve: Curve, t_ms: int) -> int:
    """Path total at ``t_ms``: the last event at or before it (carried forward)."""
    value = 0
    for when, total in curve:
        if when > t_ms:
            break
        value = total
    return value


def bucket_times(end_ms: int, bucket_ms: int) -> List[int]:
    if bucket_ms < 1:
        raise ValueError("bucket must be at least 1 ms")
    return list(range(0, end_ms + 1, bucket_ms))


def bucket_average(curves: Sequence[Curve], times: Sequence[int]) -> List[float]:
    if not curves:
        return [0.0 for _ in times]
    return [sum(value_at(c, t) for c in curves) / len(curves) for t in times]


_JOB_DIR = re.compile(r"^job-(\d+)$")


def job_dirs(out_dir, arm: str, limit: Optional[int] = None) -> List[str]:
    root = os.path.join(out_dir, arm)
    if not os.path.isdir(root):
        return []
    found = []
    for name in os.listdir(root):
        m = _JOB_DIR.match(name)
        if limit is not None and m and int(m.group(1)) > limit:
            continue
        if m and os.path.isfile(os.path.join(root, name, "summary.csv")):
            found.append((int(m.group(1)), os.path.join(root, name)))
    return [path for _, path in sorted(found)]


def crash_summary(target: str, summaries: Dict[str, List[Dict[str, int]]]) -> Tuple[List[str], List]:
    header = ["target"]
    row = [target]
    for arm in ARMS:
        for i, s in enumerate(summaries.get(arm, []), start=1):
            header.append(f"{arm}_job_{i}")
            row.append(s["unique_crashes"])
    return header, [row]


def coverage_summary(target: str, coverage: Dict[str, CoverageSet]) -> Tuple[List[str], List]:
    header = ["target"]
    row = [target]
    for arm in ARMS:
        cov = coverage.get(arm, CoverageSet())
        header += [f"{arm}_lines", f"{arm}_branches"]
        row += [len(cov.statements), len(cov.branches)]
    return header, [row]


def _fmt_avg(value: float) -> str:
    return f"{value:.4f}"


def _load_plan(out_dir) -> dict:
    path = os.path.join(out_dir, "plan.json")
    if not os.path.isfile(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def build_report(out_dir, target: Optional[str] = None, bucket_s: Optional[float] = None,
                 duration_s: Optional[float] = None, figure: bool = True) -> Dict[str, str]:
    """Aggregate per-job files under ``out_dir`` into summary CSVs, tables and a figure."""
    plan = _load_plan(out_dir)
    if target is None:
        target = plan.get("target_label", "target")
    if bucket_s is None:
        bucket_s = plan.get("bucket_seconds", 1.0)
    if duration_s is None:
        duration_s = plan.get("campaign", {}).get("duration")

    curves: Dict[str, List[Curve]] = {}
    summaries: Dict[str, List[Dict[str, int]]] = {}
    coverage: Dict[str, CoverageSet] = {}
    for arm in ARMS:
        dirs = job_dirs(out_dir, arm, plan.get("repetitions"))
        curves[arm] = [read_paths_csv(os.path.join(d, "paths.csv")) for d in dirs]
        summaries[arm] = [read_run_summary(os.path.join(d, "summary.csv")) for d in dirs]
        cov = CoverageSet()
        for d in dirs:
            cov = cov | read_run_coverage(os.path.join(d, "coverage.txt"))
        coverage[arm] = cov

    if duration_s is not None:
        end_ms = elapsed_ms(duration_s)
    else:
        end_ms = max((s["elapsed_ms"] for arm in ARMS for s in summaries[arm]), default=0)
    bucket_ms = max(1, elapsed_ms(bucket_s))
    times = bucket_times(end_ms, bucket_ms)
    averages = {arm: bucket_average(curves[arm], times) for arm in ARMS}

    written = {}
    path = os.path.join(out_dir, "paths_avg.csv")
    _write_csv(path, ("elapsed_ms",) + ARMS,
               ([t] + [_fmt_avg(averages[a][i]) for a in ARMS] for i, t in enumerate(times)))
    written["paths_avg"] = path

    crash_header, crash_rows = crash_summary(target, summaries)
    path = os.path.join(out_dir, "crash_summary.csv")
    _write_csv(path, crash_header, crash_rows)
    written["crash_summary"] = path

    cov_header, cov_rows = coverage_summary(target, coverage)
    path = os.path.join(out_dir, "coverage_summary.csv")
    _write_csv(path, cov_header, cov_rows)
    written["coverage_summary"] = path

    text = io.StringIO()
    reduction_csv = os.path.join(out_dir, "reduction.csv")
    if os.path.isfile(reduction_csv):
        text.write(format_reduction_table(read_reduction_csv(reduction_csv)))
        text.write("\n")
    final_rows = []
    for arm in ARMS:
        finals = [s["total_paths"] for s in summaries[arm]]
        mean = sum(finals) / len(finals) if finals else 0.0
        final_rows.append([arm] + [str(f) for f in finals] + [_fmt_avg(mean)])
    jobs = max((len(summaries[a]) for a in ARMS), default=0)
    text.write(format_table(
        ["Seed"] + [f"job-{i}" for i in range(1, jobs + 1)] + ["mean"],
        final_rows, title="Paths found (final total per job)"))
    text.write("\n")
    text.write(format_table(crash_header, crash_rows, title="Unique crashes per job"))
    text.write("\n")
    text.write(format_table(cov_header, cov_rows,
                            title="Lines (L) and branches (B) covered by all generated inputs"))
    path = os.path.join(out_dir, "summary.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text.getvalue())
    written["summary"] = path

    if figure:
        from .plotting import plot_paths

        path = os.path.join(out_dir, "paths.png")
        plot_paths(times, averages, curves, path, title=f"Paths over time on {target}")
        written["figure"] = path
    return written
