import csv
import os
import shutil

import pytest

from scenarios import GOLDEN_DIR, GOLDEN_FILES, small_compare
from seedkit import reports
from seedkit.model import ReductionConfig
from seedkit.oracle import SimulatedTarget
from seedkit.reducer import reduce
from seedkit.simulated import header_payload_seed

REGEN = os.environ.get("SEEDKIT_REGEN_GOLDEN") == "1"


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


@pytest.fixture(scope="module")
def compare_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cmp")
    small_compare(root / "out", root)
    return root / "out"


def test_reduction_csv_columns(compare_dir):
    assert header(compare_dir / "reduction.csv") == [
        "seed_type", "target", "original_size", "reduced_size",
        "size_reduction", "coverage_similarity", "reduction_time"]


def test_crash_summary_columns(compare_dir):
    assert header(compare_dir / "crash_summary.csv") == [
        "target",
        "original_job_1", "original_job_2", "original_job_3",
        "reduced_job_1", "reduced_job_2", "reduced_job_3"]


def test_coverage_summary_columns(compare_dir):
    assert header(compare_dir / "coverage_summary.csv") == [
        "target", "original_lines", "original_branches", "reduced_lines", "reduced_branches"]


def test_per_run_csv_columns(compare_dir):
    job = compare_dir / "original" / "job-1"
    assert header(job / "paths.csv") == ["elapsed_ms", "total_paths"]
    assert header(job / "crashes.csv") == ["elapsed_ms", "signature"]
    assert header(job / "summary.csv") == list(reports.RUN_SUMMARY_COLUMNS)


def test_six_campaign_directories(compare_dir):
    dirs = [os.path.join(arm, d) for arm in ("original", "reduced") for d in os.listdir(compare_dir / arm)]
    assert len(dirs) == 6


@pytest.mark.parametrize("name", GOLDEN_FILES)
def test_golden_files(compare_dir, name):
    golden = os.path.join(GOLDEN_DIR, name)
    if REGEN:
        shutil.copy(compare_dir / name, golden)
    with open(golden, encoding="utf-8") as fh:
        expected = fh.read()
    assert (compare_dir / name).read_text(encoding="utf-8") == expected


def test_average_equals_mean_of_runs(compare_dir):
    with open(compare_dir / "paths_avg.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for arm in reports.ARMS:
        curves = []
        for job in sorted(os.listdir(compare_dir / arm)):
            with open(compare_dir / arm / job / "paths.csv", newline="") as fh:
                curves.append([(int(r["elapsed_ms"]), int(r["total_paths"])) for r in csv.DictReader(fh)])
        for row in rows:
            t = int(row["elapsed_ms"])
            values = []
            for curve in curves:
                before = [total for when, total in curve if when <= t]
                values.append(before[-1] if before else 0)
            assert float(row[arm]) == pytest.approx(sum(values) / len(values), abs=5e-5)
    assert rows[0]["elapsed_ms"] == "0" and rows[-1]["elapsed_ms"] == "500"


def test_coverage_summary_is_union(compare_dir):
    with open(compare_dir / "coverage_summary.csv", newline="") as fh:
        (row,) = list(csv.DictReader(fh))
    for arm in reports.ARMS:
        stmts, branches = set(), set()
        for job in os.listdir(compare_dir / arm):
            for line in (compare_dir / arm / job / "coverage.txt").read_text().splitlines():
                kind, ident = line.split()
                (stmts if kind == "stmt" else branches).add(ident)
        assert int(row[f"{arm}_lines"]) == len(stmts)
        assert int(row[f"{arm}_branches"]) == len(branches)


def test_report_rebuild_is_identical(compare_dir, tmp_path):
    copy = tmp_path / "copy"
    shutil.copytree(compare_dir, copy)
    for name in GOLDEN_FILES[1:]:
        os.remove(copy / name)
    reports.build_report(str(copy), figure=False)
    for name in GOLDEN_FILES:
        assert (copy / name).read_text() == (compare_dir / name).read_text()


def test_value_at_carries_forward():
    curve = [(0, 1), (150, 2), (400, 5)]
    assert [reports.value_at(curve, t) for t in (0, 149, 150, 399, 1000)] == [1, 1, 2, 2, 5]
    assert reports.value_at([], 10) == 0


def test_bucket_times():
    assert reports.bucket_times(1000, 250) == [0, 250, 500, 750, 1000]
    with pytest.raises(ValueError):
        reports.bucket_times(10, 0)


def test_reduction_row_and_table():
    report = reduce(SimulatedTarget("header-payload"), header_payload_seed(),
                    ReductionConfig(75, 40, unit_size=1024))
    row = reports.reduction_row(report)
    assert row["size_reduction"] == "99.22%"
    assert row["coverage_similarity"] == "100.00%"
    assert row["original_size"] == "131136"
    table = reports.format_reduction_table([row])
    assert "131,136" in table and "1,024" in table
    for heading in reports.REDUCTION_HEADINGS:
        assert heading in table


def test_format_table_shape():
    text = reports.format_table(["a", "bb"], [[1, 22], [333, 4]], title="T")
    lines = text.splitlines()
    assert lines[0] == "T"
    assert lines[1] == "+-----+----+"
    assert lines[2] == "| a   | bb |"
    assert len({len(line) for line in lines[1:]}) == 1
