"""Acceptance criteria A1-A7, each printed as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (or ``python
tests/test_acceptance.py``). A3 and A5 run six 60 s virtual-time campaigns
per seed triple and take a couple of minutes in total.
"""

import csv
import filecmp
import json
import os
import random
import sys
import time

import numpy as np
import pytest

from oracles import constraints_hold, single_unit_removals
from scenarios import GOLDEN_DIR, GOLDEN_FILES, VERDICTS, small_compare
from seedkit import reports
from seedkit.byteviz import DumpWriter, ImageLayout, byte_to_color, frame_name, read_dump, render_frame
from seedkit.cli import main
from seedkit.experiment import ExperimentPlan, run_compare
from seedkit.fuzzer import CampaignConfig
from seedkit.model import ReductionConfig, format_percent, percent_reduction
from seedkit.oracle import SimulatedTarget, execute
from seedkit.reducer import ReductionStatus, check_constraints, reduce
from seedkit.simulated import SAMPLE_XML, header_payload_seed

HP = SimulatedTarget("header-payload")
TRIPLE_BASES = (1, 4, 7)  # rng seeds 1-3, 4-6 and 7-9


def verdict(criterion, ok, detail):
    line = f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    VERDICTS[criterion] = line
    assert ok, line


# -- A1 ----------------------------------------------------------------------


def test_a1_formula_fidelity():
    start = time.perf_counter()
    a = percent_reduction(119, 19)
    b = percent_reduction(133432, 1024)
    elapsed_ms = (time.perf_counter() - start) * 1000
    got = (format_percent(a), format_percent(b))
    ok = got == ("84.03%", "99.23%") and elapsed_ms < 1.0
    verdict("A1", ok, f"{got[0]}, {got[1]} in {elapsed_ms:.4f} ms")


# -- A2 ----------------------------------------------------------------------


def run_a2(workdir):
    os.makedirs(workdir, exist_ok=True)
    seed = os.path.join(workdir, "big.bin")
    with open(seed, "wb") as fh:
        fh.write(header_payload_seed(131_072))
    start = time.perf_counter()
    code = main(["reduce", "--target", "sim:header-payload", "--seed", seed, "--c", "75", "--r", "40",
                 "--budget", "300s", "--unit-size", "1024", "--out", workdir])
    real = time.perf_counter() - start
    return code, real


@pytest.fixture(scope="module")
def a2_dir(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("a2"))
    return path, run_a2(path)


def test_a2_header_payload_reduction(a2_dir):
    path, (code, real) = a2_dir
    with open(os.path.join(path, "reduction.json")) as fh:
        report = json.load(fh)
    size = os.path.getsize(os.path.join(path, "big.bin.reduced"))
    ok = (code == 0 and report["status"] == "reduced" and size <= 2048
          and report["reduced_size"] == size and report["coverage_similarity"] >= 0.75 and real < 60)
    verdict("A2", ok, f"status={report['status']} size={size} B "
                      f"reduction={report['size_reduction']:.2f}% similarity={report['coverage_similarity']:.3f} "
                      f"real={real:.3f}s")


# -- A3 ----------------------------------------------------------------------


def a3_plan(seed_path, out_dir, base):
    return ExperimentPlan(
        target=HP,
        seed_path=seed_path,
        reduction=ReductionConfig(75, 40, 300, unit_size=1024),
        campaign=CampaignConfig(duration=60.0, rng_seed=base),
        repetitions=3,
        output_dir=out_dir,
        bucket_seconds=1.0,
    )


def run_a3(root):
    os.makedirs(root, exist_ok=True)
    seed_path = os.path.join(root, "seed.bin")
    with open(seed_path, "wb") as fh:
        fh.write(header_payload_seed(131_072))
    start = time.perf_counter()
    results = {}
    for base in TRIPLE_BASES:
        plan = a3_plan(seed_path, os.path.join(root, f"triple-{base}"), base)
        results[base] = run_compare(plan, workers=2, figure=False)
    return results, time.perf_counter() - start


@pytest.fixture(scope="module")
def a3_runs(tmp_path_factory):
    root = str(tmp_path_factory.mktemp("a3"))
    return root, run_a3(root)


def test_a3_reduced_seed_finds_more(a3_runs):
    _, (results, runtime) = a3_runs
    wins, crash_ok, parts = 0, 0, []
    for base, result in results.items():
        orig, red = result.mean_final_paths("original"), result.mean_final_paths("reduced")
        oc = sum(s["unique_crashes"] for s in result.summaries["original"])
        rc = sum(s["unique_crashes"] for s in result.summaries["reduced"])
        wins += red > orig
        crash_ok += rc >= oc
        parts.append(f"seeds {base}-{base + 2}: paths {orig:.2f} vs {red:.2f}, crashes {oc} vs {rc}")
    ok = wins == len(results) and crash_ok == len(results) and runtime <= 480
    verdict("A3", ok, f"{wins}/{len(results)} triples reduced>original; " + "; ".join(parts)
            + f"; runtime {runtime:.1f}s")


def csv_files(root):
    found = []
    for dirpath, _, names in os.walk(root):
        for name in names:
            if name.endswith(".csv") or name.startswith("seed."):
                found.append(os.path.relpath(os.path.join(dirpath, name), root))
    return sorted(found)


# -- A4 ----------------------------------------------------------------------

XML_ALPHABET = b"<>/= ab"


def random_instance(rng):
    name = rng.choice(["distinct-bytes", "constant-coverage", "xml-like"])
    unit_size = rng.choice([1, 1, 2])
    units = rng.randint(1, 12)
    length = rng.randint((units - 1) * unit_size + 1, units * unit_size)
    if name == "xml-like":
        if rng.random() < 0.5:
            start = rng.randrange(len(SAMPLE_XML) - length + 1)
            data = SAMPLE_XML[start : start + length]
        else:
            data = bytes(rng.choice(XML_ALPHABET) for _ in range(length))
    else:
        data = bytes(rng.randrange(6) for _ in range(length))
    return SimulatedTarget(name), data, unit_size, rng.choice([50, 75, 100]), rng.choice([0, 40])


def test_a4_one_minimality_oracle():
    rng = random.Random(20240601)
    agree, rejected, reduced, retained = 0, 0, 0, 0
    failures = []
    for i in range(200):
        target, data, unit_size, c, r = random_instance(rng)
        cfg = ReductionConfig(c, r, 300, unit_size=unit_size)
        report = reduce(target, data, cfg)
        orig = execute(target, data)
        out = report.reduced_bytes
        ok = not report.budget_expired
        if report.status is ReductionStatus.REJECTED:
            # no reduced output exists; the original is returned unchanged
            rejected += 1
            ok &= out == data
        else:
            reduced += report.status is ReductionStatus.REDUCED
            retained += report.status is ReductionStatus.ORIGINAL_RETAINED
            lib = check_constraints(orig, len(data), execute(target, out), len(out), cfg).passed
            ok &= lib and constraints_hold(orig, len(data), execute(target, out), len(out), c, r)
        # brute force: no single-unit removal of the output passes
        for cand in single_unit_removals(out, unit_size):
            cand_out = execute(target, cand)
            lib = check_constraints(orig, len(data), cand_out, len(cand), cfg).passed
            ref = constraints_hold(orig, len(data), cand_out, len(cand), c, r)
            ok &= not lib and not ref
        if ok:
            agree += 1
        else:
            failures.append((i, target.label, data, unit_size, c, r, report.status.value))
    verdict("A4", agree == 200,
            f"{agree}/200 agree (reduced {reduced}, original-retained {retained}, "
            f"rejected {rejected}); failures {failures[:3]}")


# -- A6 ----------------------------------------------------------------------


def test_a6_byteviz_fidelity(tmp_path):
    colors_ok = all("#%02x%02x%02x" % byte_to_color(b) == "#" + format(b, "02x") + "0000" for b in range(256))

    rng = random.Random(6)
    inputs = [rng.randbytes(rng.randrange(0, 200)) for _ in range(1000)]
    dump = tmp_path / "tests_generated"
    with DumpWriter(dump) as writer:
        for data in inputs:
            writer(data)
    round_trip = read_dump(dump) == inputs

    raster = render_frame(bytes([0x00, 0xFF, 0x41, 0x80]), ImageLayout(box_px=1, boxes_per_row=2))
    golden = np.array([[[0, 0, 0], [255, 0, 0]], [[65, 0, 0], [128, 0, 0]]], dtype=np.uint8)
    raster_ok = raster.shape == golden.shape and bool((raster == golden).all())

    naming_ok = frame_name(5572) == "file_000005572.png" == "file_%09d.png" % 5572
    verdict("A6", colors_ok and round_trip and raster_ok and naming_ok,
            f"colors 256/256={colors_ok}, round-trip 1000={round_trip}, 2x2 golden={raster_ok}, "
            f"naming={naming_ok}")


# -- A7 ----------------------------------------------------------------------

TABLE2 = ["seed_type", "target", "original_size", "reduced_size", "size_reduction",
          "coverage_similarity", "reduction_time"]
TABLE3 = ["target"] + [f"{arm}_job_{i}" for arm in ("original", "reduced") for i in (1, 2, 3)]
TABLE4 = ["target", "original_lines", "original_branches", "reduced_lines", "reduced_branches"]


def first_row(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_a7_report_shape(tmp_path):
    small_compare(tmp_path / "out", tmp_path)
    out = tmp_path / "out"
    shapes = {
        "reduction.csv": first_row(out / "reduction.csv") == TABLE2,
        "crash_summary.csv": first_row(out / "crash_summary.csv") == TABLE3,
        "coverage_summary.csv": first_row(out / "coverage_summary.csv") == TABLE4,
    }
    table = reports.format_reduction_table(reports.read_reduction_csv(out / "reduction.csv"))
    shapes["table2-text"] = all(h in table for h in reports.REDUCTION_HEADINGS)
    golden = {name: (out / name).read_text() == open(os.path.join(GOLDEN_DIR, name)).read()
              for name in GOLDEN_FILES}
    ok = all(shapes.values()) and all(golden.values())
    verdict("A7", ok, f"columns {sum(shapes.values())}/{len(shapes)}, "
                      f"golden files {sum(golden.values())}/{len(golden)}")


# -- A5 ----------------------------------------------------------------------


def test_a5_determinism(a2_dir, a3_runs, tmp_path):
    a2_path, _ = a2_dir
    rerun_a2 = str(tmp_path / "a2")
    run_a2(rerun_a2)
    mismatches = []
    for name in ("big.bin.reduced", "reduction.csv"):
        if not filecmp.cmp(os.path.join(a2_path, name), os.path.join(rerun_a2, name), shallow=False):
            mismatches.append(f"a2/{name}")

    a3_root, _ = a3_runs
    rerun_a3 = str(tmp_path / "a3")
    run_a3(rerun_a3)
    files = csv_files(a3_root)
    if files != csv_files(rerun_a3):
        mismatches.append("a3 file sets differ")
    for rel in files:
        if not filecmp.cmp(os.path.join(a3_root, rel), os.path.join(rerun_a3, rel), shallow=False):
            mismatches.append(f"a3/{rel}")
    verdict("A5", not mismatches,
            f"{len(files) + 2} files compared byte for byte, {len(mismatches)} differ {mismatches[:5]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
