"""Original-vs-reduced seed comparison: reduce once, fuzz both seeds N times."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List

from . import reports
from .fuzzer import CampaignConfig, run_campaign
from .model import ReductionConfig, SeedkitError, Unit
from .oracle import ExternalTarget, SimulatedTarget, TargetSpec, parse_target
from .reducer import ReductionReport, reduce

log = logging.getLogger(__name__)


class CompareError(SeedkitError):
    pass


def target_to_dict(target: TargetSpec) -> dict:
    if isinstance(target, SimulatedTarget):
        return {"spec": target.label}
    return {
        "spec": target.command_template,
        "coverage_report": target.coverage_report_path,
        "workdir": target.workdir,
        "timeout": target.per_run_timeout,
        "env": list(target.env_passthrough) if target.env_passthrough is not None else None,
        "name": target.name,
    }


def target_from_dict(d) -> TargetSpec:
    if isinstance(d, str):
        return parse_target(d)
    d = dict(d)
    spec = d.pop("spec")
    if spec.startswith("sim:"):
        return parse_target(spec)
    external = {}
    for key, arg in (("coverage_report", "coverage_report_path"), ("workdir", "workdir"),
                     ("timeout", "per_run_timeout"), ("env", "env_passthrough"), ("name", "name")):
        if d.get(key) is not None:
            external[arg] = d[key]
    return ExternalTarget(spec, **external)


def _number(value: Fraction):
    return int(value) if value.denominator == 1 else float(value)


@dataclass
class ExperimentPlan:
    target: TargetSpec
    seed_path: str
    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    campaign: CampaignConfig = field(default_factory=CampaignConfig)
    repetitions: int = 3
    output_dir: str = "compare-out"
    bucket_seconds: float = 1.0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.bucket_seconds > 0:
            raise ValueError("bucket_seconds must be positive")

    def to_dict(self) -> dict:
        r = self.reduction
        return {
            "target": target_to_dict(self.target),
            "seed_path": self.seed_path,
            "reduction": {
                "c_percent": _number(r.c_percent),
                "r_percent": _number(r.r_percent),
                "time_budget": r.time_budget,
                "unit": r.unit.value,
                "unit_size": r.unit_size,
            },
            "campaign": asdict(self.campaign),
            "repetitions": self.repetitions,
            "output_dir": self.output_dir,
            "bucket_seconds": self.bucket_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        red = dict(d.get("reduction", {}))
        if "unit" in red:
            red["unit"] = Unit(red["unit"])
        return cls(
            target=target_from_dict(d["target"]),
            seed_path=d["seed_path"],
            reduction=ReductionConfig(**red),
            campaign=CampaignConfig(**d.get("campaign", {})),
            repetitions=d.get("repetitions", 3),
            output_dir=d.get("output_dir", "compare-out"),
            bucket_seconds=d.get("bucket_seconds", 1.0),
        )


def load_plan(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class CompareResult:
    reduction: ReductionReport
    summaries: Dict[str, List[Dict[str, int]]]
    files: Dict[str, str]

    def mean_final_paths(self, arm: str) -> float:
        finals = [s["total_paths"] for s in self.summaries[arm]]
        return sum(finals) / len(finals)


def _run_job(target, seed: bytes, config: CampaignConfig, run_dir: str) -> Dict[str, int]:
    stats = run_campaign(target, seed, config)
    reports.write_campaign(run_dir, stats)
    return reports.read_run_summary(os.path.join(run_dir, "summary.csv"))


def _mark_failed(run_dir: str, exc: BaseException) -> None:
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, "FAILED"), "w", encoding="utf-8") as fh:
        fh.write(f"{type(exc).__name__}: {exc}\n")


def run_compare(plan: ExperimentPlan, workers: int = 1, figure: bool = True) -> CompareResult:
    """Reduce the plan's seed, then fuzz both seeds ``plan.repetitions`` times.

    Job ``i`` of both arms uses ``rng_seed + i - 1``, so the two arms are
    paired. A failing campaign stops the comparison; finished jobs keep their
    files and the failed one gets a ``FAILED`` marker.
    """
    out = plan.output_dir
    os.makedirs(out, exist_ok=True)
    plan_dict = plan.to_dict()
    plan_dict["target_label"] = plan.target.label
    with open(os.path.join(out, "plan.json"), "w", encoding="utf-8") as fh:
        json.dump(plan_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(plan.seed_path, "rb") as fh:
        original = fh.read()
    report = reduce(plan.target, original, plan.reduction)
    log.info("reduction %s: %d -> %d bytes", report.status.value, report.original_size, report.reduced_size)
    with open(os.path.join(out, "seed.original"), "wb") as fh:
        fh.write(original)
    with open(os.path.join(out, "seed.reduced"), "wb") as fh:
        fh.write(report.reduced_bytes)
    reports.write_reduction_csv(os.path.join(out, "reduction.csv"), [report])
    reports.write_reduction_json(os.path.join(out, "reduction.json"), report)

    seeds = {"original": original, "reduced": report.reduced_bytes}
    jobs = []
    for i in range(1, plan.repetitions + 1):
        config = CampaignConfig(**{**asdict(plan.campaign), "rng_seed": plan.campaign.rng_seed + i - 1})
        for arm in reports.ARMS:
            jobs.append((arm, i, config, os.path.join(out, arm, f"job-{i}")))

    summaries: Dict[str, List[Dict[str, int]]] = {arm: [None] * plan.repetitions for arm in reports.ARMS}
    failure = None
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(job, pool.submit(_run_job, plan.target, seeds[job[0]], job[2], job[3])) for job in jobs]
            for (arm, i, _, run_dir), future in futures:
                try:
                    summaries[arm][i - 1] = future.result()
                except Exception as exc:  # noqa: BLE001 - any campaign failure aborts
                    _mark_failed(run_dir, exc)
                    if failure is None:
                        failure = (arm, i, exc)
                        for _, f in futures:
                            f.cancel()
    else:
        for arm, i, config, run_dir in jobs:
            try:
                summaries[arm][i - 1] = _run_job(plan.target, seeds[arm], config, run_dir)
            except Exception as exc:  # noqa: BLE001
                _mark_failed(run_dir, exc)
                failure = (arm, i, exc)
                break

    if failure is not None:
        arm, i, exc = failure
        with open(os.path.join(out, "INCOMPLETE"), "w", encoding="utf-8") as fh:
            fh.write(f"campaign {arm}/job-{i} failed: {exc}\n")
        raise CompareError(f"campaign {arm}/job-{i} failed: {exc}") from exc
    stale = os.path.join(out, "INCOMPLETE")
    if os.path.exists(stale):
        os.remove(stale)

    files = reports.build_report(out, target=plan.target.label, bucket_s=plan.bucket_seconds,
                                 duration_s=plan.campaign.duration, figure=figure)
    return CompareResult(report, summaries, files)
