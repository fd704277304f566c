"""seedkit: constrained seed reduction for fuzzing, with a small fuzzer to measure the effect."""

__version__ = "0.1.0"

from .byteviz import ImageLayout, byte_to_color, render_dump, render_frame
from .fuzzer import CampaignConfig, CampaignStats, mutate, run_campaign
from .model import (
    CoverageSet,
    ExecutionOutcome,
    ExitStatus,
    ReductionConfig,
    Seed,
    SeedkitError,
    SeedType,
    Unit,
    cov_similarity,
    partition,
    percent_reduction,
    remove_chunk,
)
from .oracle import ExternalTarget, SimulatedTarget, execute, parse_target
from .reducer import ReductionReport, ReductionStatus, check_constraints, reduce

__all__ = [
    "CampaignConfig",
    "CampaignStats",
    "CoverageSet",
    "ExecutionOutcome",
    "ExitStatus",
    "ExternalTarget",
    "ImageLayout",
    "ReductionConfig",
    "ReductionReport",
    "ReductionStatus",
    "Seed",
    "SeedType",
    "SeedkitError",
    "SimulatedTarget",
    "Unit",
    "byte_to_color",
    "check_constraints",
    "cov_similarity",
    "execute",
    "mutate",
    "parse_target",
    "partition",
    "percent_reduction",
    "reduce",
    "remove_chunk",
    "render_dump",
    "render_frame",
    "run_campaign",
]
