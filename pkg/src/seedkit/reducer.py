"""Constraint-guided delta debugging of fuzzing seeds.

A candidate is accepted only when, compared with the *original* seed, it

* ends in the same exit status,
* still covers at least C% of the original's statements, and
* is at least R% smaller.

The search is classic ddmin over unit-sized chunks: try each chunk alone,
then each complement, then double the granularity; stop when no single
chunk can be removed (1-minimal) or the time budget runs out.
"""

from __future__ import annotations

import enum
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

from .clock import clock_for
from .model import (
    ExecutionOutcome,
    ReductionConfig,
    Seed,
    SeedkitError,
    SeedType,
    partition,
    percent_reduction,
    reduction_fraction,
    remove_chunk,
    similarity_fraction,
)
from .oracle import TargetSpec, execute

log = logging.getLogger(__name__)


class ReductionError(SeedkitError):
    pass


class Constraint(str, enum.Enum):
    EXIT_STATUS = "exit-status"
    COVERAGE = "coverage"
    REDUCTION = "reduction"


@dataclass(frozen=True)
class ConstraintCheck:
    violated: Optional[Constraint] = None

    @property
    def passed(self) -> bool:
        return self.violated is None

    def __bool__(self) -> bool:
        return self.passed


PASS = ConstraintCheck()


def check_constraints(
    original_outcome: ExecutionOutcome,
    original_size: int,
    candidate_outcome: ExecutionOutcome,
    candidate_size: int,
    config: ReductionConfig,
) -> ConstraintCheck:
    """Check a candidate against the original; the first violation is reported.

    Violations are checked in the order exit status, coverage, reduction.
    """
    if original_outcome.status.is_timeout:
        raise ValueError("original outcome is a timeout; constraints have no anchor")
    if candidate_outcome.status != original_outcome.status:
        return ConstraintCheck(Constraint.EXIT_STATUS)
    similarity = similarity_fraction(original_outcome.coverage, candidate_outcome.coverage)
    if similarity * 100 < config.c_percent:
        return ConstraintCheck(Constraint.COVERAGE)
    if reduction_fraction(original_size, candidate_size) < config.r_percent:
        return ConstraintCheck(Constraint.REDUCTION)
    return PASS


class ReductionStatus(str, enum.Enum):
    REDUCED = "reduced"
    REJECTED = "rejected"
    ORIGINAL_RETAINED = "original-retained"


REJECT_BUDGET = "time budget exceeded"
REJECT_RATIO = "no candidate meets R%"


@dataclass
class ReductionReport:
    target_name: str
    seed_type: SeedType
    original_size: int
    reduced_size: int
    size_reduction: float  # percent
    coverage_similarity: float  # ratio in [0, 1]
    elapsed: float  # seconds
    status: ReductionStatus
    executions: int
    reduced_bytes: bytes
    reason: Optional[str] = None
    budget_expired: bool = False
    accepted_sizes: List[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "target": self.target_name,
            "seed_type": self.seed_type.value,
            "original_size": self.original_size,
            "reduced_size": self.reduced_size,
            "size_reduction": round(self.size_reduction, 6),
            "coverage_similarity": round(self.coverage_similarity, 6),
            "elapsed_s": round(self.elapsed, 6),
            "status": self.status.value,
            "reason": self.reason,
            "budget_expired": self.budget_expired,
            "executions": self.executions,
            "accepted_sizes": list(self.accepted_sizes),
        }


class _BudgetExpired(Exception):
    pass


class _Evaluator:
    """Runs candidates through the target, memoized by content hash."""

    def __init__(self, target, budget, clock, workers=1):
        self.target = target
        self.budget = budget
        self.clock = clock
        self.workers = workers
        self.cache = {}
        self.executions = 0

    @staticmethod
    def key(data: bytes) -> bytes:
        return hashlib.sha256(data).digest()

    def _expired(self) -> bool:
        return self.clock.elapsed() >= self.budget

    def _record(self, key, outcome):
        self.executions += 1
        self.clock.charge(outcome)
        self.cache[key] = outcome

    def __call__(self, data: bytes) -> ExecutionOutcome:
        key = self.key(data)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if self._expired():
            raise _BudgetExpired
        outcome = execute(self.target, data)
        self._record(key, outcome)
        return outcome

    def prefetch(self, candidates: List[bytes]) -> None:
        """Speculatively run a whole pass in parallel; acceptance stays sequential."""
        if self.workers <= 1:
            return
        pending = {}
        for data in candidates:
            key = self.key(data)
            if key not in self.cache and key not in pending:
                pending[key] = data
        if not pending or self._expired():
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [(key, pool.submit(execute, self.target, data)) for key, data in pending.items()]
            for key, future in futures:
                self._record(key, future.result())


def reduce(
    target: TargetSpec,
    seed,
    config: ReductionConfig,
    *,
    target_name: Optional[str] = None,
    clock=None,
    workers: int = 1,
    on_accept: Optional[Callable[[Seed, ExecutionOutcome], None]] = None,
) -> ReductionReport:
    """Reduce ``seed`` on ``target`` to a 1-minimal seed meeting ``config``.

    ``seed`` may be raw bytes or a :class:`Seed`; its chunking is taken from
    ``config``. On simulated targets the budget runs on a virtual clock.
    """
    data = seed.data if isinstance(seed, Seed) else bytes(seed)
    if not data:
        raise ValueError("cannot reduce an empty seed")
    original = config.make_seed(data)
    clock = clock if clock is not None else clock_for(target)
    evaluate = _Evaluator(target, config.time_budget, clock, workers)
    name = target_name or getattr(target, "label", str(target))

    try:
        original_outcome = evaluate(original.data)
    except _BudgetExpired:  # pragma: no cover - budget is positive
        raise ReductionError("time budget exhausted before the original run") from None
    if original_outcome.status.is_timeout:
        raise ReductionError("original seed times out")
    size = len(original)

    def passes(candidate: Seed) -> bool:
        outcome = evaluate(candidate.data)
        return check_constraints(original_outcome, size, outcome, len(candidate), config).passed

    current = original
    accepted_sizes: List[int] = []
    budget_expired = False

    def accept(candidate: Seed):
        accepted_sizes.append(len(candidate))
        log.debug("accepted %d bytes (%d units)", len(candidate), candidate.unit_count)
        if on_accept is not None:
            on_accept(candidate, evaluate(candidate.data))

    n = 2
    try:
        while current.unit_count > 0:
            units = current.unit_count
            n = min(n, units)

            if n > 1:
                subsets = partition(current, n)
                evaluate.prefetch([c.data for c in subsets])
                winner = next((c for c in subsets if passes(c)), None)
                if winner is not None:
                    current = winner
                    accept(current)
                    n = 2
                    continue

            complements = [remove_chunk(current, i, n) for i in range(n)]
            evaluate.prefetch([c.data for c in complements])
            winner = next((c for c in complements if passes(c)), None)
            if winner is not None:
                current = winner
                accept(current)
                n = max(n - 1, 2)
                continue

            if n < units:
                n = min(2 * n, units)
                continue
            break
    except _BudgetExpired:
        budget_expired = True
        log.info("reduction budget of %ss expired", config.time_budget)

    reason = None
    if accepted_sizes:
        status = ReductionStatus.REDUCED
    elif budget_expired:
        status, reason = ReductionStatus.REJECTED, REJECT_BUDGET
    elif config.r_percent > 0:
        status, reason = ReductionStatus.REJECTED, REJECT_RATIO
    else:
        status = ReductionStatus.ORIGINAL_RETAINED

    final_outcome = evaluate.cache[evaluate.key(current.data)]
    if original_outcome.coverage.statements == frozenset():
        log.warning("original run covered no statements; similarity is vacuously 1.0")
    return ReductionReport(
        target_name=name,
        seed_type=config.seed_type,
        original_size=size,
        reduced_size=len(current),
        size_reduction=percent_reduction(size, len(current)),
        coverage_similarity=float(
            similarity_fraction(original_outcome.coverage, final_outcome.coverage)
        ),
        elapsed=clock.elapsed(),
        status=status,
        executions=evaluate.executions,
        reduced_bytes=current.data,
        reason=reason,
        budget_expired=budget_expired,
        accepted_sizes=accepted_sizes,
    )
