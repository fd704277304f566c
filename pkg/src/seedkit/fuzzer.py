"""A small coverage-guided mutational fuzzer.

This is a deliberately simplified stand-in for AFL, good enough to compare
campaigns started from an original seed and from its reduced version:

* a *path* is an input whose coverage contains a statement or branch never
  seen before (no hit-count buckets, no edge bitmap), so absolute path counts
  are not comparable with AFL's;
* the queue is scheduled round-robin, with no energy assignment or favoring;
* mutations are a stacked havoc stage only: no deterministic stages,
  trimming or splicing.

On simulated targets, time is virtual (see :mod:`seedkit.clock`), so a fixed
``rng_seed`` reproduces a campaign exactly.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional

from .clock import clock_for
from .model import ExecutionOutcome, Seed, SeedkitError
from .oracle import TargetSpec, execute

INTERESTING_8 = (-128, -1, 0, 1, 16, 32, 64, 100, 127)
INTERESTING_16 = INTERESTING_8 + (-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767)
INTERESTING_32 = INTERESTING_16 + (
    -2147483648, -100663046, -32769, 32768, 65535, 65536, 100663045, 2147483647,
)
ARITH_MAX = 35
MAX_INPUT_SIZE = 1 << 20

FLIP_BIT = "flip-bit"
SET_BYTE = "set-byte"
ARITH = "arith"
INTERESTING_2 = "interesting-16"
INTERESTING_4 = "interesting-32"
DELETE_BLOCK = "delete-block"
CLONE_BLOCK = "clone-block"
INSERT_BYTES = "insert-bytes"

OPERATORS = (FLIP_BIT, SET_BYTE, ARITH, INTERESTING_2, INTERESTING_4, DELETE_BLOCK, CLONE_BLOCK)


class CampaignError(SeedkitError):
    pass


def flip_bit(data: bytearray, bit: int) -> None:
    """Flip bit ``bit`` counting from the least significant bit of byte 0."""
    data[bit >> 3] ^= 1 << (bit & 7)


def _block_len(rng: random.Random, limit: int) -> int:
    roll = rng.random()
    if roll < 0.5:
        lo, hi = 1, 32
    elif roll < 0.75:
        lo, hi = 33, 128
    else:
        lo, hi = 129, 1500
    hi = min(hi, limit)
    lo = min(lo, hi)
    return rng.randint(lo, hi)


def _applicable(size: int, room: int) -> List[str]:
    if size == 0:
        return [INSERT_BYTES]
    ops = [FLIP_BIT, SET_BYTE, ARITH]
    if size >= 2:
        ops.append(INTERESTING_2)
    if size >= 4:
        ops.append(INTERESTING_4)
    if size >= 2:
        ops.append(DELETE_BLOCK)
    if room > 0:
        ops.append(CLONE_BLOCK)
    return ops


def _apply(op: str, buf: bytearray, rng: random.Random, max_size: int) -> None:
    size = len(buf)
    if op == FLIP_BIT:
        flip_bit(buf, rng.randrange(size * 8))
    elif op == SET_BYTE:
        pos = rng.randrange(size)
        # always changes the byte
        buf[pos] ^= rng.randint(1, 255)
    elif op == ARITH:
        pos = rng.randrange(size)
        delta = rng.randint(1, ARITH_MAX)
        buf[pos] = (buf[pos] + (delta if rng.random() < 0.5 else -delta)) & 0xFF
    elif op in (INTERESTING_2, INTERESTING_4):
        width = 2 if op == INTERESTING_2 else 4
        values = INTERESTING_16 if width == 2 else INTERESTING_32
        pos = rng.randrange(size - width + 1)
        order = "little" if rng.random() < 0.5 else "big"
        value = rng.choice(values) & ((1 << (8 * width)) - 1)
        buf[pos : pos + width] = value.to_bytes(width, order)
    elif op == DELETE_BLOCK:
        # never delete the last byte
        length = _block_len(rng, size - 1)
        pos = rng.randrange(size - length + 1)
        del buf[pos : pos + length]
    elif op == CLONE_BLOCK:
        length = _block_len(rng, min(size, max_size - size))
        src = rng.randrange(size - length + 1)
        dst = rng.randrange(size + 1)
        buf[dst:dst] = buf[src : src + length]
    elif op == INSERT_BYTES:
        length = _block_len(rng, max(1, min(32, max_size - size)))
        buf[0:0] = rng.randbytes(length)
    else:
        raise ValueError(f"unknown mutation operator {op!r}")


def mutate(
    data: bytes,
    rng: random.Random,
    max_stack: int = 4,
    max_input_size: int = MAX_INPUT_SIZE,
    trace: Optional[list] = None,
) -> bytes:
    """Apply a stack of 1..``max_stack`` random havoc operators.

    An empty input can only grow by insertion. Block deletion never removes
    the last byte, and the result never exceeds ``max_input_size``.
    If ``trace`` is given, the chosen operator names are appended to it.
    """
    if max_stack < 1:
        raise ValueError("max_stack must be >= 1")
    buf = bytearray(data[:max_input_size])
    for _ in range(rng.randint(1, max_stack)):
        ops = _applicable(len(buf), max_input_size - len(buf))
        op = rng.choice(ops)
        _apply(op, buf, rng, max_input_size)
        if trace is not None:
            trace.append(op)
    return bytes(buf)


def crash_signature(outcome: ExecutionOutcome) -> str:
    """Stable identity of a crash: its kind plus the sorted statements covered."""
    if not outcome.status.is_crash:
        raise ValueError(f"not a crash outcome: {outcome.status}")
    h = hashlib.sha256(outcome.status.crash_kind.encode("utf-8"))
    for stmt in sorted(outcome.coverage.statements):
        h.update(b"\n" + stmt.encode("utf-8"))
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class CampaignConfig:
    duration: float = 60.0  # seconds; virtual time on simulated targets
    rng_seed: int = 0
    max_input_size: int = MAX_INPUT_SIZE
    mutation_stack_max: int = 4
    max_executions: Optional[int] = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.max_input_size < 1 or self.mutation_stack_max < 1:
            raise ValueError("max_input_size and mutation_stack_max must be >= 1")
        if self.max_executions is not None and self.max_executions < 0:
            raise ValueError("max_executions must be >= 0")


@dataclass(frozen=True)
class PathEvent:
    elapsed: float
    total_paths: int
    execution: int


@dataclass(frozen=True)
class CrashEvent:
    elapsed: float
    signature: str
    execution: int


@dataclass
class CampaignStats:
    path_events: List[PathEvent] = field(default_factory=list)
    crashes: List[CrashEvent] = field(default_factory=list)
    statements: set = field(default_factory=set)
    branches: set = field(default_factory=set)
    executions: int = 0
    elapsed: float = 0.0
    queue: List[bytes] = field(default_factory=list)

    @property
    def total_paths(self) -> int:
        return self.path_events[-1].total_paths if self.path_events else 0

    @property
    def unique_crashes(self) -> int:
        return len(self.crashes)

    @property
    def cumulative_statements(self) -> int:
        return len(self.statements)

    @property
    def cumulative_branches(self) -> int:
        return len(self.branches)


class _Tracker:
    """Novelty bookkeeping shared by live campaigns and replays."""

    def __init__(self, stats: CampaignStats):
        self.stats = stats
        self._seen_crashes = set()

    def observe(self, data: bytes, outcome: ExecutionOutcome, elapsed: float) -> None:
        stats = self.stats
        cov = outcome.coverage
        if not (cov.statements <= stats.statements and cov.branches <= stats.branches):
            stats.statements |= cov.statements
            stats.branches |= cov.branches
            stats.queue.append(data)
            stats.path_events.append(PathEvent(elapsed, len(stats.queue), stats.executions))
        if outcome.status.is_crash:
            sig = crash_signature(outcome)
            if sig not in self._seen_crashes:
                self._seen_crashes.add(sig)
                stats.crashes.append(CrashEvent(elapsed, sig, stats.executions))


def _start(target, data, clock):
    outcome = execute(target, data)
    if outcome.status.is_timeout:
        raise CampaignError("initial seed times out")
    stats = CampaignStats()
    tracker = _Tracker(stats)
    stats.statements |= outcome.coverage.statements
    stats.branches |= outcome.coverage.branches
    stats.queue.append(data)
    stats.path_events.append(PathEvent(0.0, 1, 0))
    if outcome.status.is_crash:
        tracker.observe(data, outcome, 0.0)
    clock.charge(outcome)
    return stats, tracker


def run_campaign(
    target: TargetSpec,
    initial_seed,
    config: CampaignConfig,
    *,
    on_input: Optional[Callable[[bytes], None]] = None,
    clock=None,
) -> CampaignStats:
    """Fuzz ``target`` from ``initial_seed`` until the budget is spent.

    ``on_input`` receives every generated input before it is executed.
    """
    data = initial_seed.data if isinstance(initial_seed, Seed) else bytes(initial_seed)
    clock = clock if clock is not None else clock_for(target)
    rng = random.Random(config.rng_seed)
    stats, tracker = _start(target, data, clock)
    queue = stats.queue

    cursor = 0
    while clock.elapsed() < config.duration:
        if config.max_executions is not None and stats.executions >= config.max_executions:
            break
        parent = queue[cursor % len(queue)]
        cursor += 1
        child = mutate(parent, rng, config.mutation_stack_max, config.max_input_size)
        if on_input is not None:
            on_input(child)
        outcome = execute(target, child)
        stats.executions += 1
        clock.charge(outcome)
        tracker.observe(child, outcome, clock.elapsed())

    stats.elapsed = clock.elapsed()
    return stats


def replay_campaign(target: TargetSpec, initial_seed, inputs: Iterable[bytes], clock=None) -> CampaignStats:
    """Re-execute a recorded input sequence and recompute path and crash events."""
    data = initial_seed.data if isinstance(initial_seed, Seed) else bytes(initial_seed)
    clock = clock if clock is not None else clock_for(target)
    stats, tracker = _start(target, data, clock)
    for child in inputs:
        outcome = execute(target, child)
        stats.executions += 1
        clock.charge(outcome)
        tracker.observe(bytes(child), outcome, clock.elapsed())
    stats.elapsed = clock.elapsed()
    return stats
