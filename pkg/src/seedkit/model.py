"""Value types shared by the reducer, the fuzzer and the oracles.

Everything here is pure: no process execution, no I/O.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Union

Number = Union[int, float, str, Fraction]


class SeedkitError(Exception):
    """Base class for errors raised by this package."""


class Unit(str, enum.Enum):
    BYTE = "byte"
    CHAR = "char"


class SeedType(str, enum.Enum):
    TEXT = "text"
    BINARY = "binary"

    @property
    def default_unit(self) -> Unit:
        return Unit.CHAR if self is SeedType.TEXT else Unit.BYTE

    @property
    def default_unit_size(self) -> int:
        # 1 character for text seeds, 1 KiB for binary seeds
        return 1 if self is SeedType.TEXT else 1024


@dataclass(frozen=True)
class Seed:
    """An immutable byte string chopped into atomic units of ``unit_size`` bytes.

    ``Unit.CHAR`` assumes a single-byte encoding, so a character unit is a
    byte; multi-byte text is treated as raw bytes.
    """

    data: bytes
    unit: Unit = Unit.BYTE
    unit_size: int = 1

    def __post_init__(self):
        if not isinstance(self.data, bytes):
            object.__setattr__(self, "data", bytes(self.data))
        if self.unit_size < 1:
            raise ValueError(f"unit_size must be >= 1, got {self.unit_size}")

    def __len__(self) -> int:
        return len(self.data)

    @property
    def unit_count(self) -> int:
        return -(-len(self.data) // self.unit_size)

    def with_data(self, data: bytes) -> "Seed":
        return Seed(bytes(data), self.unit, self.unit_size)


@dataclass(frozen=True)
class CoverageSet:
    statements: frozenset = frozenset()
    branches: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "statements", frozenset(self.statements))
        object.__setattr__(self, "branches", frozenset(self.branches))

    @property
    def elements(self) -> frozenset:
        """Statements and branches tagged by kind, for novelty checks."""
        return frozenset(("stmt", s) for s in self.statements) | frozenset(
            ("branch", b) for b in self.branches
        )

    def __or__(self, other: "CoverageSet") -> "CoverageSet":
        return CoverageSet(self.statements | other.statements, self.branches | other.branches)

    def __bool__(self) -> bool:
        return bool(self.statements or self.branches)


EMPTY_COVERAGE = CoverageSet()


class StatusKind(str, enum.Enum):
    OK = "ok"
    ERROR = "error"
    CRASH = "crash"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class ExitStatus:
    """Terminal status of one run. Equality covers both kind and payload.

    Use the constructors rather than the raw initializer; ``error(0)`` is
    rejected because exit code 0 is always ``ok()``.
    """

    kind: StatusKind
    code: Optional[int] = None
    crash_kind: Optional[str] = None

    def __post_init__(self):
        if self.kind is StatusKind.ERROR:
            if self.code is None or self.code == 0:
                raise ValueError("Error status needs a nonzero exit code; exit 0 is Ok")
            if self.crash_kind is not None:
                raise ValueError("Error status carries no crash kind")
        elif self.kind is StatusKind.CRASH:
            if not self.crash_kind or self.code is not None:
                raise ValueError("Crash status carries exactly a crash kind")
        elif self.code is not None or self.crash_kind is not None:
            raise ValueError(f"{self.kind.value} status carries no payload")

    @classmethod
    def ok(cls) -> "ExitStatus":
        return cls(StatusKind.OK)

    @classmethod
    def error(cls, code: int) -> "ExitStatus":
        return cls(StatusKind.ERROR, code=code)

    @classmethod
    def crash(cls, kind: str) -> "ExitStatus":
        return cls(StatusKind.CRASH, crash_kind=kind)

    @classmethod
    def timeout(cls) -> "ExitStatus":
        return cls(StatusKind.TIMEOUT)

    @classmethod
    def from_returncode(cls, returncode: int) -> "ExitStatus":
        if returncode == 0:
            return cls.ok()
        return cls.error(returncode)

    @property
    def is_crash(self) -> bool:
        return self.kind is StatusKind.CRASH

    @property
    def is_timeout(self) -> bool:
        return self.kind is StatusKind.TIMEOUT

    def __str__(self) -> str:
        if self.kind is StatusKind.ERROR:
            return f"error({self.code})"
        if self.kind is StatusKind.CRASH:
            return f"crash({self.crash_kind})"
        return self.kind.value


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExitStatus
    coverage: CoverageSet = EMPTY_COVERAGE
    wall_time: float = 0.0  # seconds

    def __post_init__(self):
        if self.status.is_timeout and self.coverage:
            # a hung run's coverage is discarded
            object.__setattr__(self, "coverage", EMPTY_COVERAGE)


def _as_fraction(value: Number) -> Fraction:
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class ReductionConfig:
    """Thresholds and budget for one reduction.

    ``c_percent``: minimum share of the original's statements the reduced
    seed must still cover. ``r_percent``: minimum size reduction.
    Both are kept as exact fractions.
    """

    c_percent: Fraction = Fraction(75)
    r_percent: Fraction = Fraction(40)
    time_budget: float = 300.0
    unit: Unit = Unit.BYTE
    unit_size: int = 1

    def __post_init__(self):
        for name in ("c_percent", "r_percent"):
            value = _as_fraction(getattr(self, name))
            if not 0 <= value <= 100:
                raise ValueError(f"{name} must be within [0, 100], got {value}")
            object.__setattr__(self, name, value)
        if not self.time_budget > 0:
            raise ValueError(f"time_budget must be positive, got {self.time_budget}")
        if self.unit_size < 1:
            raise ValueError(f"unit_size must be >= 1, got {self.unit_size}")
        object.__setattr__(self, "unit", Unit(self.unit))

    @property
    def seed_type(self) -> SeedType:
        return SeedType.TEXT if self.unit is Unit.CHAR else SeedType.BINARY

    def make_seed(self, data: bytes) -> Seed:
        return Seed(bytes(data), self.unit, self.unit_size)


def similarity_fraction(original: CoverageSet, reduced: CoverageSet) -> Fraction:
    """Exact statement-coverage similarity; 1 when the original covers nothing."""
    if not original.statements:
        return Fraction(1)
    kept = len(original.statements & reduced.statements)
    return Fraction(kept, len(original.statements))


def cov_similarity(original: CoverageSet, reduced: CoverageSet) -> float:
    """Share of the original's statements that the reduced run still covers.

    Branches do not take part. An original with no statements yields 1.0.
    """
    return float(similarity_fraction(original, reduced))


def reduction_fraction(original_size: int, reduced_size: int) -> Fraction:
    """Exact size reduction in percent."""
    if original_size <= 0:
        raise ValueError("empty original seed")
    if reduced_size < 0 or reduced_size > original_size:
        raise ValueError(
            f"reduced size {reduced_size} outside [0, original size {original_size}]"
        )
    return Fraction(100 * (original_size - reduced_size), original_size)


def percent_reduction(original_size: int, reduced_size: int) -> float:
    return float(reduction_fraction(original_size, reduced_size))


def format_percent(value) -> str:
    return f"{float(value):.2f}%"


def chunk_unit_lengths(total_units: int, n: int) -> List[int]:
    """Unit counts of ``n`` contiguous chunks; the first ``total % n`` take the ceiling."""
    base, extra = divmod(total_units, n)
    return [base + 1 if i < extra else base for i in range(n)]


def _chunk_bounds(seed: Seed, n: int) -> List[tuple]:
    units = seed.unit_count
    if units == 0:
        raise ValueError("cannot partition an empty seed")
    if n < 1:
        raise ValueError(f"granularity must be positive, got {n}")
    if n > units:
        raise ValueError(f"granularity exceeds seed size ({n} > {units} units)")
    bounds = []
    start_unit = 0
    for length in chunk_unit_lengths(units, n):
        end_unit = start_unit + length
        bounds.append(
            (start_unit * seed.unit_size, min(end_unit * seed.unit_size, len(seed.data)))
        )
        start_unit = end_unit
    return bounds


def partition(seed: Seed, n: int) -> List[Seed]:
    """Split ``seed`` into ``n`` contiguous chunks that concatenate back to it."""
    return [seed.with_data(seed.data[lo:hi]) for lo, hi in _chunk_bounds(seed, n)]


def remove_chunk(seed: Seed, chunk_index: int, n: int) -> Seed:
    bounds = _chunk_bounds(seed, n)
    if not 0 <= chunk_index < n:
        raise IndexError(f"chunk index {chunk_index} out of range for {n} chunks")
    lo, hi = bounds[chunk_index]
    return seed.with_data(seed.data[:lo] + seed.data[hi:])


def split_units(seed: Seed) -> List[bytes]:
    return [seed.data[i : i + seed.unit_size] for i in range(0, len(seed.data), seed.unit_size)]


def join_units(units: Iterable[bytes]) -> bytes:
    return b"".join(units)
