"""Run a target on a seed and collect an :class:`ExecutionOutcome`.

Two backends: an external command following the AFL ``@@`` convention whose
coverage is read back from a plain-text report, and the simulated targets in
:mod:`seedkit.simulated`.

Coverage report format, one record per line (UTF-8, LF)::

    stmt <file>:<line>
    branch <file>:<line>:<index>

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import os
import re
import shlex
import signal
import subprocess
import tempfile
import time
import uuid
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from .model import CoverageSet, ExecutionOutcome, ExitStatus, Seed, SeedkitError
from .simulated import SimulatedName, run_simulated

PLACEHOLDER = "@@"
REPORT_ENV = "SEEDKIT_COVERAGE_REPORT"
INPUT_ENV = "SEEDKIT_INPUT"


class OracleError(SeedkitError):
    """The target could not be run or its coverage could not be read."""


class CommandNotFoundError(OracleError):
    pass


class CoverageReportMissingError(OracleError):
    pass


class CoverageReportError(OracleError, ValueError):
    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class SimulatedTarget:
    name: SimulatedName

    def __post_init__(self):
        object.__setattr__(self, "name", SimulatedName(self.name))

    @property
    def label(self) -> str:
        return f"sim:{self.name.value}"


@dataclass(frozen=True)
class ExternalTarget:
    """An instrumented program run as a subprocess.

    ``coverage_report_path`` is a template; ``{tmpdir}`` expands to the
    per-run scratch directory and ``{run_id}`` to a unique run token. The
    resolved path is also exported to the child as ``SEEDKIT_COVERAGE_REPORT``.
    ``env_passthrough`` lists the parent variables the child inherits;
    ``None`` inherits everything.
    """

    command_template: str
    coverage_report_path: str = "{tmpdir}/coverage.txt"
    workdir: Optional[str] = None
    per_run_timeout: float = 10.0
    env_passthrough: Optional[Tuple[str, ...]] = None
    name: Optional[str] = None

    def __post_init__(self):
        count = self.command_template.count(PLACEHOLDER)
        if count != 1:
            raise ValueError(
                f"command template must contain exactly one {PLACEHOLDER!r}, found {count}"
            )
        if not self.per_run_timeout > 0:
            raise ValueError("per_run_timeout must be positive")
        if self.env_passthrough is not None:
            object.__setattr__(self, "env_passthrough", tuple(self.env_passthrough))

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return os.path.basename(shlex.split(self.command_template)[0])


TargetSpec = Union[SimulatedTarget, ExternalTarget]


def parse_target(text: str, **external) -> TargetSpec:
    """``sim:<name>`` selects a simulated target; anything else is a command template."""
    if text.startswith("sim:"):
        try:
            return SimulatedTarget(SimulatedName(text[4:]))
        except ValueError:
            names = ", ".join(f"sim:{n.value}" for n in SimulatedName)
            raise ValueError(f"unknown simulated target {text!r} (choose from {names})") from None
    return ExternalTarget(text, **external)


_BRANCH_ID = re.compile(r"^\S+:\d+$")


def parse_coverage_report(text: str) -> CoverageSet:
    statements, branches = set(), set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CoverageReportError(lineno, raw, "expected '<kind> <id>'")
        kind, ident = parts
        if kind == "stmt":
            statements.add(ident)
        elif kind == "branch":
            if not _BRANCH_ID.match(ident):
                raise CoverageReportError(lineno, raw, "branch id must end in ':<index>'")
            branches.add(ident)
        else:
            raise CoverageReportError(lineno, raw, f"unknown record kind {kind!r}")
    return CoverageSet(statements, branches)


def serialize_coverage(coverage: CoverageSet) -> str:
    lines = [f"stmt {s}" for s in sorted(coverage.statements)]
    lines += [f"branch {b}" for b in sorted(coverage.branches)]
    return "".join(line + "\n" for line in lines)


def _child_env(target: ExternalTarget, report_path: str, input_path: str) -> dict:
    if target.env_passthrough is None:
        env = dict(os.environ)
    else:
        env = {k: os.environ[k] for k in target.env_passthrough if k in os.environ}
    env[REPORT_ENV] = report_path
    env[INPUT_ENV] = input_path
    return env


def _crash_kind(returncode: int) -> str:
    try:
        return signal.Signals(-returncode).name
    except ValueError:
        return f"signal-{-returncode}"


def _run_external(target: ExternalTarget, data: bytes) -> ExecutionOutcome:
    with tempfile.TemporaryDirectory(prefix="seedkit-run-") as tmpdir:
        input_path = os.path.join(tmpdir, "input")
        with open(input_path, "wb") as fh:
            fh.write(data)
        report_path = target.coverage_report_path.format(tmpdir=tmpdir, run_id=uuid.uuid4().hex)
        argv = [tok.replace(PLACEHOLDER, input_path) for tok in shlex.split(target.command_template)]

        start = time.perf_counter()
        try:
            proc = subprocess.Popen(
                argv,
                cwd=target.workdir,
                env=_child_env(target, report_path, input_path),
                stdin=subprocess.DEVNULL,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                start_new_session=True,
            )
        except (FileNotFoundError, PermissionError) as exc:
            raise CommandNotFoundError(f"cannot execute {argv[0]!r}: {exc}") from exc
        try:
            returncode = proc.wait(timeout=target.per_run_timeout)
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            proc.wait()
            _discard(report_path, tmpdir)
            return ExecutionOutcome(ExitStatus.timeout(), wall_time=time.perf_counter() - start)
        elapsed = time.perf_counter() - start

        if returncode < 0:
            status = ExitStatus.crash(_crash_kind(returncode))
        else:
            status = ExitStatus.from_returncode(returncode)

        try:
            with open(report_path, encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            if status.is_crash:
                # crashing runs often die before flushing coverage
                return ExecutionOutcome(status, wall_time=elapsed)
            raise CoverageReportMissingError(f"coverage report not found: {report_path}") from None
        finally:
            _discard(report_path, tmpdir)
        return ExecutionOutcome(status, parse_coverage_report(text), elapsed)


def _discard(report_path: str, tmpdir: str) -> None:
    if os.path.commonpath([os.path.abspath(report_path), tmpdir]) != tmpdir:
        try:
            os.remove(report_path)
        except FileNotFoundError:
            pass


def execute(target: TargetSpec, seed: Union[Seed, bytes]) -> ExecutionOutcome:
    data = seed.data if isinstance(seed, Seed) else bytes(seed)
    if isinstance(target, SimulatedTarget):
        return run_simulated(target.name, data)
    if isinstance(target, ExternalTarget):
        return _run_external(target, data)
    raise TypeError(f"not a target spec: {target!r}")


def is_simulated(target: TargetSpec) -> bool:
    return isinstance(target, SimulatedTarget)
