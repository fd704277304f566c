import os
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from seedkit.model import CoverageSet, ExitStatus
from seedkit.oracle import (
    CommandNotFoundError,
    CoverageReportError,
    CoverageReportMissingError,
    ExternalTarget,
    SimulatedTarget,
    execute,
    parse_coverage_report,
    parse_target,
    serialize_coverage,
)

TOY = os.path.join(os.path.dirname(__file__), "fixtures", "toy_target.py")


def toy(timeout=5.0, **kw):
    return ExternalTarget(f"{sys.executable} {TOY} @@", per_run_timeout=timeout, **kw)


def test_parse_idempotent_duplicates():
    assert parse_coverage_report("stmt a.c:10\nstmt a.c:10") == CoverageSet({"a.c:10"})


def test_parse_statement_and_branch():
    got = parse_coverage_report("stmt a.c:10\nbranch a.c:10:1")
    assert got == CoverageSet({"a.c:10"}, {"a.c:10:1"})


def test_parse_skips_blank_and_comments():
    assert parse_coverage_report("\n# hi\n  \nstmt x:1\n") == CoverageSet({"x:1"})


def test_parse_unknown_kind_names_line():
    with pytest.raises(CoverageReportError) as info:
        parse_coverage_report("foo a.c:10")
    assert info.value.lineno == 1
    assert "line 1" in str(info.value)


def test_parse_bad_branch_id():
    with pytest.raises(CoverageReportError) as info:
        parse_coverage_report("stmt a:1\nbranch a.c:x")
    assert info.value.lineno == 2


ids = st.from_regex(r"[a-z]{1,5}\.c:[0-9]{1,3}", fullmatch=True)


@given(st.frozensets(ids), st.frozensets(ids.map(lambda s: s + ":0")))
def test_serialize_round_trip(stmts, branches):
    cov = CoverageSet(stmts, branches)
    assert parse_coverage_report(serialize_coverage(cov)) == cov


def test_target_template_needs_one_placeholder():
    with pytest.raises(ValueError):
        ExternalTarget("prog")
    with pytest.raises(ValueError):
        ExternalTarget("prog @@ @@")
    with pytest.raises(ValueError):
        ExternalTarget("prog @@", per_run_timeout=0)


def test_parse_target():
    assert parse_target("sim:xml-like") == SimulatedTarget("xml-like")
    assert isinstance(parse_target("readelf -a @@"), ExternalTarget)
    with pytest.raises(ValueError, match="unknown simulated target"):
        parse_target("sim:nope")


def test_external_ok_with_coverage():
    out = execute(toy(), b"abca")
    assert out.status == ExitStatus.ok()
    assert out.coverage == CoverageSet({"toy.c:97", "toy.c:98", "toy.c:99"}, {"toy.c:1:0"})
    assert out.wall_time > 0


def test_external_error_code():
    out = execute(toy(), b"E")
    assert out.status == ExitStatus.error(3)
    assert out.coverage.statements == {"toy.c:69"}


def test_external_signal_is_crash():
    out = execute(toy(), b"K")
    assert out.status == ExitStatus.crash("SIGSEGV")


def test_external_timeout_has_no_coverage():
    out = execute(toy(timeout=0.5), b"H")
    assert out.status == ExitStatus.timeout()
    assert out.coverage == CoverageSet()


def test_external_missing_report():
    with pytest.raises(CoverageReportMissingError):
        execute(toy(), b"N")


def test_external_command_not_found():
    with pytest.raises(CommandNotFoundError):
        execute(ExternalTarget("/nonexistent/prog @@"), b"x")


def test_external_report_template_outside_tmpdir(tmp_path):
    target = toy(coverage_report_path=str(tmp_path / "cov-{run_id}.txt"))
    assert execute(target, b"ab").coverage.statements == {"toy.c:97", "toy.c:98"}
    assert list(tmp_path.iterdir()) == []


def test_external_env_passthrough(monkeypatch):
    monkeypatch.setenv("SEEDKIT_TEST_MARK", "1")
    out = execute(toy(env_passthrough=["PATH"]), b"z")
    assert out.status == ExitStatus.ok()


def test_simulated_is_pure():
    target = SimulatedTarget("xml-like")
    assert execute(target, b"<a>x</a>") == execute(target, b"<a>x</a>")
