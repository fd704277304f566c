"""Deterministic built-in targets.

Each target is a pure function of the input bytes. Alongside the outcome it
reports a modeled execution cost so that campaigns and reductions on these
targets can run against a virtual clock and stay reproducible.
"""

from __future__ import annotations

import enum
import random
import struct

from .model import CoverageSet, ExecutionOutcome, ExitStatus

MAGIC = b"\xde\xad\xbe\xef"
HEADER_SIZE = 64
HEADER_FIELDS = 15
CRASH_FLAG_FIELD = 3
DECLARED_SIZE_FIELD = 7
MAX_XML_DEPTH = 8

# Modeled cost of one run: fixed process overhead plus a per-byte parse cost.
BASE_COST_NS = 200_000
PER_BYTE_COST_NS = 100


_FIELD_STMTS = tuple(f"H_{i}" for i in range(HEADER_FIELDS))
_FIELD_BRANCHES = tuple(f"H_{i}:1" for i in range(HEADER_FIELDS))


class SimulatedName(str, enum.Enum):
    HEADER_PAYLOAD = "header-payload"
    XML_LIKE = "xml-like"
    CONSTANT_COVERAGE = "constant-coverage"
    DISTINCT_BYTES = "distinct-bytes"


def modeled_cost_ns(size: int) -> int:
    return BASE_COST_NS + PER_BYTE_COST_NS * size


def _outcome(status, statements, branches=(), size=0) -> ExecutionOutcome:
    return ExecutionOutcome(
        status, CoverageSet(statements, branches), modeled_cost_ns(size) / 1e9
    )


def run_distinct_bytes(data: bytes) -> ExecutionOutcome:
    return _outcome(ExitStatus.ok(), {f"S_{v}" for v in set(data)}, size=len(data))


def run_constant_coverage(data: bytes) -> ExecutionOutcome:
    return _outcome(ExitStatus.ok(), {"S_0"}, size=len(data))


def run_header_payload(data: bytes) -> ExecutionOutcome:
    """A readelf-like binary parser.

    Layout: 4 magic bytes, then 15 little-endian u32 header fields (bytes
    4..64), then an opaque payload that a single loop walks over.
    """
    size = len(data)
    if data[:4] != MAGIC:
        return _outcome(ExitStatus.error(1), {"M_fail"}, size=size)

    statements = {"M_ok"}
    branches = set()
    complete = min(HEADER_FIELDS, (size - 4) // 4)
    fields = struct.unpack_from(f"<{complete}I", data, 4)
    for i, value in enumerate(fields):
        statements.add(_FIELD_STMTS[i])
        if value:
            branches.add(_FIELD_BRANCHES[i])

    if size < HEADER_SIZE:
        return _outcome(ExitStatus.error(2), statements, branches, size)
    if size > HEADER_SIZE:
        statements.add("P_loop")

    if fields[CRASH_FLAG_FIELD] == 0xFFFFFFFF and size < HEADER_SIZE + fields[DECLARED_SIZE_FIELD]:
        return _outcome(ExitStatus.crash("hdr-overflow"), statements, branches, size)
    return _outcome(ExitStatus.ok(), statements, branches, size)


_XML_SPACE = frozenset(b" \t\r\n")


def run_xml_like(data: bytes) -> ExecutionOutcome:
    """An xmllint-like tag scanner.

    Covers X_open once any tag opens, X_depth_1..X_depth_k as element nesting
    reaches depth k (capped at 8), X_attr for '=' inside a tag and X_text for
    non-blank character data. A stray '<' or '>' or an unterminated tag stops
    the scan with Error(1); coverage gathered up to that point is kept.
    """
    statements = set()
    depth = 0
    in_tag = False
    tag = bytearray()
    ok = True
    for b in data:
        if in_tag:
            if b == 0x3C:  # '<'
                ok = False
                break
            if b == 0x3E:  # '>'
                in_tag = False
                if tag[:1] == b"/":
                    depth = max(depth - 1, 0)
                elif tag[:1] in (b"?", b"!") or tag[-1:] == b"/":
                    pass
                else:
                    depth += 1
                    statements.add(f"X_depth_{min(depth, MAX_XML_DEPTH)}")
                continue
            if b == 0x3D:  # '='
                statements.add("X_attr")
            tag.append(b)
        elif b == 0x3C:
            in_tag = True
            tag.clear()
            statements.add("X_open")
        elif b == 0x3E:
            ok = False
            break
        elif b not in _XML_SPACE:
            statements.add("X_text")
    if in_tag:
        ok = False
    status = ExitStatus.ok() if ok else ExitStatus.error(1)
    return _outcome(status, statements, size=len(data))


RUNNERS = {
    SimulatedName.HEADER_PAYLOAD: run_header_payload,
    SimulatedName.XML_LIKE: run_xml_like,
    SimulatedName.CONSTANT_COVERAGE: run_constant_coverage,
    SimulatedName.DISTINCT_BYTES: run_distinct_bytes,
}


def run_simulated(name: SimulatedName, data: bytes) -> ExecutionOutcome:
    return RUNNERS[SimulatedName(name)](bytes(data))


# Header of the synthetic readelf-style seed. Only the declared-size field is
# set; every other field is zero, so each one hides a branch to discover.
DEFAULT_DECLARED_SIZE = 0x10000


def header_bytes(fields=None) -> bytes:
    if fields is None:
        fields = [0] * HEADER_FIELDS
        fields[DECLARED_SIZE_FIELD] = DEFAULT_DECLARED_SIZE
    if len(fields) != HEADER_FIELDS:
        raise ValueError(f"expected {HEADER_FIELDS} header fields, got {len(fields)}")
    return MAGIC + struct.pack(f"<{HEADER_FIELDS}I", *fields)


def header_payload_seed(payload_size: int = 131_072, rng_seed=None, fields=None) -> bytes:
    """A valid 64-byte header followed by ``payload_size`` payload bytes.

    The payload is zero padding unless ``rng_seed`` is given, in which case it
    is pseudo-random.
    """
    if rng_seed is None:
        payload = bytes(payload_size)
    else:
        payload = random.Random(rng_seed).randbytes(payload_size)
    return header_bytes(fields) + payload


SAMPLE_XML = (
    b'<?xml version="1.0"?>\n'
    b'<catalog id="c1">\n'
    b'  <book lang="en"><title>Delta</title><price>10</price></book>\n'
    b"  <note/>\n"
    b"</catalog>\n"
)
