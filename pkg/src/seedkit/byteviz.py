"""Byte-color visualization of generated test inputs.

Every generated input becomes one lowercase-hex line in a dump file. Each
line is later drawn as a grid of square boxes, one per byte, where byte
``xy`` gets the color ``#xy0000`` (a shade of red). Frames are written as
``file_000000001.png``, ``file_000000002.png``, ... in generation order.
"""

from __future__ import annotations

import binascii
import os
import threading
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from PIL import Image

from .model import SeedkitError

FRAME_PATTERN = "file_{:09d}.png"
WHITE = (255, 255, 255)


class DumpError(SeedkitError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


def byte_to_color(b: int) -> Tuple[int, int, int]:
    if not 0 <= b <= 255:
        raise ValueError(f"not a byte: {b}")
    return (b, 0, 0)


def hex_color(b: int) -> str:
    return "#%02x%02x%02x" % byte_to_color(b)


def encode_line(data: bytes) -> str:
    return bytes(data).hex()


def decode_line(line: str, lineno: int = 0) -> bytes:
    line = line.rstrip("\n")
    if len(line) % 2 or line != line.lower():
        raise DumpError(f"line {lineno}: malformed dump entry", lineno)
    try:
        return binascii.unhexlify(line)
    except (binascii.Error, ValueError):
        raise DumpError(f"line {lineno}: malformed dump entry", lineno) from None


class DumpWriter:
    """Append-only sink for a color dump.

    ``flush_every`` controls how many lines are buffered before a flush;
    ``max_entries`` caps the file (further inputs are counted but dropped).
    """

    def __init__(self, path, flush_every: int = 1, max_entries: Optional[int] = None):
        if flush_every < 1:
            raise ValueError("flush_every must be >= 1")
        self.path = os.fspath(path)
        self.flush_every = flush_every
        self.max_entries = max_entries
        self.written = 0
        self.dropped = 0
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="ascii", newline="\n")

    def append(self, data: bytes) -> None:
        with self._lock:
            if self.max_entries is not None and self.written >= self.max_entries:
                self.dropped += 1
                return
            try:
                self._fh.write(encode_line(data) + "\n")
                if (self.written + 1) % self.flush_every == 0:
                    self._fh.flush()
            except OSError as exc:
                raise DumpError(f"failed to write dump entry {self.written + 1}: {exc}",
                                self.written + 1) from exc
            self.written += 1

    __call__ = append

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def append_dump(sink, data: bytes) -> None:
    """Append one entry to an open text sink or :class:`DumpWriter`."""
    if isinstance(sink, DumpWriter):
        sink.append(data)
    else:
        sink.write(encode_line(data) + "\n")


def iter_dump(path) -> Iterator[bytes]:
    with open(path, encoding="ascii", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            yield decode_line(line, lineno)


def read_dump(path) -> List[bytes]:
    return list(iter_dump(path))


def parse_dump(text: str) -> List[bytes]:
    if not text:
        return []
    if not text.endswith("\n"):
        raise DumpError("dump must end with a newline")
    return [decode_line(line, i) for i, line in enumerate(text[:-1].split("\n"), start=1)]


@dataclass(frozen=True)
class ImageLayout:
    box_px: int = 8
    boxes_per_row: int = 32
    max_bytes: Optional[int] = None

    def __post_init__(self):
        if self.box_px < 1 or self.boxes_per_row < 1:
            raise ValueError("box_px and boxes_per_row must be >= 1")
        if self.max_bytes is not None and self.max_bytes < 0:
            raise ValueError("max_bytes must be >= 0")

    def frame_size(self, n_bytes: int) -> Tuple[int, int]:
        """(width, height) in pixels for an input of ``n_bytes``."""
        shown = self.rendered_bytes(n_bytes)
        if shown == 0:
            return (1, 1)
        rows = -(-shown // self.boxes_per_row)
        return (self.boxes_per_row * self.box_px, rows * self.box_px)

    def rendered_bytes(self, n_bytes: int) -> int:
        return n_bytes if self.max_bytes is None else min(n_bytes, self.max_bytes)


def render_frame(data: bytes, layout: ImageLayout = ImageLayout()) -> np.ndarray:
    """Return an ``(height, width, 3)`` uint8 RGB raster; trailing boxes are white.

    An empty input renders as a single white pixel.
    """
    shown = layout.rendered_bytes(len(data))
    if shown == 0:
        return np.full((1, 1, 3), 255, dtype=np.uint8)
    per_row = layout.boxes_per_row
    rows = -(-shown // per_row)
    grid = np.full((rows * per_row, 3), 255, dtype=np.uint8)
    grid[:shown, 0] = np.frombuffer(bytes(data[:shown]), dtype=np.uint8)
    grid[:shown, 1:] = 0
    grid = grid.reshape(rows, per_row, 3)
    return np.repeat(np.repeat(grid, layout.box_px, axis=0), layout.box_px, axis=1)


def save_png(raster: np.ndarray, path) -> None:
    Image.fromarray(np.ascontiguousarray(raster, dtype=np.uint8)).save(path, format="PNG")


def frame_name(index: int) -> str:
    return FRAME_PATTERN.format(index)


def render_dump(dump_path, out_dir, layout: ImageLayout = ImageLayout()) -> List[str]:
    """Write one PNG per dump line into ``out_dir``; returns the written paths.

    A malformed line stops rendering with :class:`DumpError`; frames already
    written are left in place.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for index, data in enumerate(iter_dump(dump_path), start=1):
        path = os.path.join(out_dir, frame_name(index))
        save_png(render_frame(data, layout), path)
        written.append(path)
    return written
