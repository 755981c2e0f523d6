"""Plain-text file formats.

Two-channel recording (``cohspec-two-channel v1``)::

    # format = cohspec-two-channel v1
    # sample_rate_hz = 20.48
    # segment_len = 2048
    # num_segments = 1024
    # channels = a,b
    # synthesis = {...json...}
    sample_index,a,b
    0,0.12345678901234567,-1.2345678901234567
    ...

Values are written with 17 significant digits so doubles round-trip
exactly. Report CSVs share the ``# key = value`` header convention; header
values that are not plain scalars are JSON.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .spectral_core import SamplingGrid, SegmentedRecording

__all__ = [
    "TWO_CHANNEL_FORMAT",
    "FormatError",
    "TwoChannelFile",
    "atomic_writer",
    "write_two_channel",
    "read_two_channel",
    "write_table",
    "read_table",
    "fmt_float",
]

TWO_CHANNEL_FORMAT = "cohspec-two-channel v1"
ANALYSIS_FORMAT = "cohspec-analysis v1"
REPORT_FORMAT = "cohspec-fixed-snr v1"
SWEEP_FORMAT = "cohspec-sweep v1"
_COLUMNS = "sample_index,a,b"


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class TwoChannelFile:
    channel_a: SegmentedRecording
    channel_b: SegmentedRecording
    header: dict = field(default_factory=dict)

    @property
    def grid(self) -> SamplingGrid:
        return self.channel_a.grid


def fmt_float(x) -> str:
    """Shortest decimal that round-trips the double exactly."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


@contextmanager
def atomic_writer(path, newline=""):
    """Write to a sibling temp file, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fh:
            yield fh
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _header_lines(header: dict) -> list[str]:
    out = []
    for key, value in header.items():
        if isinstance(value, (dict, list, tuple)) or value is None:
            value = json.dumps(value, sort_keys=True)
        elif isinstance(value, float):
            value = fmt_float(value)
        out.append(f"# {key} = {value}\n")
    return out


def write_two_channel(path, channel_a: SegmentedRecording, channel_b: SegmentedRecording,
                      synthesis: dict | None = None):
    if channel_a.grid != channel_b.grid:
        raise ValueError("channels are on different grids")
    grid = channel_a.grid
    header = {
        "format": TWO_CHANNEL_FORMAT,
        "sample_rate_hz": float(grid.sample_rate_hz),
        "segment_len": grid.segment_len,
        "num_segments": grid.num_segments,
        "channels": f"{channel_a.channel_id},{channel_b.channel_id}",
    }
    if synthesis is not None:
        header["synthesis"] = synthesis
    rows = np.column_stack([np.arange(grid.total_samples), channel_a.flat(), channel_b.flat()])
    with atomic_writer(path, newline="\n") as fh:
        fh.writelines(_header_lines(header))
        fh.write(_COLUMNS + "\n")
        np.savetxt(fh, rows, fmt=["%d", "%.17g", "%.17g"], delimiter=",")


def _parse_header_line(line: str, lineno: int) -> tuple[str, str]:
    body = line[1:].strip()
    if "=" not in body:
        raise FormatError(f"header line is not 'key = value': {line.rstrip()!r}", lineno)
    key, value = body.split("=", 1)
    return key.strip(), value.strip()


def _split_header(lines: list[str]) -> tuple[dict, int]:
    header = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, value = _parse_header_line(lines[i], i + 1)
        header[key] = value
        i += 1
    return header, i


def _positive(header: dict, key: str, conv, lineno_hint: int):
    if key not in header:
        raise FormatError(f"header is missing '{key}'", lineno_hint)
    try:
        v = conv(header[key])
    except ValueError:
        raise FormatError(f"header '{key}' is not a valid number: {header[key]!r}", lineno_hint) from None
    if not v > 0:
        raise FormatError(f"header '{key}' must be positive, got {v}", lineno_hint)
    return v


def _scan_rows(lines: list[str], start: int, expected_rows: int) -> np.ndarray:
    """Slow row-by-row parse used to locate the first bad line."""
    data = np.empty((expected_rows, 3))
    n = 0
    for offset, raw in enumerate(lines[start:]):
        lineno = start + offset + 1
        line = raw.rstrip("\r\n")
        if not line.strip():
            raise FormatError("empty row", lineno)
        if not raw.endswith("\n") and offset == len(lines) - start - 1:
            raise FormatError("file ends mid-row (missing newline)", lineno)
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"expected 3 comma-separated fields, got {len(parts)}", lineno)
        try:
            idx = int(parts[0])
            a, b = float(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError(f"unparseable row {line!r}", lineno) from None
        if n >= expected_rows:
            raise FormatError(f"more than the {expected_rows} rows declared in the header", lineno)
        if idx != n:
            raise FormatError(f"sample_index {idx} out of sequence (expected {n})", lineno)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise FormatError("non-finite sample value", lineno)
        data[n] = (idx, a, b)
        n += 1
    if n != expected_rows:
        raise FormatError(f"row count {n} does not match header ({expected_rows} expected)",
                          len(lines) + 1)
    return data


def read_two_channel(path) -> TwoChannelFile:
    """Read and validate a two-channel file.

    Raises
    ------
    FormatError
        On any malformed header or row, naming the 1-based line number.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.splitlines(keepends=True)
    header, i = _split_header(lines)
    fmt = header.get("format")
    if fmt != TWO_CHANNEL_FORMAT:
        raise FormatError(f"unsupported format {fmt!r} (expected {TWO_CHANNEL_FORMAT!r})", 1)
    fs = _positive(header, "sample_rate_hz", float, i)
    L = _positive(header, "segment_len", int, i)
    N = _positive(header, "num_segments", int, i)
    try:
        grid = SamplingGrid(fs, L, N)
    except ValueError as exc:
        raise FormatError(str(exc), i) from None
    labels = header.get("channels", "a,b").split(",")
    if len(labels) != 2:
        raise FormatError(f"'channels' must name two channels, got {header.get('channels')!r}", i)
    if i >= len(lines) or lines[i].strip() != _COLUMNS:
        raise FormatError(f"expected column line {_COLUMNS!r}", i + 1)
    start = i + 1
    expected = grid.total_samples

    data = None
    if len(lines) - start == expected and lines[-1].endswith("\n"):
        try:
            data = np.loadtxt(io.StringIO("".join(lines[start:])), delimiter=",", ndmin=2)
        except ValueError:
            data = None
        if data is not None and (
            data.shape != (expected, 3)
            or not np.array_equal(data[:, 0], np.arange(expected))
            or not np.all(np.isfinite(data[:, 1:]))
        ):
            data = None
    if data is None:
        data = _scan_rows(lines, start, expected)

    if "synthesis" in header:
        try:
            header["synthesis"] = json.loads(header["synthesis"])
        except json.JSONDecodeError:
            pass
    a = SegmentedRecording(np.ascontiguousarray(data[:, 1]).reshape(N, L), grid, labels[0].strip())
    b = SegmentedRecording(np.ascontiguousarray(data[:, 2]).reshape(N, L), grid, labels[1].strip())
    return TwoChannelFile(a, b, header)


def write_table(path, header: dict, columns: list[str], rows):
    """CSV with ``# key = value`` header lines; floats at 17 significant digits."""
    with atomic_writer(path) as fh:
        fh.writelines(_header_lines(header))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if v is None else fmt_float(v) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def read_table(path) -> tuple[dict, dict]:
    """Read a report CSV back as ``(header, {column: float array})``; empty cells are NaN."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    header, i = _split_header(lines)
    for key, value in header.items():
        try:
            header[key] = json.loads(value)
        except json.JSONDecodeError:
            pass
    reader = csv.reader(lines[i:])
    columns = next(reader)
    cols = {c: [] for c in columns}
    for row in reader:
        for c, v in zip(columns, row):
            cols[c].append(float(v) if v != "" else float("nan"))
    return header, {c: np.asarray(v) for c, v in cols.items()}
