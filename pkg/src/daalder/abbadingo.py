"""Abbadingo-style trace files.

First line ``<count> <alphabet_size>``, then one trace per line:
``<label> <length> <sym> <sym> ...``.
"""

from __future__ import annotations

import os
from typing import Iterable, Iterator

from .core import LabeledTrace


class TraceFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def read_header(path: str | os.PathLike) -> tuple[int, int]:
    with open(path) as f:
        first = f.readline()
    try:
        count, alphabet = (int(x) for x in first.split())
    except ValueError:
        raise TraceFormatError(path, 1, "header must be '<count> <alphabet_size>'") from None
    return count, alphabet


def read_traces(path: str | os.PathLike) -> Iterator[LabeledTrace]:
    """Stream the records of an Abbadingo file, checking the declared count."""
    count, alphabet = read_header(path)
    seen = 0
    with open(path) as f:
        f.readline()
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                fields = [int(x) for x in line.split()]
            except ValueError:
                raise TraceFormatError(path, lineno, "non-integer field") from None
            if len(fields) < 2 or len(fields) != 2 + fields[1]:
                raise TraceFormatError(path, lineno, "length field does not match symbol count")
            trace = tuple(fields[2:])
            if any(not 0 <= a < alphabet for a in trace):
                raise TraceFormatError(path, lineno, f"symbol outside alphabet of size {alphabet}")
            seen += 1
            yield LabeledTrace(trace, fields[0])
    if seen != count:
        raise TraceFormatError(path, count + 1, f"header declares {count} traces, file has {seen}")


def write_traces(
    path: str | os.PathLike, traces: Iterable[LabeledTrace], alphabet_size: int
) -> int:
    """Write ``traces``; the count in the header is patched in after streaming."""
    width = 24
    count = 0
    with open(path, "w") as f:
        f.write(" " * width + "\n")
        for trace, label in traces:
            f.write(f"{label} {len(trace)}")
            if trace:
                f.write(" " + " ".join(map(str, trace)))
            f.write("\n")
            count += 1
        f.seek(0)
        f.write(f"{count} {alphabet_size}".ljust(width))
    return count
