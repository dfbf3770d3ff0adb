"""Disk-backed, prefix-ordered trace store.

Layout of a store directory::

    manifest.json   format name, version, alphabet sizes, widths, counts
    payload.bin     records in key order; one record is
                      u16 LE  length L
                      L * W   symbol bytes (the sort key; W-byte big-endian per symbol)
                      V       label, V-byte little-endian
    offsets.bin     u64 LE byte offset of every record into payload.bin
    index.bin       sparse fence index, one entry per page of ``page_records``
                    records: u16 LE key length, then the key of the page's
                    first record

Keys compare bytewise, which orders traces lexicographically with every
prefix sorting before its extensions.  All traces sharing a prefix ``t`` are
therefore one contiguous run of records, which is what makes
:meth:`TraceStore.prefix_query` a bounded range scan.
"""

from __future__ import annotations

import bisect
import heapq
import json
import mmap
import os
import random
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Iterator

from .core import LabeledTrace, Trace

STORE_FORMAT = "daalder-trace-store"
STORE_VERSION = 1

_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")


class StoreError(Exception):
    pass


class TraceConflictError(StoreError, ValueError):
    """The same trace was supplied with two different labels."""


def _width(alphabet_size: int) -> int:
    if alphabet_size <= 1 << 8:
        return 1
    if alphabet_size <= 1 << 16:
        return 2
    return 4


class _Codec:
    def __init__(self, input_size: int, output_size: int):
        self.input_size = input_size
        self.output_size = output_size
        self.sym_width = _width(input_size)
        self.label_width = _width(output_size)

    def key(self, trace: Iterable[int]) -> bytes:
        if self.sym_width == 1:
            return bytes(trace)
        w = self.sym_width
        return b"".join(a.to_bytes(w, "big") for a in trace)

    def trace(self, key: bytes) -> Trace:
        if self.sym_width == 1:
            return tuple(key)
        w = self.sym_width
        return tuple(int.from_bytes(key[i : i + w], "big") for i in range(0, len(key), w))

    def record(self, key: bytes, label: int) -> bytes:
        return (
            _U16.pack(len(key) // self.sym_width)
            + key
            + label.to_bytes(self.label_width, "little")
        )

    def check(self, lt: LabeledTrace) -> None:
        for a in lt.trace:
            if not 0 <= a < self.input_size:
                raise ValueError(f"trace {lt.trace!r}: symbol {a} outside input alphabet")
        if not 0 <= lt.label < self.output_size:
            raise ValueError(f"trace {lt.trace!r}: label {lt.label} outside output alphabet")


def _read_run(path: Path, codec: _Codec) -> Iterator[tuple[bytes, int]]:
    w, lw = codec.sym_width, codec.label_width
    with open(path, "rb") as f:
        while True:
            head = f.read(2)
            if not head:
                return
            (n,) = _U16.unpack(head)
            key = f.read(n * w)
            label = int.from_bytes(f.read(lw), "little")
            yield key, label


def _smallest_prime_at_least(n: int) -> int:
    n = max(n, 2)
    while True:
        if all(n % d for d in range(2, int(n**0.5) + 1)):
            return n
        n += 1


class TraceStore:
    """Read-only view of a built store.  Use :meth:`build` or :meth:`open`."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        try:
            manifest = json.loads((self.path / "manifest.json").read_text())
        except FileNotFoundError:
            raise StoreError(f"{self.path}: not a trace store (no manifest.json)") from None
        if manifest.get("format") != STORE_FORMAT:
            raise StoreError(f"{self.path}: unknown store format {manifest.get('format')!r}")
        if manifest.get("version") != STORE_VERSION:
            raise StoreError(f"{self.path}: unsupported store version {manifest.get('version')!r}")
        self.manifest = manifest
        self.input_size: int = manifest["input_size"]
        self.output_size: int = manifest["output_size"]
        self.record_count: int = manifest["record_count"]
        self.page_records: int = manifest["page_records"]
        self._codec = _Codec(self.input_size, self.output_size)

        self._fences: list[bytes] = []
        with open(self.path / "index.bin", "rb") as f:
            data = f.read()
        pos = 0
        while pos < len(data):
            (n,) = _U16.unpack_from(data, pos)
            self._fences.append(data[pos + 2 : pos + 2 + n])
            pos += 2 + n

        self._files = []
        self._payload: mmap.mmap | bytes = b""
        self._offsets: mmap.mmap | bytes = b""
        if self.record_count:
            for name in ("payload.bin", "offsets.bin"):
                f = open(self.path / name, "rb")
                self._files.append(f)
            self._payload = mmap.mmap(self._files[0].fileno(), 0, access=mmap.ACCESS_READ)
            self._offsets = mmap.mmap(self._files[1].fileno(), 0, access=mmap.ACCESS_READ)

    @classmethod
    def open(cls, path: str | os.PathLike) -> TraceStore:
        return cls(path)

    @classmethod
    def build(
        cls,
        labeled_traces: Iterable[LabeledTrace | tuple[Trace, int]],
        path: str | os.PathLike,
        input_size: int,
        output_size: int,
        *,
        buffer_records: int = 100_000,
        page_records: int = 64,
    ) -> TraceStore:
        """Ingest a stream of labeled traces into a new store at ``path``.

        Sorting is external: at most ``buffer_records`` records are held in
        memory before being spilled to a sorted run on disk.  Duplicate
        traces are collapsed; a duplicate with a different label raises
        :class:`TraceConflictError`.
        """
        if buffer_records < 1 or page_records < 1:
            raise ValueError("buffer_records and page_records must be positive")
        codec = _Codec(input_size, output_size)
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)

        with tempfile.TemporaryDirectory(dir=path, prefix=".runs-") as tmp:
            runs: list[Path] = []
            buf: dict[bytes, int] = {}

            def spill() -> None:
                run = Path(tmp) / f"run{len(runs):05d}.bin"
                with open(run, "wb") as f:
                    for key in sorted(buf):
                        f.write(codec.record(key, buf[key]))
                runs.append(run)
                buf.clear()

            for item in labeled_traces:
                lt = LabeledTrace(tuple(item[0]), item[1])
                codec.check(lt)
                key = codec.key(lt.trace)
                old = buf.setdefault(key, lt.label)
                if old != lt.label:
                    raise TraceConflictError(
                        f"trace {lt.trace!r} labelled both {old} and {lt.label}"
                    )
                if len(buf) >= buffer_records:
                    spill()
            if buf:
                spill()

            count = 0
            max_len = 0
            with open(path / "payload.bin", "wb") as pay, open(
                path / "offsets.bin", "wb"
            ) as offs, open(path / "index.bin", "wb") as idx:
                offset = 0
                last_key: bytes | None = None
                last_label = -1
                merged = heapq.merge(*(_read_run(r, codec) for r in runs))
                for key, label in merged:
                    if key == last_key:
                        if label != last_label:
                            raise TraceConflictError(
                                f"trace {codec.trace(key)!r} labelled both {last_label} and {label}"
                            )
                        continue
                    last_key, last_label = key, label
                    if count % page_records == 0:
                        idx.write(_U16.pack(len(key)) + key)
                    rec = codec.record(key, label)
                    pay.write(rec)
                    offs.write(_U64.pack(offset))
                    offset += len(rec)
                    count += 1
                    max_len = max(max_len, len(key) // codec.sym_width)

        manifest = {
            "format": STORE_FORMAT,
            "version": STORE_VERSION,
            "input_size": input_size,
            "output_size": output_size,
            "symbol_width": codec.sym_width,
            "label_width": codec.label_width,
            "record_count": count,
            "page_records": page_records,
            "max_length": max_len,
        }
        (path / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return cls(path)

    # -- record access -------------------------------------------------------

    def close(self) -> None:
        for m in (self._payload, self._offsets):
            if isinstance(m, mmap.mmap):
                m.close()
        for f in self._files:
            f.close()
        self._files = []
        self._payload = self._offsets = b""

    def __enter__(self) -> TraceStore:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return self.record_count

    def _record_at(self, offset: int) -> tuple[bytes, int, int]:
        """(key, label, next offset) of the record starting at ``offset``."""
        pay = self._payload
        (n,) = _U16.unpack_from(pay, offset)
        start = offset + 2
        end = start + n * self._codec.sym_width
        lw = self._codec.label_width
        label = pay[end] if lw == 1 else int.from_bytes(pay[end : end + lw], "little")
        return pay[start:end], label, end + lw

    def _offset(self, i: int) -> int:
        return _U64.unpack_from(self._offsets, 8 * i)[0]

    def _key(self, i: int) -> bytes:
        return self._record_at(self._offset(i))[0]

    def _seek(self, key: bytes) -> int:
        """Id of the first record whose key is >= ``key``."""
        n = self.record_count
        if not n:
            return 0
        page = max(bisect.bisect_right(self._fences, key) - 1, 0)
        lo = page * self.page_records
        hi = min(lo + self.page_records, n)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._key(mid) < key:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def record(self, i: int) -> LabeledTrace:
        if not 0 <= i < self.record_count:
            raise IndexError(i)
        key, label, _ = self._record_at(self._offset(i))
        return LabeledTrace(self._codec.trace(key), label)

    def __iter__(self) -> Iterator[LabeledTrace]:
        """All records in key order, read sequentially."""
        decode = self._codec.trace
        offset = 0
        for _ in range(self.record_count):
            key, label, offset = self._record_at(offset)
            yield LabeledTrace(decode(key), label)

    # -- queries ---------------------------------------------------------------

    def prefix_query(self, t: Iterable[int], n: int | None = None, k: int = 10) -> list[LabeledTrace]:
        """Up to ``k`` stored traces extending ``t`` (and no longer than ``n``), in key order."""
        if k < 1:
            raise ValueError("k must be at least 1")
        t = tuple(t)
        if n is not None and n < len(t):
            return []
        codec = self._codec
        prefix = codec.key(t)
        count = self.record_count
        w = codec.sym_width
        out: list[LabeledTrace] = []
        i = self._seek(prefix)
        if i >= count:
            return out
        offset = self._offset(i)
        while i < count and len(out) < k:
            key, label, next_offset = self._record_at(offset)
            if not key.startswith(prefix):
                break
            if n is not None and len(key) > n * w:
                # every key sharing this one's first n+1 symbols is too long
                succ = self._successor(key[: (n + 1) * w])
                if succ is None:
                    break
                i = self._seek(succ)
                if i < count:
                    offset = self._offset(i)
                continue
            out.append(LabeledTrace(codec.trace(key), label))
            i += 1
            offset = next_offset
        return out

    def _successor(self, key: bytes) -> bytes | None:
        """Smallest key greater than every key that starts with ``key``."""
        syms = list(self._codec.trace(key))
        top = self.input_size - 1
        while syms and syms[-1] == top:
            syms.pop()
        if not syms:
            return None
        syms[-1] += 1
        return self._codec.key(syms)

    def lookup(self, t: Iterable[int]) -> int | None:
        key = self._codec.key(tuple(t))
        i = self._seek(key)
        if i < self.record_count:
            found, label, _ = self._record_at(self._offset(i))
            if found == key:
                return label
        return None

    def __contains__(self, t: Iterable[int]) -> bool:
        return self.lookup(t) is not None

    def random_stream(self, seed: int) -> Iterator[LabeledTrace]:
        """Every record exactly once, in a seeded pseudo-random order.

        The order is the affine map ``i -> (a*i + b) mod p`` over the smallest
        prime ``p >= record_count``, skipping images outside the record range.
        """
        count = self.record_count
        if not count:
            return
        p = _smallest_prime_at_least(count)
        rng = random.Random(seed)
        a = rng.randrange(1, p)
        b = rng.randrange(p)
        decode = self._codec.trace
        for i in range(p):
            r = (a * i + b) % p
            if r < count:
                key, label, _ = self._record_at(self._offset(r))
                yield LabeledTrace(decode(key), label)
