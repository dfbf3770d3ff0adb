from __future__ import annotations

import pytest

from daalder.abbadingo import TraceFormatError, read_header, read_traces, write_traces
from daalder.core import LabeledTrace


def test_round_trip(tmp_path):
    recs = [LabeledTrace((), 1), LabeledTrace((0, 2, 1), 0), LabeledTrace((2,), 3)]
    p = tmp_path / "t.txt"
    assert write_traces(p, recs, 3) == 3
    assert read_header(p) == (3, 3)
    assert list(read_traces(p)) == recs


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("x y\n", 1),
        ("1 2\n1 2 0\n", 2),
        ("1 2\n1 1 a\n", 2),
        ("2 2\n1 1 0\n0 1 5\n", 3),
        ("3 2\n1 1 0\n", 4),
    ],
)
def test_bad_files_report_line(tmp_path, text, lineno):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(TraceFormatError) as exc:
        list(read_traces(p))
    assert exc.value.lineno == lineno
