from __future__ import annotations

import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eivreg.io import (CsvFormatError, atomic_write_text, format_value, read_columns, read_csv,
                       read_json, sha256_file, write_csv, write_json)


class TestRoundTrip:
    def test_million_doubles(self, tmp_path):
        rng = np.random.default_rng(0)
        # mix of scales, signs and subnormals
        vals = rng.normal(size=1_000_000) * 10.0 ** rng.integers(-300, 300, size=1_000_000)
        vals[:5] = [0.0, -0.0, 5e-324, 1.7976931348623157e308, 1 / 3]
        path = write_csv(tmp_path / "x.csv", ["v"], ((v,) for v in vals))
        back = read_columns(path, ["v"])["v"]
        np.testing.assert_array_equal(back.view(np.uint64), vals.view(np.uint64))

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_any_finite_float(self, v):
        assert float(format_value(v)) == v

    def test_format(self):
        assert format_value(True) == "true" and format_value(np.bool_(False)) == "false"
        assert format_value(np.int64(7)) == "7"
        assert format_value(np.float32(0.5)) == "0.5"
        assert format_value("abc") == "abc"

    def test_layout(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["x", "y"], [(1.0, 2), (0.1, -3)])
        assert path.read_bytes() == b"x,y\n1.0,2\n0.1,-3\n"
        header, rows = read_csv(path)
        assert header == ["x", "y"] and rows == [["1.0", "2"], ["0.1", "-3"]]

    def test_ragged_write(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "a.csv", ["x", "y"], [(1.0,)])


class TestReadColumns:
    def _write(self, tmp_path, text):
        p = tmp_path / "in.csv"
        p.write_text(text)
        return p

    def test_missing_header(self, tmp_path):
        p = self._write(tmp_path, "a,b\n1,2\n")
        with pytest.raises(CsvFormatError, match="header must contain y,z") as exc:
            read_columns(p, ["y", "z"])
        assert exc.value.line == 1

    def test_bad_number_line(self, tmp_path):
        p = self._write(tmp_path, "y,z\n1,2\n\n3,oops\n")
        with pytest.raises(CsvFormatError) as exc:
            read_columns(p, ["y", "z"])
        assert exc.value.line == 4 and "line 4" in str(exc.value)

    def test_non_finite(self, tmp_path):
        p = self._write(tmp_path, "z\n1\ninf\n")
        with pytest.raises(CsvFormatError) as exc:
            read_columns(p, ["z"])
        assert exc.value.line == 3

    def test_ragged(self, tmp_path):
        p = self._write(tmp_path, "y,z\n1,2\n3\n")
        with pytest.raises(CsvFormatError) as exc:
            read_columns(p, ["z"])
        assert exc.value.line == 3

    def test_empty(self, tmp_path):
        with pytest.raises(CsvFormatError):
            read_columns(self._write(tmp_path, ""), ["z"])

    def test_extra_columns_and_order(self, tmp_path):
        p = self._write(tmp_path, "z, extra ,y\n1,x,2\n")
        cols = read_columns(p, ["y", "z"])
        assert cols["y"][0] == 2.0 and cols["z"][0] == 1.0


class TestAtomic:
    def test_replaces_and_leaves_no_temp(self, tmp_path):
        p = tmp_path / "sub" / "f.txt"
        atomic_write_text(p, "one")
        atomic_write_text(p, "two")
        assert p.read_text() == "two"
        assert os.listdir(p.parent) == ["f.txt"]

    def test_failure_keeps_old_file(self, tmp_path):
        p = tmp_path / "f.csv"
        write_csv(p, ["x"], [(1.0,)])

        def rows():
            yield (2.0,)
            raise RuntimeError("interrupted")

        with pytest.raises(RuntimeError):
            write_csv(p, ["x"], rows())
        assert p.read_text() == "x\n1.0\n"
        assert os.listdir(tmp_path) == ["f.csv"]


class TestJson:
    def test_roundtrip_and_sorted(self, tmp_path):
        p = write_json(tmp_path / "m.json", {"b": 1, "a": [1.5, None]})
        assert read_json(p) == {"a": [1.5, None], "b": 1}
        assert p.read_text().index('"a"') < p.read_text().index('"b"')
        assert json.loads(p.read_text())

    def test_sha(self, tmp_path):
        p = tmp_path / "h"
        p.write_bytes(b"abc")
        assert sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
