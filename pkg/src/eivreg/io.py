"""CSV and JSON artifacts: exact float round-trip, atomic writes, run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

__all__ = [
    "CsvFormatError",
    "format_value",
    "atomic_write_text",
    "write_csv",
    "read_csv",
    "read_columns",
    "write_json",
    "read_json",
    "sha256_file",
]


class CsvFormatError(ValueError):
    """Malformed input CSV; ``line`` is 1-based and counts the header."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_value(v) -> str:
    # repr of a Python float is the shortest string that parses back exactly
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Comma-separated, ``\\n`` line endings, mandatory header."""
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row has {len(row)} fields, header has {width}")
        lines.append(",".join(format_value(v) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def _read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [(reader.line_num, row) for row in reader]
    if not rows:
        raise CsvFormatError("empty file", 1)
    header = [h.strip() for h in rows[0][1]]
    body = []
    for line, row in rows[1:]:
        if not row:
            continue
        if len(row) != len(header):
            raise CsvFormatError(f"expected {len(header)} fields, found {len(row)}", line)
        body.append((line, row))
    return header, body


def read_csv(path) -> Tuple[List[str], List[List[str]]]:
    """Header and raw string rows; ragged rows raise :class:`CsvFormatError`."""
    header, body = _read_rows(path)
    return header, [row for _, row in body]


def read_columns(path, required: Sequence[str]) -> Dict[str, np.ndarray]:
    """Parse the ``required`` columns as float arrays.

    The header must name every required column; non-numeric or non-finite
    cells raise :class:`CsvFormatError` with their line number.
    """
    header, body = _read_rows(path)
    missing = [c for c in required if c not in header]
    if missing:
        raise CsvFormatError(f"header must contain {','.join(required)}; missing {','.join(missing)}", 1)
    idx = [header.index(c) for c in required]
    out = {c: np.empty(len(body)) for c in required}
    for r, (line, row) in enumerate(body):
        for c, k in zip(required, idx):
            try:
                val = float(row[k])
            except ValueError:
                raise CsvFormatError(f"column {c!r}: not a number: {row[k]!r}", line) from None
            if not np.isfinite(val):
                raise CsvFormatError(f"column {c!r}: non-finite value", line)
            out[c][r] = val
    return out


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
