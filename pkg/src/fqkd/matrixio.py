"""Versioned matrix files shared by the CLI commands.

CSV layout::

    # fqkd-matrix v1, kind=fq, d=4
    0.375,0.25,...
    ...

JSON layout: ``{"version": 1, "kind": "fq", "d": 4, "rows": [[...], ...]}``.

Kinds ``fq`` and ``counts`` are ``D x D`` with ``D = d^2 (d-1) / 2`` in
canonical F-qubit label order; ``fourier`` and ``computational`` are ``d x d``.
Values are written in Python's shortest round-trip float representation.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hilbert import num_fqubit_states

VERSION = 1
KINDS = ("fq", "fourier", "computational", "counts")
_HEADER = re.compile(r"^#\s*fqkd-matrix\s+v(\d+)\s*,\s*kind=(\w+)\s*,\s*d=(\d+)\s*$")


class MatrixFormatError(ValueError):
    """Malformed matrix file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = str(path) if path is not None else "<matrix>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.reason = message
        self.line = line


@dataclass(frozen=True, eq=False)
class MatrixFile:
    kind: str
    d: int
    rows: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MatrixFormatError(f"unknown kind {self.kind!r}")
        rows = np.asarray(self.rows, dtype=float)
        n = expected_size(self.kind, self.d)
        if rows.shape != (n, n):
            raise MatrixFormatError(f"kind={self.kind}, d={self.d} needs {n}x{n} values, got {rows.shape}")
        if not np.isfinite(rows).all():
            raise MatrixFormatError("non-finite value")
        object.__setattr__(self, "rows", rows)


def expected_size(kind: str, d: int) -> int:
    if d < 2:
        raise MatrixFormatError(f"d must be at least 2, got {d}")
    return num_fqubit_states(d) if kind in ("fq", "counts") else d


def format_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(float(x))


def dumps_csv(mf: MatrixFile) -> str:
    lines = [f"# fqkd-matrix v{VERSION}, kind={mf.kind}, d={mf.d}"]
    lines += [",".join(format_number(v) for v in row) for row in mf.rows]
    return "\n".join(lines) + "\n"


def dumps_json(mf: MatrixFile) -> str:
    rows = [[int(v) if mf.kind == "counts" and v.is_integer() else float(v) for v in row] for row in mf.rows]
    return json.dumps({"version": VERSION, "kind": mf.kind, "d": mf.d, "rows": rows}) + "\n"


def _parse_csv(text: str, path) -> MatrixFile:
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError("empty file", path, 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise MatrixFormatError("missing '# fqkd-matrix v1, kind=..., d=...' header", path, 1)
    version, kind, d = int(m.group(1)), m.group(2), int(m.group(3))
    if version != VERSION:
        raise MatrixFormatError(f"unsupported version {version}", path, 1)
    if kind not in KINDS:
        raise MatrixFormatError(f"unknown kind {kind!r}", path, 1)
    try:
        n = expected_size(kind, d)
    except MatrixFormatError as exc:
        raise MatrixFormatError(exc.reason, path, 1) from None
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            values = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise MatrixFormatError("unparseable number", path, lineno) from None
        if len(values) != n:
            raise MatrixFormatError(f"expected {n} values, found {len(values)}", path, lineno)
        if not all(math.isfinite(v) for v in values):
            raise MatrixFormatError("non-finite value", path, lineno)
        rows.append(values)
        if len(rows) > n:
            raise MatrixFormatError(f"more than {n} rows", path, lineno)
    if len(rows) != n:
        raise MatrixFormatError(f"expected {n} rows, found {len(rows)}", path, len(lines))
    return MatrixFile(kind, d, np.array(rows))


def _parse_json(text: str, path) -> MatrixFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFormatError(exc.msg, path, exc.lineno) from None
    if not isinstance(doc, dict) or set(doc) != {"version", "kind", "d", "rows"}:
        raise MatrixFormatError("expected an object with keys version, kind, d, rows", path)
    if doc["version"] != VERSION:
        raise MatrixFormatError(f"unsupported version {doc['version']!r}", path)
    try:
        rows = np.array(doc["rows"], dtype=float)
        d = int(doc["d"])
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"bad values: {exc}", path) from None
    try:
        return MatrixFile(doc["kind"], d, rows)
    except MatrixFormatError as exc:
        raise MatrixFormatError(exc.reason, path) from None


def is_json_path(path) -> bool:
    return Path(path).suffix.lower() == ".json"


def read_matrix(path) -> MatrixFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixFormatError(f"cannot read file: {exc.strerror}", path) from None
    return _parse_json(text, path) if is_json_path(path) else _parse_csv(text, path)


def write_matrix(path, mf: MatrixFile) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_json(mf) if is_json_path(path) else dumps_csv(mf)
    path.write_text(text, encoding="utf-8")
