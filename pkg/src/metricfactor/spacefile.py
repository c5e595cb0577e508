"""Reading and writing SpaceFile documents (JSON) and plain CSV matrices."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import FinMetricSpace, ScaleSet
from .errors import MetricFactorError

FORMAT_VERSION = 1


class SpaceFileError(MetricFactorError, ValueError):
    """Malformed input file; the message names the offending row/column."""


@dataclass
class SpaceDoc:
    space: FinMetricSpace
    subsets: dict = field(default_factory=dict)
    scale_set: ScaleSet | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        m = self.space
        out = {
            "format_version": FORMAT_VERSION,
            "labels": [str(x) for x in m.labels],
            "matrix": [[float(v) for v in row] for row in m.dist],
        }
        if self.subsets:
            out["subsets"] = {k: [str(x) for x in v] for k, v in self.subsets.items()}
        if self.scale_set is not None:
            out["scale_set"] = self.scale_set.as_dict()
        out.update(self.extra)
        return out

    def dumps(self) -> str:
        # one matrix row per line keeps large files readable and diffable
        obj = self.to_json()
        rows = obj.pop("matrix")
        body = json.dumps(obj, indent=1)
        matrix = ",\n".join("  " + json.dumps(r) for r in rows)
        return body[:-2] + f',\n "matrix": [\n{matrix}\n ]\n}}\n'


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpaceFileError(f"{where}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise SpaceFileError(f"{where}: non-finite value {value!r}")
    if v < 0:
        raise SpaceFileError(f"{where}: negative distance {value!r}")
    return v


def _parse_matrix(rows, n: int) -> np.ndarray:
    if not isinstance(rows, list):
        raise SpaceFileError("matrix: expected a list of rows")
    if len(rows) != n:
        raise SpaceFileError(f"matrix: has {len(rows)} rows but there are {n} labels")
    out = np.zeros((n, n))
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise SpaceFileError(f"matrix row {i}: expected a list")
        if len(row) != n:
            raise SpaceFileError(f"matrix row {i}: has {len(row)} entries, expected {n}")
        for j, v in enumerate(row):
            out[i, j] = _number(v, f"matrix row {i}, column {j}")
    return out


def parse_doc(obj) -> SpaceDoc:
    if not isinstance(obj, dict):
        raise SpaceFileError("top level must be a JSON object")
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise SpaceFileError(f"unsupported format_version {version!r}")
    labels = obj.get("labels")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise SpaceFileError("labels: expected a list of strings")
    if len(set(labels)) != len(labels):
        raise SpaceFileError("labels: must be distinct")
    mat = _parse_matrix(obj.get("matrix"), len(labels))
    subsets = {}
    for name, members in (obj.get("subsets") or {}).items():
        if not isinstance(members, list):
            raise SpaceFileError(f"subset {name!r}: expected a list of labels")
        unknown = [x for x in members if x not in labels]
        if unknown:
            raise SpaceFileError(f"subset {name!r}: unknown labels {unknown}")
        subsets[name] = tuple(members)
    scale = None
    if "scale_set" in obj:
        try:
            scale = ScaleSet.from_dict(obj["scale_set"])
        except (MetricFactorError, KeyError, TypeError) as exc:
            raise SpaceFileError(f"scale_set: {exc}") from None
    known = {"format_version", "labels", "matrix", "subsets", "scale_set"}
    extra = {k: v for k, v in obj.items() if k not in known}
    return SpaceDoc(FinMetricSpace(tuple(labels), mat), subsets, scale, extra)


def loads(text: str) -> SpaceDoc:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpaceFileError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_doc(obj)


def load_csv(text: str) -> SpaceDoc:
    """Plain matrix, one row per line.  A non-numeric first row is taken as labels,
    otherwise labels are ``p0, p1, ...``."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise SpaceFileError("empty CSV")
    labels = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        labels = [c.strip() for c in rows[0]]
        rows = rows[1:]
    n = len(rows)
    if labels is None:
        labels = [f"p{i}" for i in range(n)]
    if len(labels) != n:
        raise SpaceFileError(f"header has {len(labels)} labels but there are {n} rows")
    mat = np.zeros((n, n))
    for i, row in enumerate(rows):
        if len(row) != n:
            raise SpaceFileError(f"row {i}: has {len(row)} entries, expected {n}")
        for j, c in enumerate(row):
            try:
                v = float(c)
            except ValueError:
                raise SpaceFileError(f"row {i}, column {j}: not a number: {c!r}") from None
            mat[i, j] = _number(v, f"row {i}, column {j}")
    return SpaceDoc(FinMetricSpace(tuple(labels), mat))


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SpaceFileError(f"cannot read {path}: {exc.strerror}") from None


def load(path: str) -> SpaceDoc:
    text = read_text(path)
    if path.endswith(".csv"):
        return load_csv(text)
    return loads(text)


def save(doc: SpaceDoc, path: str | None) -> None:
    text = doc.dumps()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
