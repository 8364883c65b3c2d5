"""Record, schedule and result file formats.

Records and schedules are plain CSV (``theta,xprime`` and ``theta,count``),
gzip-compressed when the file name ends in ``.gz``. Results are JSON lines.
"""

from __future__ import annotations

import ast
import gzip
import io
import json
import operator
from pathlib import Path

import numpy as np

from catwitness.simulator import PhaseSchedule, QuadratureRecords

RECORD_HEADER = "theta,xprime"
SCHEDULE_HEADER = "theta,count"


class FormatError(ValueError):
    pass


def _open_text(path, mode: str):
    path = Path(path)
    if path.suffix == ".gz":
        if "w" in mode:
            # fixed mtime keeps compressed output byte-identical across runs
            raw = gzip.GzipFile(filename="", mode="wb", fileobj=open(path, "wb"), mtime=0)
            return io.TextIOWrapper(raw, encoding="ascii", newline="\n")
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="ascii")
    return open(path, mode, encoding="ascii", newline="\n" if "w" in mode else None)


def _read_table(path, header: str) -> np.ndarray:
    with _open_text(path, "r") as fh:
        first = fh.readline().strip()
        if first != header:
            raise FormatError(f"{path}: expected header {header!r}, found {first!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=float)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if data.size == 0:
        return np.empty((0, 2))
    if data.shape[1] != 2:
        raise FormatError(f"{path}: expected 2 columns, found {data.shape[1]}")
    if not np.all(np.isfinite(data)):
        raise FormatError(f"{path}: non-finite value in data")
    return data


def read_records(path) -> QuadratureRecords:
    data = _read_table(path, RECORD_HEADER)
    theta = data[:, 0]
    bad = (theta < 0) | (theta >= 2 * np.pi)
    if np.any(bad):
        raise FormatError(f"{path}: theta {theta[np.argmax(bad)]!r} outside [0, 2 pi)")
    return QuadratureRecords(theta, data[:, 1])


def write_records(path, records: QuadratureRecords) -> None:
    with _open_text(path, "w") as fh:
        fh.write(RECORD_HEADER + "\n")
        for t, x in zip(records.theta.tolist(), records.xprime.tolist()):
            fh.write(f"{t!r},{x!r}\n")


def read_schedule(path) -> PhaseSchedule:
    data = _read_table(path, SCHEDULE_HEADER)
    counts = data[:, 1]
    if np.any(counts != np.round(counts)):
        raise FormatError(f"{path}: counts must be integers")
    theta = data[:, 0]
    equidistant = np.allclose(np.sort(theta), np.arange(theta.size) * np.pi / theta.size, rtol=0, atol=1e-12)
    kind = "grid" if equidistant and np.unique(counts).size == 1 else "density"
    return PhaseSchedule(theta, counts.astype(np.int64), kind)


def write_schedule(path, schedule: PhaseSchedule) -> None:
    with _open_text(path, "w") as fh:
        fh.write(SCHEDULE_HEADER + "\n")
        for t, c in zip(schedule.theta.tolist(), schedule.counts.tolist()):
            fh.write(f"{t!r},{c}\n")


def write_jsonl(path, docs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")


_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_angle(text: str) -> float:
    """Radians from a literal such as ``0.3``, ``PI/2`` or ``3*pi/4``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id.lower() == "pi":
            return np.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported angle expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse angle {text!r}") from None
    try:
        value = ev(tree)
    except ZeroDivisionError:
        raise ValueError(f"angle {text!r} divides by zero") from None
    if not np.isfinite(value):
        raise ValueError(f"angle {text!r} is not finite")
    return value
