"""Deterministic serialisation: floats at 12 significant digits, sorted keys,
atomic writes and content hashes."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SIG_DIGITS = 12


def fmt(v) -> str:
    """Format a real number with exactly 12 significant digits (``%.12g``)."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0:
        return "0"
    return format(v, f".{SIG_DIGITS}g")


def _emit(obj, indent: int) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{inner}{json.dumps(k)}: {_emit(v, indent + 1)}" for k, v in items)
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_emit(v, 0) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _emit(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        text = fmt(obj)
        return {"nan": "NaN", "inf": "Infinity", "-inf": "-Infinity"}.get(text, text)
    return json.dumps(str(obj))


def dumps(obj) -> str:
    """JSON text with sorted keys and floats at 12 significant digits."""
    return _emit(obj, 0) + "\n"


def atomic_write(path, text: str) -> str:
    """Write ``text`` atomically; returns the sha256 of its bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def csv_table(header, rows) -> str:
    out = [",".join(header)]
    for r in rows:
        out.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(out) + "\n"
