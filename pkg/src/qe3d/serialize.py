"""Deterministic JSON and CSV output.

Floats are written with 17 significant digits, keys are sorted, and files
are written to a temporary sibling and renamed into place so a failed run
never leaves a partial file behind.
"""

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


def _format_float(x):
    if not math.isfinite(x):
        return "null"
    return FLOAT_FORMAT % x


def to_plain(obj):
    """Convert numpy values, tuples, fractions and report objects to JSON types."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, Fraction)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad + i for i in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{json.dumps(k, ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}"
            for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(pad + i for i in items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Canonical JSON text with a trailing newline."""
    return _encode(to_plain(obj), indent, 0) + "\n"


def envelope(kind, payload):
    return {"schema_version": SCHEMA_VERSION, "kind": kind, **payload}


def write_atomic(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_float(float(v)) for v in row])
    return buf.getvalue()


def solution_csv(solution, every=1):
    """Node table of an ODE solution: s, value, d1, d2, drift per component."""
    n = solution.values.shape[0]
    d2 = np.asarray(solution.problem.rhs(list(solution.values), list(solution.slopes)), dtype=float)
    d2 = np.broadcast_to(d2.reshape(n, -1), solution.values.shape)
    if n == 1:
        header = ["s", "value", "d1", "d2", "drift"]
    else:
        header = (["s"] + [f"value{c}" for c in range(n)] + [f"d1_{c}" for c in range(n)]
                  + [f"d2_{c}" for c in range(n)] + ["drift"])
    cols = [solution.s, *solution.values, *solution.slopes, *d2, solution.drift]
    rows = np.column_stack(cols)[:: max(1, int(every))]
    return csv_text(header, rows)


def flatten(obj, prefix=""):
    """Dotted-key view of nested JSON data, used for CSV export."""
    out = {}
    if isinstance(obj, dict):
        for k in sorted(obj):
            out.update(flatten(obj[k], f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def records_csv(records):
    flat = [flatten(to_plain(r)) for r in records]
    keys = sorted({k for f in flat for k in f})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys)
    for f in flat:
        row = []
        for k in keys:
            v = f.get(k)
            if isinstance(v, float):
                v = _format_float(v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif v is None:
                v = ""
            row.append(v)
        writer.writerow(row)
    return buf.getvalue()
