"""JSON schemas and (de)serialization for matrices, systems, families and
partitions.  Complex numbers travel as ``[re, im]`` pairs; partition indices
are 1-based on the wire."""

import csv
import sys
import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import InputError

_NUMBER_OR_PAIR = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

MATRIX_SCHEMA = {
    "type": "object",
    "required": ["dim", "entries"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "entries": {"type": "array", "items": {"type": "array", "items": _NUMBER_OR_PAIR}},
    },
}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["matrices"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "matrices": {"type": "array", "items": MATRIX_SCHEMA},
    },
}

PARTITION_SCHEMA = {
    "type": "object",
    "required": ["blocks"],
    "properties": {
        "blocks": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
    },
}

FAMILY_SCHEMA = {
    "type": "object",
    "required": ["polynomials"],
    "properties": {
        "polynomials": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        },
        "order": {"enum": ["ascending", "descending"]},
        "weights": {"type": "array", "items": {"type": "number"}},
    },
}


def validate(payload, schema, what):
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        raise InputError(f"invalid {what}: {exc.message}", path=list(exc.absolute_path)) from None


def load_payload(source):
    """Parse ``source``: a file path, ``-`` for stdin, or inline JSON text."""
    if source is None:
        raise InputError("no input given")
    if source == "-":
        text = sys.stdin.read()
    elif source.lstrip().startswith(("{", "[")):
        text = source
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputError(f"cannot read input: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None


def _entry(v):
    if isinstance(v, list):
        return complex(v[0], v[1])
    return complex(v)


def matrix_from_json(obj):
    validate(obj, MATRIX_SCHEMA, "matrix")
    d = obj["dim"]
    rows = obj["entries"]
    if len(rows) != d or any(len(row) != d for row in rows):
        raise InputError(f"matrix entries must be {d} x {d}")
    return np.array([[_entry(v) for v in row] for row in rows], dtype=complex)


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    return {
        "dim": int(M.shape[0]),
        "entries": [[[float(v.real), float(v.imag)] for v in row] for row in M],
    }


def system_from_json(obj):
    validate(obj, SYSTEM_SCHEMA, "system")
    mats = [matrix_from_json(m) for m in obj["matrices"]]
    dim = obj.get("dim")
    if dim is None and not mats:
        raise InputError("an empty system needs an explicit 'dim'")
    return mats, dim


def system_to_json(mats, dim=None):
    out = {"matrices": [matrix_to_json(M) for M in mats]}
    if dim is not None:
        out["dim"] = int(dim)
    return out


def blocks_from_json(obj, m):
    """1-based wire blocks to 0-based lists."""
    validate(obj, PARTITION_SCHEMA, "partition")
    blocks = [[i - 1 for i in b] for b in obj["blocks"]]
    for b in blocks:
        if any(not 0 <= i < m for i in b):
            raise InputError(f"block indices must lie in 1..{m}")
    return blocks


def family_from_json(obj):
    from .unipoly import RealPoly

    validate(obj, FAMILY_SCHEMA, "family")
    desc = obj.get("order", "ascending") == "descending"
    return [RealPoly(c[::-1] if desc else c) for c in obj["polynomials"]]


def write_roots_csv(roots, bound, path):
    """Write ``index,root,bound`` rows (1-based index, descending roots)."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "root", "bound"])
            for k, root in enumerate(roots, start=1):
                w.writerow([k, repr(float(root)), "" if bound is None else repr(float(bound))])
    except OSError as exc:
        raise InputError(f"cannot write CSV: {exc}") from None


def dumps(payload):
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if f != f or f in (float("inf"), float("-inf")):
            return repr(f)
        return f
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v
