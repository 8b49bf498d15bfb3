"""Serialisation: edge lists, weight files, CSV tables and JSON documents.

Floats are written with ``repr`` (shortest round-trip decimal), so a value
read back is bit-identical to the one written.  Infinite, NaN and absent
values become empty CSV fields and JSON ``null``.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"


def _clean(value):
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats to ``None``."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def format_field(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def write_csv(path, header, rows):
    """RFC 4180 table (CRLF line ends, minimal quoting) with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_field(v) for v in row])


def read_csv(path):
    """Rows as dicts of strings (empty string for absent values)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def graph_header(params, box, seed):
    return {
        "d": box.d,
        "L": box.side,
        "boundary": box.boundary,
        "alpha": repr(float(params.alpha)),
        "lambda": repr(float(params.lam)),
        "weights": params.weights.describe(),
        "seed": int(seed),
        "norm": params.norm,
        "version": FORMAT_VERSION,
    }


def _header_lines(header):
    return "".join(f"#{k}={v}\n" for k, v in header.items())


def write_edge_list(path, graph):
    """Header lines ``#key=value`` then one ``i j`` line per edge (``i < j``, ascending)."""
    head = _header_lines(graph_header(graph.params, graph.box, graph.seed))
    body = "".join(f"{i} {j}\n" for i, j in graph.edges.tolist())
    Path(path).write_text(head + body, encoding="utf-8")


def write_weights(path, graph):
    head = _header_lines(graph_header(graph.params, graph.box, graph.seed))
    body = "".join(f"{i} {w!r}\n" for i, w in enumerate(graph.weights.values.tolist()))
    Path(path).write_text(head + body, encoding="utf-8")


def _read_headed(path):
    header = {}
    body = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key] = value
        elif line:
            body.append(line.split())
    return header, body


def read_edge_list(path):
    """``(header, edges)`` with ``edges`` an ``(m, 2)`` int64 array."""
    header, body = _read_headed(path)
    edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
    return header, edges


def read_weights(path):
    header, body = _read_headed(path)
    values = np.array([float(w) for _, w in body])
    return header, values
