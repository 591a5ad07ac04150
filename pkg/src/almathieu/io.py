"""Deterministic file formats with provenance headers, and their parsers.

CSV: '#' provenance lines, a header row, then data rows.
JSON lines: a first {"provenance": {...}} record, then one record per line.
Grid: '#' provenance lines, the line "# a_min a_max b_min b_max na nb",
a '#' line with those values, then nb rows of na numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math

from . import __version__

GRID_HEADER = "# a_min a_max b_min b_max na nb"


def provenance(command: str, params: dict) -> dict:
    out = {"toolkit": f"almathieu {__version__}", "command": command}
    out.update({k: params[k] for k in sorted(params)})
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse_scalar(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _header_lines(meta: dict) -> list[str]:
    return [f"# {k}={_fmt(v)}" for k, v in meta.items()]


def write_csv(fh, meta: dict, columns: list[str], rows: list[dict]) -> None:
    for line in _header_lines(meta):
        fh.write(line + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])


def read_csv(fh) -> tuple[dict, list[dict]]:
    meta, body = {}, []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = _parse_scalar(val)
        else:
            body.append(line)
    rows = list(csv.reader(io.StringIO("".join(body))))
    if not rows:
        return meta, []
    cols = rows[0]
    return meta, [{c: _parse_scalar(v) for c, v in zip(cols, r)} for r in rows[1:]]


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def write_jsonl(fh, meta: dict, records: list[dict]) -> None:
    fh.write(json.dumps({"provenance": _clean(meta)}, sort_keys=True) + "\n")
    for r in records:
        fh.write(json.dumps(_clean(r), sort_keys=True) + "\n")


def read_jsonl(fh) -> tuple[dict, list[dict]]:
    lines = [json.loads(x) for x in fh if x.strip()]
    if not lines or "provenance" not in lines[0]:
        raise ValueError("missing provenance record")
    return lines[0]["provenance"], lines[1:]


def write_grid(fh, meta: dict, a_range, b_range, values) -> None:
    nb, na = len(values), len(values[0])
    for line in _header_lines(meta):
        fh.write(line + "\n")
    fh.write(GRID_HEADER + "\n")
    fh.write("# " + " ".join(_fmt(float(x)) for x in (a_range[0], a_range[1], b_range[0], b_range[1])) + f" {na} {nb}\n")
    for row in values:
        fh.write(" ".join(_fmt(float(x)) for x in row) + "\n")


def read_grid(fh):
    """Return (meta, dims, rows) with dims = (a_min, a_max, b_min, b_max, na, nb)."""
    meta, rows, dims = {}, [], None
    lines = fh.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        if lines[i] == GRID_HEADER:
            v = lines[i + 1][1:].split()
            dims = (float(v[0]), float(v[1]), float(v[2]), float(v[3]), int(v[4]), int(v[5]))
            i += 2
            continue
        key, _, val = lines[i][1:].strip().partition("=")
        meta[key] = _parse_scalar(val)
        i += 1
    for line in lines[i:]:
        if line.strip():
            rows.append([float(x) for x in line.split()])
    if dims is None:
        raise ValueError("missing grid header")
    return meta, dims, rows
