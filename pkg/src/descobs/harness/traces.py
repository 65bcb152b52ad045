"""CSV and JSON export of run results.

CSV files follow RFC 4180 (comma separated, CRLF line ends, header row).
Floats are written with ``repr``, the shortest string that round-trips to
the same double, so identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os

TRACE_FILES = {
    "states": "states.csv",
    "parameters": "parameters.csv",
    "regressor": "regressor.csv",
    "delta": "delta.csv",
    "excitation": "excitation.csv",
}
SUMMARY_FILE = "summary.json"


def format_float(v) -> str:
    return repr(float(v))


def write_trace(path, group):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(group.header)
        for row in group.rows:
            w.writerow([format_float(v) for v in row])


def _clean(obj):
    """Replace non-finite floats by ``None`` so the document is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    v = float(obj)
    return v if math.isfinite(v) else None


def summary_json(summary) -> str:
    return json.dumps(_clean(summary), indent=2, sort_keys=True, allow_nan=False) + "\n"


def export_traces(result, out_dir):
    """Write every trace group and ``summary.json`` into ``out_dir``; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, fname in TRACE_FILES.items():
        path = os.path.join(out_dir, fname)
        write_trace(path, result.traces[name])
        paths.append(path)
    path = os.path.join(out_dir, SUMMARY_FILE)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_json(result.summary))
    paths.append(path)
    return paths
