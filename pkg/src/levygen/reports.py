"""Result serialization: delimited tables and JSON summaries.

Both writers are deterministic byte for byte: floats are rendered with
%.17g (round-trip exact for doubles), JSON keys are sorted, and line ends
are always '\\n' regardless of platform.  Reruns with the same inputs must
produce identical files, so nothing here may touch clocks, locales, or
environment state.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

__all__ = ["format_cell", "write_csv", "write_json", "jsonable"]


def format_cell(value) -> str:
    """One CSV cell; '.' decimal separator always."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows) -> None:
    """Header row then data rows, '\\n' line ends, minimal quoting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(h) for h in header])
        for row in rows:
            w.writerow([format_cell(v) for v in row])


def jsonable(obj):
    """Recursively coerce numpy containers and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
