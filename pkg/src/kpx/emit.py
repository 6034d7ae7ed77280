"""Deterministic CSV and JSON writers.

Floats in CSV use 17 significant digits, which is lossless for binary64 and
independent of the process locale. JSON uses the shortest round-trip repr with
sorted keys, so parse/re-emit cycles are byte-stable.
"""
from __future__ import annotations

import json
import math
from collections.abc import Iterable, Sequence
from enum import Enum

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence], comments_before: Sequence[str] = (),
             comments_after: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments_before]
    lines.append(",".join(header))
    lines.extend(",".join(fmt_cell(v) for v in row) for row in rows)
    lines.extend(f"# {c}" for c in comments_after)
    return "\n".join(lines) + "\n"


def _plain(obj):
    """Recursively convert numpy and enum values into JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"
