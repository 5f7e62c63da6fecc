"""Check records for JSON reports.  Floats are serialized as 17-significant-digit
strings so that reports are byte-stable and lossless.
"""
from __future__ import annotations

import json
import math
import numbers

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def encode(value):
    """Recursively convert numbers to strings and containers to JSON-ready types."""
    if isinstance(value, (bool, np.bool_)) or value is None or isinstance(value, str):
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        return fmt_float(value)
    if isinstance(value, numbers.Complex):
        c = complex(value)
        return {"re": fmt_float(c.real), "im": fmt_float(c.imag)}
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if hasattr(value, "value"):  # enums
        return encode(value.value)
    return str(value)


def record(check: str, params: dict, predicted, measured, residual, passed) -> dict:
    return {"check": check, "params": encode(params), "predicted": encode(predicted),
            "measured": encode(measured), "residual": encode(residual), "pass": bool(passed)}


def dumps(obj) -> str:
    return json.dumps(encode(obj), indent=2, sort_keys=False) + "\n"
