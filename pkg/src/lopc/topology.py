"""Critical points of piecewise-linear fields on the Freudenthal mesh, and quality metrics.

A vertex's lower link holds the neighbors that precede it in the tie-broken
order, its upper link the ones that follow.  An empty lower link makes a
minimum, an empty upper link a maximum, one connected component in each makes
a regular vertex, and anything else is a saddle.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, ZeroRange
from .fixpoint import check_local_order, sos_less
from .grid import GridShape, component_counts, link_adjacent, n_slots, neighbors, slot_slices
from .quantize import diff_within


class CriticalType(enum.IntEnum):
    REGULAR = 0
    MINIMUM = 1
    MAXIMUM = 2
    SADDLE = 3


def _components(members: list[int], v: int, shape: GridShape) -> int:
    left = set(members)
    comps = 0
    while left:
        comps += 1
        todo = deque([left.pop()])
        while todo:
            a = todo.popleft()
            for b in [b for b in left if link_adjacent(v, a, b, shape)]:
                left.discard(b)
                todo.append(b)
    return comps


def classify(v: int, values: np.ndarray, shape: GridShape | None = None) -> CriticalType:
    """Type of a single vertex."""
    values = np.asarray(values)
    shape = shape or GridShape.from_array(values)
    flat = values.ravel()
    lower, upper = [], []
    for n in neighbors(v, shape):
        (lower if sos_less(flat[n], n, flat[v], v) else upper).append(n)
    if not lower:
        return CriticalType.MINIMUM
    if not upper:
        return CriticalType.MAXIMUM
    if _components(lower, v, shape) == 1 and _components(upper, v, shape) == 1:
        return CriticalType.REGULAR
    return CriticalType.SADDLE


def classify_field(values: np.ndarray, shape: GridShape | None = None) -> np.ndarray:
    """Critical type of every vertex, flattened in linear-index order (``int8`` codes)."""
    values = np.asarray(values)
    shape = shape or GridShape.from_array(values)
    arr = values.reshape(shape.array_shape)
    m = n_slots(shape.rank)
    k = m // 2
    lower = np.zeros(shape.array_shape, dtype=np.int64)
    upper = np.zeros(shape.array_shape, dtype=np.int64)
    for slot in range(m):
        here, there = slot_slices(shape, slot)
        less = arr[there] < arr[here] if slot < k else arr[there] <= arr[here]
        lower[here] |= less.astype(np.int64) << slot
        upper[here] |= (~less).astype(np.int64) << slot
    lower, upper = lower.ravel(), upper.ravel()
    if shape.has_cells:
        table = component_counts(shape.rank)
        nlow, nup = table[lower], table[upper]
    else:
        # without cells no two neighbors share a simplex
        nlow, nup = np.bitwise_count(lower), np.bitwise_count(upper)
    out = np.full(shape.size, CriticalType.SADDLE, dtype=np.int8)
    out[(nlow == 1) & (nup == 1)] = CriticalType.REGULAR
    out[nup == 0] = CriticalType.MAXIMUM
    out[nlow == 0] = CriticalType.MINIMUM
    return out


def _type_counts(types: np.ndarray) -> dict[str, int]:
    return {t.name.lower(): int(np.count_nonzero(types == t)) for t in CriticalType if t}


@dataclass
class CriticalPointReport:
    original: np.ndarray
    reconstructed: np.ndarray
    false_positives: int
    false_negatives: int
    false_types: int

    @property
    def total(self) -> int:
        return self.false_positives + self.false_negatives + self.false_types

    def counts(self) -> dict:
        return {
            "original": _type_counts(self.original),
            "reconstructed": _type_counts(self.reconstructed),
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "false_types": self.false_types,
        }


def _check_same(original, reconstructed):
    original = np.asarray(original)
    reconstructed = np.asarray(reconstructed)
    if original.shape != reconstructed.shape:
        raise ShapeMismatch(f"{original.shape} vs {reconstructed.shape}")
    return original, reconstructed


def diff_critical(original, reconstructed, shape: GridShape | None = None) -> CriticalPointReport:
    original, reconstructed = _check_same(original, reconstructed)
    shape = shape or GridShape.from_array(original)
    a = classify_field(original, shape)
    b = classify_field(reconstructed, shape)
    crit_a = a != CriticalType.REGULAR
    crit_b = b != CriticalType.REGULAR
    return CriticalPointReport(
        original=a,
        reconstructed=b,
        false_positives=int(np.count_nonzero(crit_b & ~crit_a)),
        false_negatives=int(np.count_nonzero(crit_a & ~crit_b)),
        false_types=int(np.count_nonzero(crit_a & crit_b & (a != b))),
    )


def psnr(original, reconstructed) -> float:
    """``20 log10(range / RMSE)`` in dB; ``inf`` for an exact match."""
    original, reconstructed = _check_same(original, reconstructed)
    a = original.astype(np.float64)
    value_range = float(a.max() - a.min())
    if value_range == 0.0:
        raise ZeroRange("PSNR is undefined for a constant field")
    rmse = math.sqrt(float(np.mean((a - reconstructed.astype(np.float64)) ** 2)))
    if rmse == 0.0:
        return math.inf
    return 20.0 * math.log10(value_range / rmse)


def verify_fields(original, reconstructed, eps_abs: float | None = None) -> dict:
    """Everything the verifier reports about a reconstruction, as plain data."""
    original, reconstructed = _check_same(original, reconstructed)
    shape = GridShape.from_array(original)
    err = np.abs(original.astype(np.float64) - reconstructed.astype(np.float64))
    report = diff_critical(original, reconstructed, shape)
    try:
        quality = psnr(original, reconstructed)
    except ZeroRange:
        quality = math.nan
    out = {
        "vertices": int(original.size),
        "max_abs_error": float(err.max()),
        "eps_abs": eps_abs,
        "bound_ok": None,
        "local_order_violations": check_local_order(original, reconstructed, shape),
        **report.counts(),
        "psnr": quality,
    }
    if eps_abs is not None:
        out["bound_ok"] = bool(diff_within(original.ravel(), reconstructed.ravel(), eps_abs).all())
    return out


def passed(report: dict) -> bool:
    return (
        report["bound_ok"] is not False
        and report["local_order_violations"] == 0
        and report["false_positives"] == report["false_negatives"] == report["false_types"] == 0
    )


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def report_to_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=False)


def _flatten(report: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in report.items():
        if isinstance(v, dict):
            flat.update(_flatten(v, f"{prefix}{k}_"))
        else:
            flat[prefix + k] = v
    return flat


def report_to_csv(report: dict) -> str:
    flat = _flatten(_jsonable(report))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    writer.writeheader()
    writer.writerow(flat)
    return buf.getvalue()
