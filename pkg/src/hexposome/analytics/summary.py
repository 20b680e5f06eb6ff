"""Per-cluster five-number summaries."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from ..errors import DataError
from ..frame import HexFrame


class FiveNumber(NamedTuple):
    min: float
    q1: float
    median: float
    q3: float
    max: float


def five_number(values) -> FiveNumber:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise DataError("cannot summarize an empty group")
    q = np.percentile(v, [0, 25, 50, 75, 100])  # linear interpolation between order statistics
    return FiveNumber(*(float(x) for x in q))


def cluster_summary(frame: HexFrame, labels, columns: Sequence[str] | None = None) -> dict:
    """``{label: {column: FiveNumber}}``; the noise label -1 is summarized on its own."""
    labels = np.asarray(labels)
    if len(labels) != len(frame):
        raise DataError(f"{len(labels)} labels for {len(frame)} rows")
    columns = list(columns or frame.columns)
    out = {}
    for lab in sorted(set(labels.tolist())):
        rows = labels == lab
        out[int(lab)] = {c: five_number(frame.column(c)[rows]) for c in columns}
    return out


def summary_medians(summary: dict) -> dict:
    return {lab: {c: fn.median for c, fn in feats.items()} for lab, feats in summary.items()}
