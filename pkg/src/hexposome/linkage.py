"""Hex-to-zone crosswalks and zone-level aggregation for record linkage.

Lookups only ever return hex or zone identifiers, never coordinates.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, FormatError, GridMismatchError
from .frame import HexFrame, Table
from .geomkernel import intersection_area
from .hexgrid import (GridFingerprint, GridSpec, HexId, cell_boundary, cells_in_bbox, decode,
                      point_to_cell)
from .ingest import format_number, parse_number, read_header_comments

STATS = ("mean", "std")


@dataclass(frozen=True)
class CrosswalkRecord:
    hex_id: str
    zone_id: str
    frac_of_hex: float


class Crosswalk:
    COLUMNS = ("hex_id", "zone_id", "frac_of_hex")

    def __init__(self, grid: GridFingerprint, records: Sequence[CrosswalkRecord]):
        self.grid = grid
        self.records = tuple(sorted(records, key=lambda r: (r.hex_id, r.zone_id)))

    def __eq__(self, other):
        if not isinstance(other, Crosswalk):
            return NotImplemented
        return self.grid == other.grid and self.records == other.records

    def __len__(self) -> int:
        return len(self.records)

    def by_hex(self) -> dict[str, list[CrosswalkRecord]]:
        out: dict[str, list[CrosswalkRecord]] = {}
        for rec in self.records:
            out.setdefault(rec.hex_id, []).append(rec)
        return out

    def dominant(self) -> "Crosswalk":
        """Each hex assigned whole to its largest zone (ties: smallest zone id)."""
        recs = []
        for hex_id, group in self.by_hex().items():
            top = min(group, key=lambda r: (-r.frac_of_hex, r.zone_id))
            recs.append(CrosswalkRecord(hex_id, top.zone_id, 1.0))
        return Crosswalk(self.grid, recs)

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"#grid {self.grid}\n")
        out.write(",".join(self.COLUMNS) + "\n")
        for r in self.records:
            out.write(f"{r.hex_id},{r.zone_id},{format_number(r.frac_of_hex)}\n")
        return out.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, expected: GridFingerprint | None = None, source="<text>") -> "Crosswalk":
        lines = text.splitlines()
        meta, start = read_header_comments(lines)
        if "grid" not in meta:
            raise FormatError("crosswalk needs a #grid header", source)
        grid = GridFingerprint.parse(meta["grid"])
        if expected is not None and grid != expected:
            raise GridMismatchError(expected, grid)
        if start >= len(lines) or tuple(lines[start].split(",")) != cls.COLUMNS:
            raise FormatError(f"expected columns {','.join(cls.COLUMNS)}", f"line {start + 1}")
        recs = []
        for i in range(start + 1, len(lines)):
            if not lines[i]:
                continue
            parts = lines[i].split(",")
            if len(parts) != 3:
                raise FormatError("expected 3 fields", f"line {i + 1}")
            recs.append(CrosswalkRecord(parts[0], parts[1], parse_number(parts[2], f"line {i + 1}")))
        return cls(grid, recs)

    @classmethod
    def read(cls, path, expected: GridFingerprint | None = None) -> "Crosswalk":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), expected, str(path))


def build_crosswalk(zones, res: int, g: GridSpec, zone_field: str = "zone_id") -> Crosswalk:
    """Overlay cell boundaries with zone polygons; fraction = intersection / cell area."""
    zones = list(zones)
    ids = []
    for i, z in enumerate(zones):
        if zone_field not in z.properties or z.properties[zone_field] is None:
            raise DataError(f"zone feature {i} has no {zone_field!r}")
        zid = z.properties[zone_field]
        if isinstance(zid, float) and zid.is_integer():
            zid = int(zid)
        zid = str(zid)
        if any(ch in zid for ch in ",\n\r") or not zid:
            raise DataError(f"zone feature {i}: id {zid!r} is empty or contains a comma/newline")
        ids.append(zid)
    dupes = sorted({z for z in ids if ids.count(z) > 1})
    if dupes:
        raise DataError(f"duplicate zone ids: {dupes}")
    cell_area = g.cell_area(res)
    radius = g.circumradius(res)
    boundaries: dict[tuple[int, int], list] = {}
    recs = []
    for zid, zone in zip(ids, zones):
        xmin, ymin, xmax, ymax = zone.bbox()
        q, r, _ = cells_in_bbox((xmin - radius, ymin - radius, xmax + radius, ymax + radius), res, g)
        for qq, rr in zip(q.tolist(), r.tolist()):
            hexagon = boundaries.get((qq, rr))
            if hexagon is None:
                hexagon = boundaries[(qq, rr)] = cell_boundary(HexId(res, qq, rr), g)
            area = math.fsum(intersection_area(p, hexagon) for p in zone.parts)
            if area > 0.0:
                recs.append(CrosswalkRecord(str(HexId(res, qq, rr)), zid, min(1.0, area / cell_area)))
    return Crosswalk(g.fingerprint(res), recs)


def weighted_mean_std(values, weights) -> tuple[float, float]:
    """Weighted mean and weighted population standard deviation."""
    w = [float(x) for x in weights]
    v = [float(x) for x in values]
    total = math.fsum(w)
    if not total > 0:
        raise DataError("weights sum to zero")
    mean = math.fsum(wi * vi for wi, vi in zip(w, v)) / total
    var = math.fsum(wi * (vi - mean) ** 2 for wi, vi in zip(w, v)) / total
    return mean, math.sqrt(var)


def aggregate_to_zone(frame: HexFrame, xwalk: Crosswalk, stats: Sequence[str] = STATS,
                      variables: Sequence[str] | None = None, mode: str = "fractional") -> Table:
    """Zone x period table with ``mean_<var>`` / ``std_<var>`` columns.

    Weights are the crosswalk fractions (``mode="fractional"``) or 1 for each
    hex's dominant zone (``mode="dominant"``). Hexes missing a variable drop out
    of that variable's statistics together with their weight.
    """
    frame.require_grid(xwalk.grid)
    stats = list(stats)
    bad = [s for s in stats if s not in STATS]
    if bad or not stats:
        raise DataError(f"stats must be a non-empty subset of {STATS}, got {stats}")
    if mode == "dominant":
        xwalk = xwalk.dominant()
    elif mode != "fractional":
        raise DataError(f"unknown aggregation mode {mode!r}")
    variables = list(variables or frame.columns)
    cols = [frame.columns.index(v) if v in frame.columns else None for v in variables]
    if None in cols:
        raise DataError(f"frame lacks variables {[v for v, c in zip(variables, cols) if c is None]}")
    links = xwalk.by_hex()
    groups: dict[tuple[str, str], list[tuple[float, np.ndarray]]] = {}
    for (h, p), row in zip(frame.keys, frame.values):
        for rec in links.get(h, ()):
            groups.setdefault((rec.zone_id, p), []).append((rec.frac_of_hex, row[cols]))
    if not groups:
        raise DataError("frame and crosswalk share no hexes")
    columns = [("zone_id", "text"), ("period", "text")]
    for v in variables:
        columns.extend((f"{s}_{v}", "number") for s in stats)
    rows = []
    for (zone, period) in sorted(groups):
        members = groups[(zone, period)]
        row = [zone, period]
        for j in range(len(variables)):
            pairs = [(w, vals[j]) for w, vals in members if not math.isnan(vals[j])]
            if pairs:
                mean, std = weighted_mean_std([x for _, x in pairs], [w for w, _ in pairs])
            else:
                mean = std = None
            row.extend(mean if s == "mean" else std for s in stats)
        rows.append(row)
    return Table(columns, rows)


def _in_range(period: str, lo, hi) -> bool:
    if period == "-":
        return True
    return (lo is None or period >= lo) and (hi is None or period <= hi)


def locate(key, frame: HexFrame | None = None, zones: Table | None = None, *,
           g: GridSpec | None = None, period_range=(None, None)) -> list[tuple[str, str, dict]]:
    """Rows for a point, HexId, or zone id as ``(id, period, {variable: value})``.

    Points are snapped to their cell first; the result never contains coordinates.
    """
    lo, hi = period_range
    if lo is not None and hi is not None and lo > hi:
        raise DataError(f"empty period range {lo}..{hi}")
    if isinstance(key, str) and not key.startswith("H"):
        if zones is None:
            raise DataError("zone lookups need a zone table")
        idx = zones.index("zone_id")
        pidx = zones.index("period")
        rows = [r for r in zones.rows if str(r[idx]) == key]
        if not rows:
            raise DataError(f"unknown zone {key!r}")
        names = [n for n in zones.names if n not in ("zone_id", "period")]
        out = []
        for r in rows:
            if _in_range(r[pidx], lo, hi):
                vals = {n: r[zones.index(n)] for n in names}
                out.append((key, r[pidx], vals))
        return sorted(out, key=lambda t: t[1])
    if frame is None:
        raise DataError("hex and point lookups need an exposure frame")
    if isinstance(key, HexId):
        hid = key
    elif isinstance(key, str):
        hid = decode(key)
    else:
        if g is None:
            raise DataError("point lookups need a GridSpec")
        if g.fingerprint(frame.grid.res) != frame.grid:
            raise GridMismatchError(frame.grid, g.fingerprint(frame.grid.res))
        hid = point_to_cell(key, frame.grid.res, g)
    h = str(hid)
    return [(h, p, dict(zip(frame.columns, row.tolist())))
            for (kh, p), row in zip(frame.keys, frame.values) if kh == h and _in_range(p, lo, hi)]
