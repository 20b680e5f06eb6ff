"""Source-to-hex conversion: centroid aggregation, polyfill assignment, and
area-weighted overlay through reusable overlay maps, plus chunked execution.

All sums go through :func:`math.fsum`, which is correctly rounded and so does
not depend on the order fragments arrive in; together with canonical record
ordering this makes chunked and unchunked runs agree bit for bit.
"""

from __future__ import annotations

import hashlib
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, FormatError, GridMismatchError
from .frame import STATIC_PERIOD, HexFrame, Table
from .geomkernel import Polygon, RasterGrid, intersection_area, pixel_polygon, polygon_area
from .hexgrid import (GridFingerprint, GridSpec, HexId, cell_boundary, cell_centers,
                      cells_in_bbox, points_to_cells, polyfill)
from .ingest import Feature, format_number, parse_number, read_header_comments

log = logging.getLogger(__name__)

AGGREGATIONS = ("mean", "sum", "count", "min", "max")
SEMANTICS = ("intensive", "extensive", "categorical")
STRATEGIES = ("centroid", "polyfill", "overlay")
MIN_COVERAGE = 1e-9


def worker_count() -> int:
    """Thread cap from HEXPOSOME_THREADS (0 or unset = automatic)."""
    raw = os.environ.get("HEXPOSOME_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise DataError(f"HEXPOSOME_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise DataError("HEXPOSOME_THREADS must be >= 0")
    return n or min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------- sources

class Sources:
    """Indexable polygon sources: raster pixels (row-major) or vector features."""

    def __init__(self, source):
        if isinstance(source, RasterGrid):
            self.raster = source
            self.features = None
            n = source.nrows * source.ncols
            rows, cols = np.divmod(np.arange(n), source.ncols)
            x0 = source.xll + cols * source.cellsize
            y1 = source.yll + (source.nrows - rows) * source.cellsize
            self.bboxes = np.column_stack((x0, y1 - source.cellsize, x0 + source.cellsize, y1))
            self.areas = np.full(n, source.cellsize**2)
            self.diameter = source.cellsize * math.sqrt(2.0)
        else:
            self.raster = None
            self.features = list(source)
            if not self.features:
                raise DataError("no source features")
            self.bboxes = np.array([f.bbox() for f in self.features], dtype=float)
            self.areas = np.array([f.area for f in self.features], dtype=float)
            diag = np.hypot(self.bboxes[:, 2] - self.bboxes[:, 0], self.bboxes[:, 3] - self.bboxes[:, 1])
            self.diameter = float(diag.max())

    def __len__(self) -> int:
        return len(self.bboxes)

    def parts(self, i: int) -> list[Polygon]:
        if self.raster is not None:
            row, col = divmod(int(i), self.raster.ncols)
            return [pixel_polygon(self.raster, row, col)]
        return self.features[i].parts

    def extent(self) -> tuple[float, float, float, float]:
        b = self.bboxes
        return float(b[:, 0].min()), float(b[:, 1].min()), float(b[:, 2].max()), float(b[:, 3].max())

    def intersecting(self, box) -> np.ndarray:
        xmin, ymin, xmax, ymax = box
        b = self.bboxes
        hit = (b[:, 0] <= xmax) & (b[:, 2] >= xmin) & (b[:, 1] <= ymax) & (b[:, 3] >= ymin)
        return np.flatnonzero(hit)

    def checksum(self) -> str:
        h = hashlib.sha256()
        if self.raster is not None:
            r = self.raster
            h.update(f"raster {r.ncols} {r.nrows} {r.xll!r} {r.yll!r} {r.cellsize!r}".encode())
        else:
            for f in self.features:
                h.update(b"F")
                for part in f.parts:
                    h.update(b"P")
                    for ring in part.rings():
                        h.update(b"R")
                        h.update(",".join(f"{x!r} {y!r}" for x, y in ring).encode())
        return h.hexdigest()


def _as_sources(source) -> Sources:
    return source if isinstance(source, Sources) else Sources(source)


# ---------------------------------------------------------------- centroid

def _points(source, value_field=None, x_field="x", y_field="y"):
    """(xy, values) for a raster (pixel centers) or a point Table / array."""
    if isinstance(source, RasterGrid):
        xy = source.pixel_centers()
        vals = source.values.ravel().astype(float)
        vals = np.where(source.missing.ravel(), np.nan, vals)
        return xy, vals
    if isinstance(source, Table):
        if value_field is None:
            raise DataError("point tables need a value field")
        xs, ys, vs = source.column(x_field), source.column(y_field), source.column(value_field)
        if any(x is None or y is None for x, y in zip(xs, ys)):
            raise DataError("point table has missing coordinates")
        vals = np.array([np.nan if v is None else v for v in vs], dtype=float)
        return np.column_stack((np.asarray(xs, float), np.asarray(ys, float))), vals
    arr = np.asarray(source, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise DataError("point arrays must have shape (n, 3): x, y, value")
    return arr[:, :2], arr[:, 2]


def _reduce(values: list[float], agg: str) -> float:
    if agg == "mean":
        return math.fsum(values) / len(values)
    if agg == "sum":
        return math.fsum(values)
    if agg == "count":
        return float(len(values))
    if agg == "min":
        return min(values)
    return max(values)


def _centroid_groups(xy, vals, res, g):
    keep = ~np.isnan(vals)
    xy, vals = xy[keep], vals[keep]
    if len(vals) == 0:
        return {}
    q, r = points_to_cells(xy, res, g)
    order = np.lexsort((np.arange(len(q)), r, q))
    q, r, vals = q[order], r[order], vals[order]
    bounds = np.flatnonzero((np.diff(q) != 0) | (np.diff(r) != 0)) + 1
    groups = {}
    for a, b in zip(np.r_[0, bounds], np.r_[bounds, len(q)]):
        groups[(int(q[a]), int(r[a]))] = vals[a:b].tolist()
    return groups


def centroid_aggregate(source, res: int, g: GridSpec, agg: str = "mean", *, name="value",
                       period=STATIC_PERIOD, value_field=None, x_field="x", y_field="y") -> HexFrame:
    if agg not in AGGREGATIONS:
        raise DataError(f"unknown aggregation {agg!r}; choose from {AGGREGATIONS}")
    xy, vals = _points(source, value_field, x_field, y_field)
    if len(vals) == 0:
        raise DataError("empty source")
    groups = _centroid_groups(xy, vals, res, g)
    records = [(str(HexId(res, q, r)), period, {name: _reduce(v, agg)})
               for (q, r), v in groups.items()]
    return HexFrame.from_records(g.fingerprint(res), records, [name])


# ---------------------------------------------------------------- polyfill

def _feature_value(feat: Feature, value_field: str, index: int):
    if value_field not in feat.properties:
        raise DataError(f"feature {index} has no field {value_field!r}")
    v = feat.properties[value_field]
    if v is None:
        return None
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise DataError(f"feature {index}: field {value_field!r} is not numeric ({v!r})") from None
    return float(v)


def _polyfill_cells(features, value_field, res, g, indices=None, keep=None) -> dict:
    assigned: dict[tuple[int, int], float] = {}
    for i in (range(len(features)) if indices is None else indices):
        feat = features[i]
        v = _feature_value(feat, value_field, i)
        if v is None:
            continue
        for part in feat.parts:
            for h in polyfill(part, res, g):
                if keep is None or keep(h):
                    assigned[(h.q, h.r)] = v  # later features win
    return assigned


def polyfill_assign(features, value_field: str, res: int, g: GridSpec, *, name=None,
                    period=STATIC_PERIOD) -> HexFrame:
    """Give every cell whose center is inside a feature that feature's value.

    Where features overlap, the last one in input order wins.
    """
    features = list(features)
    name = name or value_field
    assigned = _polyfill_cells(features, value_field, res, g)
    records = [(str(HexId(res, q, r)), period, {name: v}) for (q, r), v in assigned.items()]
    return HexFrame.from_records(g.fingerprint(res), records, [name])


# ---------------------------------------------------------------- overlay map

@dataclass(frozen=True)
class OverlayRecord:
    source_index: int
    hex_id: str
    fragment_area: float
    frac_of_source: float
    frac_of_hex: float


class OverlayMap:
    """Immutable (source, hex, fragment) table shared by every variable on one geometry."""

    COLUMNS = ("source_index", "hex_id", "fragment_area", "frac_of_source", "frac_of_hex")

    def __init__(self, grid: GridFingerprint, source_checksum: str, records: Sequence[OverlayRecord]):
        self.grid = grid
        self.source_checksum = source_checksum
        self.records = tuple(sorted(records, key=lambda rec: (rec.source_index, rec.hex_id)))

    def __eq__(self, other):
        if not isinstance(other, OverlayMap):
            return NotImplemented
        return (self.grid, self.source_checksum, self.records) == (
            other.grid, other.source_checksum, other.records)

    def __len__(self) -> int:
        return len(self.records)

    def by_hex(self) -> dict[str, list[OverlayRecord]]:
        out: dict[str, list[OverlayRecord]] = {}
        for rec in self.records:
            out.setdefault(rec.hex_id, []).append(rec)
        return out

    def subset(self, hex_ids) -> "OverlayMap":
        keep = set(hex_ids)
        return OverlayMap(self.grid, self.source_checksum, [r for r in self.records if r.hex_id in keep])

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"#grid {self.grid}\n#source_checksum {self.source_checksum}\n")
        out.write(",".join(self.COLUMNS) + "\n")
        for rec in self.records:
            out.write(f"{rec.source_index},{rec.hex_id},{format_number(rec.fragment_area)},"
                      f"{format_number(rec.frac_of_source)},{format_number(rec.frac_of_hex)}\n")
        return out.getvalue()

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str, expected: GridFingerprint | None = None, source="<text>") -> "OverlayMap":
        lines = text.splitlines()
        meta, start = read_header_comments(lines)
        if "grid" not in meta or "source_checksum" not in meta:
            raise FormatError("overlay map needs #grid and #source_checksum headers", source)
        grid = GridFingerprint.parse(meta["grid"])
        if expected is not None and grid != expected:
            raise GridMismatchError(expected, grid)
        if start >= len(lines) or tuple(lines[start].split(",")) != cls.COLUMNS:
            raise FormatError(f"expected columns {','.join(cls.COLUMNS)}", f"line {start + 1}")
        records = []
        for i in range(start + 1, len(lines)):
            if not lines[i]:
                continue
            parts = lines[i].split(",")
            where = f"line {i + 1}"
            if len(parts) != 5:
                raise FormatError("expected 5 fields", where)
            try:
                idx = int(parts[0])
            except ValueError:
                raise FormatError(f"bad source_index {parts[0]!r}", where) from None
            records.append(OverlayRecord(idx, parts[1], *(parse_number(x, where) for x in parts[2:])))
        return cls(grid, meta["source_checksum"], records)

    @classmethod
    def read(cls, path, expected: GridFingerprint | None = None) -> "OverlayMap":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), expected, str(path))


def _overlay_records(src: Sources, indices, res: int, g: GridSpec, keep=None) -> list[OverlayRecord]:
    cell_area = g.cell_area(res)
    radius = g.circumradius(res)
    boundaries: dict[tuple[int, int], list] = {}
    out = []
    for i in indices:
        i = int(i)
        xmin, ymin, xmax, ymax = src.bboxes[i]
        q, r, _ = cells_in_bbox((xmin - radius, ymin - radius, xmax + radius, ymax + radius), res, g)
        parts = src.parts(i)
        for qq, rr in zip(q.tolist(), r.tolist()):
            if keep is not None and not keep(qq, rr):
                continue
            hexagon = boundaries.get((qq, rr))
            if hexagon is None:
                hexagon = boundaries[(qq, rr)] = cell_boundary(HexId(res, qq, rr), g)
            area = math.fsum(intersection_area(p, hexagon) for p in parts)
            if area <= 0.0:
                continue
            out.append(OverlayRecord(i, str(HexId(res, qq, rr)), area,
                                     min(1.0, area / src.areas[i]), min(1.0, area / cell_area)))
    return out


def build_overlay_map(sources, res: int, g: GridSpec) -> OverlayMap:
    src = _as_sources(sources)
    records = _overlay_records(src, range(len(src)), res, g)
    return OverlayMap(g.fingerprint(res), src.checksum(), records)


def _source_values(values, n: int | None, sem: str) -> list:
    if isinstance(values, RasterGrid):
        arr = np.where(values.missing, np.nan, values.values).ravel()
        values = arr.tolist()
    values = list(values)
    if n is not None and len(values) < n:
        raise DataError(f"{len(values)} values for sources up to index {n - 1}")
    out = []
    for v in values:
        if v is None or (isinstance(v, float) and math.isnan(v)):
            out.append(None)
        elif isinstance(v, str) or isinstance(v, bool):
            raise DataError(f"{sem} semantics needs numeric values, got {v!r}")
        else:
            out.append(float(v))
    return out


def apply_overlay(omap: OverlayMap, values, sem: str = "intensive", *, name="value",
                  period=STATIC_PERIOD, min_coverage: float = MIN_COVERAGE) -> HexFrame:
    """Aggregate per-source values onto hexes through ``omap``.

    intensive: area-weighted mean over non-missing sources.
    extensive: sum of value * fraction of the source inside the hex.
    categorical: label with the largest total fragment area; ties go to the
    label whose canonical text sorts first.
    Adds ``<name>_coverage``: the fraction of the hex covered by non-missing sources.
    """
    if sem not in SEMANTICS:
        raise DataError(f"unknown semantics {sem!r}; choose from {SEMANTICS}")
    n = max((rec.source_index for rec in omap.records), default=-1) + 1
    vals = _source_values(values, n, sem)
    cov_name = f"{name}_coverage"
    records = []
    for hex_id, recs in omap.by_hex().items():
        used = [rec for rec in recs if vals[rec.source_index] is not None]
        coverage = math.fsum(rec.frac_of_hex for rec in used)
        if not used or coverage < min_coverage:
            continue
        if sem == "intensive":
            num = math.fsum(rec.fragment_area * vals[rec.source_index] for rec in used)
            value = num / math.fsum(rec.fragment_area for rec in used)
        elif sem == "extensive":
            value = math.fsum(vals[rec.source_index] * rec.frac_of_source for rec in used)
        else:
            totals: dict[float, list[float]] = {}
            for rec in used:
                totals.setdefault(vals[rec.source_index], []).append(rec.fragment_area)
            value = min(totals, key=lambda lab: (-math.fsum(totals[lab]), format_number(lab)))
        records.append((hex_id, period, {name: value, cov_name: coverage}))
    return HexFrame.from_records(omap.grid, records, [name, cov_name])


# ---------------------------------------------------------------- chunking

@dataclass(frozen=True)
class ChunkSpec:
    chunk_width: float
    halo: float | None = None  # None = the minimum safe halo

    def __post_init__(self):
        if not self.chunk_width > 0:
            raise DataError(f"chunk_width must be positive, got {self.chunk_width}")
        if self.halo is not None and self.halo < 0:
            raise DataError(f"halo must be >= 0, got {self.halo}")


def required_halo(source, res: int, g: GridSpec, strategy: str) -> float:
    """Hex circumradius plus the largest source cell diameter (0 for points)."""
    if strategy == "centroid" and not isinstance(source, (RasterGrid, Sources)):
        diameter = 0.0
    elif isinstance(source, RasterGrid):
        diameter = source.cellsize * math.sqrt(2.0)
    else:
        diameter = _as_sources(source).diameter
    return g.circumradius(res) + diameter


def _chunk_hexes(box, res, g, width, ci, cj):
    """Cells whose centers fall in chunk (ci, cj); intervals are half-open."""
    x0, y0, x1, y1 = box
    pad = 1e-9 * width
    q, r, centers = cells_in_bbox((x0 - pad, y0 - pad, x1 + pad, y1 + pad), res, g)
    own = (np.floor(centers[:, 0] / width) == ci) & (np.floor(centers[:, 1] / width) == cj)
    return q[own], r[own]


def chunked_convert(source, res: int, g: GridSpec, strategy: str, spec: ChunkSpec, *,
                    semantics: str = "intensive", values=None, value_field=None, agg="mean",
                    name="value", period=STATIC_PERIOD, workers: int | None = None,
                    min_coverage: float = MIN_COVERAGE) -> HexFrame:
    """Run a conversion chunk by chunk over the output hexes.

    Output hexes are split into square chunks of ``chunk_width`` by cell
    center (half-open intervals anchored at multiples of the width), and each
    chunk sees only the source data within ``halo`` of its box. The result
    equals the unchunked conversion exactly.

    ``values`` supplies per-source numbers for the overlay strategy on vector
    sources (defaults to ``value_field`` of each feature); rasters carry their
    own values.
    """
    if strategy not in STRATEGIES:
        raise DataError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    need = required_halo(source, res, g, strategy)
    halo = need if spec.halo is None else spec.halo
    if halo < need:
        raise DataError(f"halo {halo} km below the required minimum {need} km "
                        f"(hex circumradius + source cell diameter)")
    width = spec.chunk_width
    fp = g.fingerprint(res)
    radius = g.circumradius(res)

    if strategy == "centroid":
        xy, pvals = _points(source, value_field)
        if len(pvals) == 0:
            raise DataError("empty source")
        if agg not in AGGREGATIONS:
            raise DataError(f"unknown aggregation {agg!r}; choose from {AGGREGATIONS}")
        extent = (xy[:, 0].min(), xy[:, 1].min(), xy[:, 0].max(), xy[:, 1].max())
        columns = [name]
    else:
        src = _as_sources(source)
        extent = src.extent()
        if strategy == "polyfill":
            if src.features is None:
                raise DataError("polyfill needs vector features")
            if value_field is None:
                raise DataError("polyfill needs a value field")
            columns = [value_field if name == "value" else name]
        else:
            if values is None:
                if src.raster is not None:
                    values = src.raster
                elif value_field is not None:
                    values = [_feature_value(f, value_field, i) for i, f in enumerate(src.features)]
                else:
                    raise DataError("overlay needs values or a value field")
            vals = _source_values(values, len(src), semantics)
            columns = [name, f"{name}_coverage"]

    xmin, ymin, xmax, ymax = extent
    ci0, ci1 = math.floor((xmin - radius) / width), math.floor((xmax + radius) / width)
    cj0, cj1 = math.floor((ymin - radius) / width), math.floor((ymax + radius) / width)
    chunks = [(ci, cj) for cj in range(cj0, cj1 + 1) for ci in range(ci0, ci1 + 1)]
    log.info("chunked %s: %d chunks of %.3f km, halo %.3f km", strategy, len(chunks), width, halo)

    def run(chunk):
        ci, cj = chunk
        box = (ci * width, cj * width, (ci + 1) * width, (cj + 1) * width)
        q, r = _chunk_hexes(box, res, g, width, ci, cj)
        if len(q) == 0:
            return []
        wanted = set(zip(q.tolist(), r.tolist()))
        hbox = (box[0] - halo, box[1] - halo, box[2] + halo, box[3] + halo)
        if strategy == "centroid":
            sel = ((xy[:, 0] >= hbox[0]) & (xy[:, 0] <= hbox[2])
                   & (xy[:, 1] >= hbox[1]) & (xy[:, 1] <= hbox[3]))
            groups = _centroid_groups(xy[sel], pvals[sel], res, g)
            return [(str(HexId(res, qq, rr)), period, {name: _reduce(v, agg)})
                    for (qq, rr), v in groups.items() if (qq, rr) in wanted]
        idx = src.intersecting(hbox)
        if strategy == "polyfill":
            assigned = _polyfill_cells(src.features, value_field, res, g, indices=idx.tolist(),
                                       keep=lambda h: (h.q, h.r) in wanted)
            return [(str(HexId(res, qq, rr)), period, {columns[0]: v})
                    for (qq, rr), v in assigned.items()]
        recs = _overlay_records(src, idx, res, g, keep=lambda qq, rr: (qq, rr) in wanted)
        part = apply_overlay(OverlayMap(fp, "", recs), vals, semantics, name=name,
                             period=period, min_coverage=min_coverage)
        return [(h, p, dict(zip(part.columns, row))) for (h, p), row in zip(part.keys, part.values)]

    n_workers = workers if workers is not None else worker_count()
    if n_workers <= 1 or len(chunks) <= 1:
        results = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, chunks))
    records = [rec for chunk_records in results for rec in chunk_records]
    return HexFrame.from_records(fp, records, columns)


def convert(source, res: int, g: GridSpec, strategy: str, *, semantics="intensive", values=None,
            value_field=None, agg="mean", name="value", period=STATIC_PERIOD,
            min_coverage: float = MIN_COVERAGE) -> HexFrame:
    """Unchunked conversion with the same options as :func:`chunked_convert`."""
    if strategy == "centroid":
        return centroid_aggregate(source, res, g, agg, name=name, period=period, value_field=value_field)
    if strategy == "polyfill":
        if isinstance(source, RasterGrid):
            raise DataError("polyfill needs vector features")
        return polyfill_assign(source, value_field, res, g,
                               name=None if name == "value" else name, period=period)
    if strategy != "overlay":
        raise DataError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    src = _as_sources(source)
    if values is None:
        if src.raster is not None:
            values = src.raster
        elif value_field is not None:
            values = [_feature_value(f, value_field, i) for i, f in enumerate(src.features)]
        else:
            raise DataError("overlay needs values or a value field")
    omap = build_overlay_map(src, res, g)
    return apply_overlay(omap, values, semantics, name=name, period=period, min_coverage=min_coverage)
