"""Readers and writers for the on-disk formats.

* ESRI ASCII grid rasters
* GeoJSON FeatureCollections restricted to Polygon / MultiPolygon
* delimited tables with a declared schema
* the HexFrame CSV interchange format
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, GridMismatchError
from .frame import HexFrame, Table
from .geomkernel import Polygon, RasterGrid, polygon_area
from .hexgrid import GridFingerprint

NA = "NA"
_GRID_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def format_number(v) -> str:
    """17 significant digits: enough for every double to round-trip."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return NA
    return "%.17g" % float(v)


def parse_number(text: str, where=None) -> float:
    if text == "" or text == NA:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"not a number: {text!r}", where) from None


# ---------------------------------------------------------------- ASCII grid

def read_ascii_grid(path) -> RasterGrid:
    header: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lineno = 0
    while lineno < len(lines) and len(header) < len(_GRID_KEYS):
        parts = lines[lineno].split()
        if not parts:
            lineno += 1
            continue
        key = parts[0].lower()
        if key not in _GRID_KEYS:
            break
        if len(parts) != 2:
            raise FormatError(f"header line needs key and value: {lines[lineno]!r}", f"line {lineno + 1}")
        header[key] = parts[1]
        lineno += 1
    missing = [k for k in _GRID_KEYS if k not in header]
    if missing:
        raise FormatError(f"ASCII grid header missing {', '.join(missing)}", str(path))
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        xll, yll = float(header["xllcorner"]), float(header["yllcorner"])
        cellsize, nodata = float(header["cellsize"]), float(header["nodata_value"])
    except ValueError as exc:
        raise FormatError(f"bad header value: {exc}", str(path)) from None
    rows = []
    for i in range(lineno, len(lines)):
        parts = lines[i].split()
        if not parts:
            continue
        if len(parts) != ncols:
            raise FormatError(f"expected {ncols} values, got {len(parts)}", f"line {i + 1}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError:
            bad = next(x for x in parts if not _is_float(x))
            raise FormatError(f"non-numeric cell {bad!r}", f"line {i + 1}") from None
    if len(rows) != nrows:
        raise FormatError(f"expected {nrows} data rows, got {len(rows)}", str(path))
    return RasterGrid(ncols, nrows, xll, yll, cellsize, nodata, np.array(rows, dtype=float))


def _is_float(x: str) -> bool:
    try:
        float(x)
        return True
    except ValueError:
        return False


def write_ascii_grid(grid: RasterGrid, path) -> None:
    nodata = grid.nodata if grid.nodata is not None else -9999.0
    vals = np.where(grid.missing, nodata, grid.values)
    out = io.StringIO()
    out.write(f"ncols {grid.ncols}\nnrows {grid.nrows}\n")
    out.write(f"xllcorner {format_number(grid.xll)}\nyllcorner {format_number(grid.yll)}\n")
    out.write(f"cellsize {format_number(grid.cellsize)}\nNODATA_value {format_number(nodata)}\n")
    for row in vals:
        out.write(" ".join(format_number(v) for v in row) + "\n")
    Path(path).write_text(out.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------- GeoJSON

@dataclass
class Feature:
    parts: list[Polygon]
    properties: dict = field(default_factory=dict)

    @property
    def area(self) -> float:
        return sum(polygon_area(p) for p in self.parts)

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = [p.bbox() for p in self.parts]
        return (min(b[0] for b in boxes), min(b[1] for b in boxes),
                max(b[2] for b in boxes), max(b[3] for b in boxes))


FeatureSet = list  # list[Feature]


def _polygon_from_coords(coords, where) -> Polygon:
    if not isinstance(coords, list) or not coords:
        raise FormatError("polygon has no rings", where)
    try:
        return Polygon.from_rings(coords[0], coords[1:])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad polygon coordinates: {exc}", where) from None


def parse_geojson_polygons(doc) -> list[Feature]:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("top-level object must be a FeatureCollection")
    features = []
    for i, feat in enumerate(doc.get("features", [])):
        where = f"feature {i}"
        geom = (feat or {}).get("geometry") or {}
        kind = geom.get("type")
        if kind == "Polygon":
            parts = [_polygon_from_coords(geom.get("coordinates"), where)]
        elif kind == "MultiPolygon":
            parts = [_polygon_from_coords(c, where) for c in geom.get("coordinates") or []]
            if not parts:
                raise FormatError("empty MultiPolygon", where)
        else:
            raise FormatError(f"unsupported geometry type {kind!r}", where)
        props = {}
        for key, value in (feat.get("properties") or {}).items():
            if value is not None and not isinstance(value, (str, int, float)):
                raise FormatError(f"property {key!r} must be text or number", where)
            props[key] = float(value) if isinstance(value, (int, float)) and not isinstance(value, bool) else value
        features.append(Feature(parts, props))
    return features


def read_geojson_polygons(path) -> list[Feature]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc.msg}", f"line {exc.lineno}") from None
    return parse_geojson_polygons(doc)


def write_geojson_polygons(features, path) -> None:
    out = []
    for feat in features:
        coords = [[[list(pt) for pt in ring] + [list(ring[0])] for ring in part.rings()]
                  for part in feat.parts]
        geom = ({"type": "Polygon", "coordinates": coords[0]} if len(coords) == 1
                else {"type": "MultiPolygon", "coordinates": coords})
        out.append({"type": "Feature", "geometry": geom, "properties": feat.properties})
    Path(path).write_text(json.dumps({"type": "FeatureCollection", "features": out}),
                          encoding="utf-8")


# ---------------------------------------------------------------- CSV tables

def read_csv(path, schema: dict[str, str] | None = None) -> Table:
    """Read a comma-separated file; ``schema`` maps column name to text/number.

    Columns absent from ``schema`` are read as text. Empty cells and ``NA`` are missing.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read(), schema)


def parse_csv(text: str, schema: dict[str, str] | None = None) -> Table:
    schema = schema or {}
    reader = csv.reader(io.StringIO(text), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty file", "line 1") from None
    except csv.Error as exc:
        raise FormatError(str(exc), "line 1") from None
    unknown = set(schema) - set(header)
    if unknown:
        raise DataError(f"schema names columns not in header: {sorted(unknown)}")
    columns = [(name, schema.get(name, "text")) for name in header]
    rows = []
    try:
        for raw in reader:
            where = f"line {reader.line_num}"
            if not raw and len(columns) == 1:
                raw = [""]
            if len(raw) != len(columns):
                raise FormatError(f"ragged row: {len(raw)} fields, expected {len(columns)}", where)
            row = []
            for cell, (name, kind) in zip(raw, columns):
                if cell == "" or cell == NA:
                    row.append(None)
                elif kind == "number":
                    try:
                        row.append(float(cell))
                    except ValueError:
                        raise FormatError(f"non-numeric value {cell!r} in column {name!r}", where) from None
                else:
                    row.append(cell)
            rows.append(row)
    except csv.Error as exc:
        raise FormatError(str(exc), f"line {reader.line_num}") from None
    return Table(columns, rows)


def write_csv(table: Table, path) -> None:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.names)
    for row in table.rows:
        writer.writerow([
            NA if v is None else (format_number(v) if kind == "number" else v)
            for v, (_, kind) in zip(row, table.columns)
        ])
    Path(path).write_text(out.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------- HexFrame

def hexframe_to_text(frame: HexFrame) -> str:
    out = io.StringIO()
    out.write(f"#grid {frame.grid}\n")
    out.write(",".join(["hex_id", "period", *frame.columns]) + "\n")
    for (h, p), row in zip(frame.keys, frame.values):
        out.write(",".join([h, p, *(format_number(v) for v in row)]) + "\n")
    return out.getvalue()


def write_hexframe(frame: HexFrame, path) -> None:
    Path(path).write_text(hexframe_to_text(frame), encoding="utf-8")


def read_header_comments(lines: list[str]) -> tuple[dict[str, str], int]:
    """Parse leading ``#key rest`` lines; returns mapping and index of first data line."""
    meta = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, rest = lines[i][1:].partition(" ")
        meta[key] = rest.strip()
        i += 1
    return meta, i


def hexframe_from_text(text: str, expected: GridFingerprint | None = None, source="<text>") -> HexFrame:
    lines = text.splitlines()
    meta, start = read_header_comments(lines)
    if "grid" not in meta:
        raise FormatError("missing '#grid res=.. s0=.. rot=..' header", source)
    grid = GridFingerprint.parse(meta["grid"])
    if expected is not None and grid != expected:
        raise GridMismatchError(expected, grid)
    if start >= len(lines):
        raise FormatError("missing column header", source)
    header = lines[start].split(",")
    if header[:2] != ["hex_id", "period"]:
        raise FormatError("first columns must be hex_id,period", f"line {start + 1}")
    columns = header[2:]
    keys, values = [], []
    for i in range(start + 1, len(lines)):
        if not lines[i]:
            continue
        parts = lines[i].split(",")
        where = f"line {i + 1}"
        if len(parts) != len(header):
            raise FormatError(f"ragged row: {len(parts)} fields, expected {len(header)}", where)
        keys.append((parts[0], parts[1]))
        values.append([parse_number(x, where) for x in parts[2:]])
    return HexFrame(grid, keys, columns, np.array(values, dtype=float).reshape(len(keys), len(columns)))


def read_hexframe(path, expected: GridFingerprint | None = None) -> HexFrame:
    with open(path, encoding="utf-8") as fh:
        return hexframe_from_text(fh.read(), expected, source=str(path))


def hexframe_io(obj, path=None, expected: GridFingerprint | None = None):
    """Write a frame to ``path`` (returns the path) or read a frame from a path."""
    if isinstance(obj, HexFrame):
        if path is None:
            raise ValueError("writing a HexFrame needs a destination path")
        write_hexframe(obj, path)
        return path
    return read_hexframe(obj, expected)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
