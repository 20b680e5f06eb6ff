"""Planar geometry used by the hex conversions: areas, containment, clipping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SLIVER_AREA = 1e-15  # km^2; clipped pieces below this are treated as empty


def signed_area(ring) -> float:
    n = len(ring)
    acc = 0.0
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return acc / 2.0


def _open_ring(points) -> list[tuple[float, float]]:
    ring = [(float(x), float(y)) for x, y in points]
    if len(ring) > 1 and ring[0] == ring[-1]:
        ring.pop()
    return ring


@dataclass(frozen=True)
class Polygon:
    """Exterior counterclockwise, holes clockwise, rings stored open."""

    exterior: tuple
    holes: tuple = field(default=())

    @classmethod
    def from_rings(cls, exterior, holes=()) -> "Polygon":
        ext = _open_ring(exterior)
        if len(ext) < 3:
            raise DataError(f"polygon ring needs >= 3 vertices, got {len(ext)}")
        if signed_area(ext) < 0:
            ext.reverse()
        fixed = []
        for hole in holes:
            h = _open_ring(hole)
            if len(h) < 3:
                raise DataError(f"hole ring needs >= 3 vertices, got {len(h)}")
            if signed_area(h) > 0:
                h.reverse()
            fixed.append(tuple(h))
        return cls(tuple(ext), tuple(fixed))

    def rings(self):
        yield self.exterior
        yield from self.holes

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.exterior]
        ys = [p[1] for p in self.exterior]
        return min(xs), min(ys), max(xs), max(ys)


def as_polygon(poly) -> Polygon:
    if isinstance(poly, Polygon):
        return poly
    return Polygon.from_rings(poly)


def polygon_area(poly) -> float:
    poly = as_polygon(poly)
    if len(poly.exterior) < 3:
        raise DataError("polygon needs >= 3 vertices")
    area = abs(signed_area(poly.exterior))
    for hole in poly.holes:
        area -= abs(signed_area(hole))
    return area


def _on_segment(px, py, ax, ay, bx, by, eps) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    seg = math.hypot(bx - ax, by - ay)
    if abs(cross) > eps * max(seg, 1.0):
        return False
    return (min(ax, bx) - eps <= px <= max(ax, bx) + eps
            and min(ay, by) - eps <= py <= max(ay, by) + eps)


def _edge_eps(poly: Polygon) -> float:
    xmin, ymin, xmax, ymax = poly.bbox()
    return 1e-12 * max(1.0, abs(xmin), abs(xmax), abs(ymin), abs(ymax))


def point_in_polygon(p, poly) -> bool:
    """Even-odd rule over all rings; points on any edge count as inside."""
    poly = as_polygon(poly)
    px, py = float(p[0]), float(p[1])
    eps = _edge_eps(poly)
    inside = False
    for ring in poly.rings():
        n = len(ring)
        for i in range(n):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % n]
            if _on_segment(px, py, ax, ay, bx, by, eps):
                return True
            if (ay > py) != (by > py):
                xc = ax + (py - ay) * (bx - ax) / (by - ay)
                if px < xc:
                    inside = not inside
    return inside


def points_in_polygon(points: np.ndarray, poly) -> np.ndarray:
    """Vectorised :func:`point_in_polygon`."""
    poly = as_polygon(poly)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    px, py = pts[:, 0], pts[:, 1]
    eps = _edge_eps(poly)
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    for ring in poly.rings():
        arr = np.asarray(ring, dtype=float)
        nxt = np.roll(arr, -1, axis=0)
        for (ax, ay), (bx, by) in zip(arr, nxt):
            cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
            seg = max(math.hypot(bx - ax, by - ay), 1.0)
            on_edge |= (
                (np.abs(cross) <= eps * seg)
                & (px >= min(ax, bx) - eps) & (px <= max(ax, bx) + eps)
                & (py >= min(ay, by) - eps) & (py <= max(ay, by) + eps)
            )
            straddle = (ay > py) != (by > py)
            if not straddle.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= straddle & (px < xc)
    return inside | on_edge


def _clip_ring(ring, clip) -> list[tuple[float, float]]:
    """Sutherland-Hodgman: clip ``ring`` against convex counterclockwise ``clip``."""
    output = list(ring)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        cx0, cy0 = clip[i]
        cx1, cy1 = clip[(i + 1) % n]
        ex, ey = cx1 - cx0, cy1 - cy0
        inp = output
        output = []
        sx, sy = inp[-1]
        s_side = ex * (sy - cy0) - ey * (sx - cx0)
        for vx, vy in inp:
            v_side = ex * (vy - cy0) - ey * (vx - cx0)
            if v_side >= 0:
                if s_side < 0 < v_side:
                    t = s_side / (s_side - v_side)
                    output.append((sx + t * (vx - sx), sy + t * (vy - sy)))
                output.append((vx, vy))
            elif s_side >= 0:
                if s_side > 0:
                    t = s_side / (s_side - v_side)
                    output.append((sx + t * (vx - sx), sy + t * (vy - sy)))
            sx, sy, s_side = vx, vy, v_side
    return output


def clip_to_hex(subject, hexagon) -> Polygon | None:
    """Clip ``subject`` (exterior and every hole) to a convex hexagon.

    Returns ``None`` when nothing of area >= SLIVER_AREA remains. The hole rings
    of the result are clipped independently, which is exact for area purposes.
    """
    subject = as_polygon(subject)
    clip = _open_ring(hexagon)
    if signed_area(clip) < 0:
        clip.reverse()
    ext = _clip_ring(subject.exterior, clip)
    if len(ext) < 3 or abs(signed_area(ext)) < SLIVER_AREA:
        return None
    holes = []
    for hole in subject.holes:
        h = _clip_ring(hole, clip)
        if len(h) >= 3 and abs(signed_area(h)) >= SLIVER_AREA:
            holes.append(tuple(h))
    out = Polygon(tuple(ext), tuple(holes))
    if polygon_area(out) < SLIVER_AREA:
        return None
    return out


def intersection_area(subject, hexagon) -> float:
    clipped = clip_to_hex(subject, hexagon)
    return 0.0 if clipped is None else polygon_area(clipped)


@dataclass
class RasterGrid:
    """Row 0 is the northernmost row; ``values`` has shape (nrows, ncols)."""

    ncols: int
    nrows: int
    xll: float
    yll: float
    cellsize: float
    nodata: float | None
    values: np.ndarray

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise DataError("raster needs at least one row and column")
        if not self.cellsize > 0:
            raise DataError(f"cellsize must be positive, got {self.cellsize}")
        self.values = np.asarray(self.values, dtype=float).reshape(self.nrows, self.ncols)

    @property
    def missing(self) -> np.ndarray:
        miss = np.isnan(self.values)
        if self.nodata is not None:
            miss |= self.values == self.nodata
        return miss

    def bbox(self) -> tuple[float, float, float, float]:
        return (self.xll, self.yll, self.xll + self.ncols * self.cellsize,
                self.yll + self.nrows * self.cellsize)

    def pixel_bounds(self, row: int, col: int) -> tuple[float, float, float, float]:
        if not (0 <= row < self.nrows and 0 <= col < self.ncols):
            raise DataError(f"pixel ({row}, {col}) outside {self.nrows}x{self.ncols} grid")
        x0 = self.xll + col * self.cellsize
        y1 = self.yll + (self.nrows - row) * self.cellsize
        return x0, y1 - self.cellsize, x0 + self.cellsize, y1

    def pixel_centers(self) -> np.ndarray:
        """Centers of all pixels, row-major, shape (nrows*ncols, 2)."""
        cols = np.arange(self.ncols)
        rows = np.arange(self.nrows)
        xs = self.xll + (cols + 0.5) * self.cellsize
        ys = self.yll + (self.nrows - rows - 0.5) * self.cellsize
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack((gx.ravel(), gy.ravel()))


def pixel_polygon(grid: RasterGrid, row: int, col: int) -> Polygon:
    x0, y0, x1, y1 = grid.pixel_bounds(row, col)
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))
