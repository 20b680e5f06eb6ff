"""Planar aperture-7 hierarchical hexagonal grid.

Each resolution is a pointy-top hexagonal lattice. Going one level finer scales
the edge by 1/sqrt(7) and rotates the lattice by ``rotation_sign * atan(sqrt(3)/5)``
about the grid origin; with that rotation every coarse lattice vector is an
exact fine lattice vector, so each coarse center is also a fine center and the
seven cells around it nest inside the parent.

Cells are addressed by axial coordinates ``(q, r)`` at a resolution and written
as ``H<res>:<q>:<r>``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DataError

SQRT3 = math.sqrt(3.0)
SQRT7 = math.sqrt(7.0)
ROTATION_STEP = math.atan(SQRT3 / 5.0)  # ~19.1066 degrees

HEX8_AREA_KM2 = 0.737
# resolution-8 cells of the default grid have exactly HEX8_AREA_KM2
DEFAULT_S0 = math.sqrt(HEX8_AREA_KM2 / (1.5 * SQRT3)) * 7.0**4

_AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))
_HEXID_RE = re.compile(r"^H(\d+):(-?\d+):(-?\d+)$")


class HexId(NamedTuple):
    res: int
    q: int
    r: int

    @property
    def s(self) -> int:
        return -self.q - self.r

    def __str__(self) -> str:
        return f"H{self.res}:{self.q}:{self.r}"


@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float] = (0.0, 0.0)
    base_edge_s0: float = DEFAULT_S0
    rotation_sign: int = -1
    max_resolution: int = 15

    def __post_init__(self):
        if not (self.base_edge_s0 > 0 and math.isfinite(self.base_edge_s0)):
            raise ValueError(f"base_edge_s0 must be positive, got {self.base_edge_s0}")
        if self.rotation_sign not in (1, -1):
            raise ValueError(f"rotation_sign must be +1 or -1, got {self.rotation_sign}")
        if self.max_resolution < 0:
            raise ValueError("max_resolution must be >= 0")
        ox, oy = self.origin
        object.__setattr__(self, "origin", (float(ox), float(oy)))

    def check_res(self, res: int) -> None:
        if not isinstance(res, (int, np.integer)) or not 0 <= res <= self.max_resolution:
            raise DataError(f"resolution {res!r} outside 0..{self.max_resolution}")

    def edge(self, res: int) -> float:
        self.check_res(res)
        return self.base_edge_s0 / SQRT7**res

    def cell_area_exact(self, res: int) -> Fraction:
        """Cell area as an exact rational: the resolution-0 area (one float) over 7**res."""
        self.check_res(res)
        return Fraction(1.5 * SQRT3 * self.base_edge_s0**2) / 7**res

    def cell_area(self, res: int) -> float:
        return float(self.cell_area_exact(res))

    def circumradius(self, res: int) -> float:
        return self.edge(res)

    def inradius(self, res: int) -> float:
        return self.edge(res) * SQRT3 / 2.0

    def fingerprint(self, res: int) -> "GridFingerprint":
        self.check_res(res)
        return GridFingerprint(res, self.base_edge_s0, self.rotation_sign)


@dataclass(frozen=True)
class GridFingerprint:
    """What two hexified datasets must share to be combined."""

    res: int
    s0: float
    rot: int

    def __str__(self) -> str:
        return f"res={self.res} s0={self.s0!r} rot={self.rot:+d}"

    @classmethod
    def parse(cls, text: str) -> "GridFingerprint":
        fields = dict(part.split("=", 1) for part in text.split())
        try:
            return cls(int(fields["res"]), float(fields["s0"]), int(fields["rot"]))
        except (KeyError, ValueError) as exc:
            raise DataError(f"malformed grid fingerprint {text!r}") from exc

    def grid(self, origin=(0.0, 0.0)) -> GridSpec:
        return GridSpec(origin=origin, base_edge_s0=self.s0, rotation_sign=self.rot)


@lru_cache(maxsize=None)
def _frame(s0: float, sign: int, res: int) -> tuple[float, float, float]:
    angle = res * sign * ROTATION_STEP
    return s0 / SQRT7**res, math.cos(angle), math.sin(angle)


def _lattice(g: GridSpec, res: int):
    g.check_res(res)
    return _frame(g.base_edge_s0, g.rotation_sign, int(res))


def _cube_round(fq: float, fr: float) -> tuple[int, int]:
    fs = -fq - fr
    q = math.floor(fq + 0.5)
    r = math.floor(fr + 0.5)
    s = math.floor(fs + 0.5)
    dq, dr, ds = abs(q - fq), abs(r - fr), abs(s - fs)
    if dq >= dr and dq >= ds:
        q = -r - s
    elif dr >= ds:
        r = -q - s
    return int(q), int(r)


def point_to_cell(p, res: int, g: GridSpec) -> HexId:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DataError(f"non-finite point {p!r}")
    s, c, sn = _lattice(g, res)
    dx, dy = x - g.origin[0], y - g.origin[1]
    lx = c * dx + sn * dy
    ly = -sn * dx + c * dy
    fq = (SQRT3 / 3.0 * lx - ly / 3.0) / s
    fr = (2.0 / 3.0 * ly) / s
    q, r = _cube_round(fq, fr)
    return HexId(int(res), q, r)


def points_to_cells(xy: np.ndarray, res: int, g: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised point_to_cell; returns integer arrays ``(q, r)``.

    Performs the same floating-point operations in the same order as the scalar
    version, so both agree bit for bit.
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(xy)):
        raise DataError("non-finite point in input")
    s, c, sn = _lattice(g, res)
    dx = xy[:, 0] - g.origin[0]
    dy = xy[:, 1] - g.origin[1]
    lx = c * dx + sn * dy
    ly = -sn * dx + c * dy
    fq = (SQRT3 / 3.0 * lx - ly / 3.0) / s
    fr = (2.0 / 3.0 * ly) / s
    fs = -fq - fr
    q = np.floor(fq + 0.5)
    r = np.floor(fr + 0.5)
    rs = np.floor(fs + 0.5)
    dq, dr, ds = np.abs(q - fq), np.abs(r - fr), np.abs(rs - fs)
    fix_q = (dq >= dr) & (dq >= ds)
    fix_r = ~fix_q & (dr >= ds)
    q = np.where(fix_q, -r - rs, q)
    r = np.where(fix_r, -q - rs, r)
    return q.astype(np.int64), r.astype(np.int64)


def cell_center(h: HexId, g: GridSpec) -> tuple[float, float]:
    s, c, sn = _lattice(g, h.res)
    lx = SQRT3 * s * (h.q + h.r / 2.0)
    ly = 1.5 * s * h.r
    return (c * lx - sn * ly + g.origin[0], sn * lx + c * ly + g.origin[1])


def cell_centers(q: np.ndarray, r: np.ndarray, res: int, g: GridSpec) -> np.ndarray:
    s, c, sn = _lattice(g, res)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    lx = SQRT3 * s * (q + r / 2.0)
    ly = 1.5 * s * r
    return np.column_stack((c * lx - sn * ly + g.origin[0], sn * lx + c * ly + g.origin[1]))


def cell_boundary(h: HexId, g: GridSpec) -> list[tuple[float, float]]:
    """Six vertices, counterclockwise."""
    s, _, _ = _lattice(g, h.res)
    cx, cy = cell_center(h, g)
    base = math.radians(30.0) + h.res * g.rotation_sign * ROTATION_STEP
    out = []
    for k in range(6):
        theta = base + k * math.pi / 3.0
        out.append((cx + s * math.cos(theta), cy + s * math.sin(theta)))
    return out


def parent(h: HexId, g: GridSpec) -> HexId:
    if h.res < 1:
        raise DataError(f"{h} is at resolution 0 and has no parent")
    return point_to_cell(cell_center(h, g), h.res - 1, g)


def children(h: HexId, g: GridSpec) -> list[HexId]:
    if h.res >= g.max_resolution:
        raise DataError(f"{h} is at the finest resolution {g.max_resolution}")
    mid = point_to_cell(cell_center(h, g), h.res + 1, g)
    cells = [mid] + [HexId(mid.res, mid.q + dq, mid.r + dr) for dq, dr in _AXIAL_DIRECTIONS]
    return sorted(cells, key=lambda c: (c.q, c.r))


def hex_distance(a: HexId, b: HexId) -> int:
    if a.res != b.res:
        raise DataError("hex distance needs cells at the same resolution")
    dq, dr = a.q - b.q, a.r - b.r
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def k_ring(h: HexId, k: int) -> set[HexId]:
    if k < 0:
        raise DataError(f"k must be >= 0, got {k}")
    out = set()
    for dq in range(-k, k + 1):
        for dr in range(max(-k, -dq - k), min(k, -dq + k) + 1):
            out.add(HexId(h.res, h.q + dq, h.r + dr))
    return out


def cells_in_bbox(bbox, res: int, g: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All cells whose centers lie in the closed box ``(xmin, ymin, xmax, ymax)``.

    Returns ``(q, r, centers)`` ordered by (q, r).
    """
    xmin, ymin, xmax, ymax = bbox
    s, c, sn = _lattice(g, res)
    corners = np.array([[xmin, ymin], [xmin, ymax], [xmax, ymin], [xmax, ymax]], dtype=float)
    dx = corners[:, 0] - g.origin[0]
    dy = corners[:, 1] - g.origin[1]
    lx = c * dx + sn * dy
    ly = -sn * dx + c * dy
    fq = (SQRT3 / 3.0 * lx - ly / 3.0) / s
    fr = (2.0 / 3.0 * ly) / s
    q0, q1 = int(math.floor(fq.min())) - 1, int(math.ceil(fq.max())) + 1
    r0, r1 = int(math.floor(fr.min())) - 1, int(math.ceil(fr.max())) + 1
    qq, rr = np.meshgrid(np.arange(q0, q1 + 1), np.arange(r0, r1 + 1), indexing="ij")
    qq, rr = qq.ravel(), rr.ravel()
    centers = cell_centers(qq, rr, res, g)
    keep = (
        (centers[:, 0] >= xmin) & (centers[:, 0] <= xmax)
        & (centers[:, 1] >= ymin) & (centers[:, 1] <= ymax)
    )
    return qq[keep], rr[keep], centers[keep]


def polyfill(poly, res: int, g: GridSpec) -> set[HexId]:
    """Cells whose centers are inside ``poly`` (boundary counts as inside)."""
    from .geomkernel import as_polygon, points_in_polygon

    poly = as_polygon(poly)
    xmin, ymin, xmax, ymax = poly.bbox()
    pad = g.circumradius(res)
    q, r, centers = cells_in_bbox((xmin - pad, ymin - pad, xmax + pad, ymax + pad), res, g)
    inside = points_in_polygon(centers, poly)
    return {HexId(int(res), int(a), int(b)) for a, b in zip(q[inside], r[inside])}


def encode(h: HexId) -> str:
    return str(h)


def decode(text: str, g: GridSpec | None = None) -> HexId:
    m = _HEXID_RE.match(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise DataError(f"malformed hex id {text!r}")
    h = HexId(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    max_res = g.max_resolution if g is not None else 15
    if h.res > max_res:
        raise DataError(f"hex id {text!r} has resolution above {max_res}")
    return h


def hexid_codec(value, g: GridSpec | None = None):
    """Encode a HexId to text, or decode text to a HexId."""
    if isinstance(value, HexId):
        if g is not None:
            g.check_res(value.res)
        return encode(value)
    return decode(value, g)


def as_hexids(values: Iterable) -> list[HexId]:
    return [v if isinstance(v, HexId) else decode(v) for v in values]
