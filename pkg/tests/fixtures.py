"""Synthetic inputs shared by the module tests and the acceptance suite."""

from __future__ import annotations

import math

import numpy as np

from hexposome.geomkernel import Polygon, RasterGrid
from hexposome.ingest import Feature

BLOB_SEED = 20240611


def synthetic_raster(field: str = "smooth", nodata: bool = False) -> RasterGrid:
    """100 x 100 pixels of 0.25 km with the lower-left corner away from chunk lines."""
    n = 100
    rows, cols = np.mgrid[0:n, 0:n]
    if field == "constant":
        v = np.full((n, n), 7.25)
    else:
        v = 20.0 + 6.0 * np.sin(cols / 9.0) + 4.0 * np.cos(rows / 13.0) + 0.05 * rows
    if nodata:
        v = v.copy()
        v[40:43, 10:60] = -9999.0
    return RasterGrid(n, n, 3.3, -7.1, 0.25, -9999.0, v.astype(float).ravel())


def vector_fixture(seed: int = 7) -> list[Feature]:
    """50 jittered quadrilaterals on a 10 x 5 layout; a few with holes, one multipart."""
    rng = np.random.default_rng(seed)
    feats = []
    for k in range(50):
        i, j = divmod(k, 5)
        x0, y0 = 1.2 + 2.1 * i, -4.3 + 2.3 * j
        jit = rng.uniform(-0.35, 0.35, size=(4, 2))
        ring = [(x0 + jit[0, 0], y0 + jit[0, 1]), (x0 + 2.4 + jit[1, 0], y0 + jit[1, 1]),
                (x0 + 2.4 + jit[2, 0], y0 + 2.6 + jit[2, 1]), (x0 + jit[3, 0], y0 + 2.6 + jit[3, 1])]
        holes = []
        if k % 7 == 3:
            cx, cy = x0 + 1.2, y0 + 1.3
            holes.append([(cx - 0.3, cy - 0.3), (cx + 0.3, cy - 0.3), (cx + 0.3, cy + 0.3), (cx - 0.3, cy + 0.3)])
        parts = [Polygon.from_rings(ring, holes)]
        if k == 11:
            parts.append(Polygon.from_rings([(30.0, 30.0), (31.5, 30.0), (31.5, 31.0), (30.0, 31.0)]))
        value = float(round(rng.uniform(0, 50), 3))
        feats.append(Feature(parts, {"v": value, "cat": float(k % 4), "zone_id": f"Z{k:02d}"}))
    return feats


def two_blobs(seed: int = BLOB_SEED, n: int = 100, sigma: float = 0.1):
    rng = np.random.default_rng(seed)
    a = rng.normal([0.0, 0.0], sigma, size=(n, 2))
    b = rng.normal([10.0, 0.0], sigma, size=(n, 2))
    return np.vstack([a, b]), np.repeat([0, 1], n)


def random_star_polygon(rng, center, radius, k=7):
    angles = np.sort(rng.uniform(0, 2 * math.pi, size=k))
    radii = radius * rng.uniform(0.6, 1.0, size=k)
    return [(center[0] + r * math.cos(a), center[1] + r * math.sin(a)) for a, r in zip(angles, radii)]
