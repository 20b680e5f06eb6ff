import math

import numpy as np
import pytest

from hexposome.convert import (ChunkSpec, OverlayMap, Sources, apply_overlay, build_overlay_map,
                               centroid_aggregate, chunked_convert, convert, polyfill_assign,
                               required_halo, worker_count)
from hexposome.errors import DataError, GridMismatchError
from hexposome.frame import Table
from hexposome.geomkernel import Polygon, RasterGrid
from hexposome.hexgrid import HexId, cell_boundary, cell_center, children, polyfill
from hexposome.ingest import Feature, hexframe_to_text

from fixtures import synthetic_raster, vector_fixture
from oracles import mc_intersection_area


def rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def feat(ring, **props):
    return Feature([Polygon.from_rings(ring)], {k: float(v) for k, v in props.items()})


# ------------------------------------------------------------- centroid

def test_centroid_mean_and_count(grid):
    c = cell_center(HexId(8, 3, 3), grid)
    pts = np.array([[c[0], c[1], 10.0], [c[0] + 0.01, c[1], 20.0]])
    assert centroid_aggregate(pts, 8, grid, "mean").column("value").tolist() == [15.0]
    pts = np.array([[c[0] + 0.001 * k, c[1], 1.0] for k in range(5)])
    assert centroid_aggregate(pts, 8, grid, "count").column("value").tolist() == [5.0]
    assert centroid_aggregate(pts, 8, grid, "sum").column("value").tolist() == [5.0]


def test_centroid_point_table(grid):
    t = Table([("x", "number"), ("y", "number"), ("pm", "number")],
              [[0.0, 0.0, 4.0], [0.01, 0.0, None], [5.0, 5.0, 1.0]])
    f = centroid_aggregate(t, 8, grid, "mean", value_field="pm", name="pm")
    assert sorted(f.column("pm").tolist()) == [1.0, 4.0]
    with pytest.raises(DataError):
        centroid_aggregate(t, 8, grid, "median")


def test_centroid_constant_raster(grid):
    r = synthetic_raster("constant")
    f = centroid_aggregate(r, 8, grid)
    assert np.all(f.column("value") == 7.25)


# ------------------------------------------------------------- polyfill

def test_polyfill_assign_counts(grid):
    base = HexId(7, 2, -1)
    ring = cell_boundary(base, grid)
    f = polyfill_assign([feat(ring, v=3)], "v", 8, grid)
    assert len(f) == len(polyfill(ring, 8, grid))
    assert set(f.column("v").tolist()) == {3.0}


def test_polyfill_twelve_centres(grid):
    cells = [HexId(8, q, r) for q in range(4) for r in range(3)]
    centers = np.array([cell_center(c, grid) for c in cells])
    # convex hull of the 12 centers, slightly inflated, contains exactly these centers
    from hexposome.hexgrid import cells_in_bbox
    hull_box = (*centers.min(axis=0), *centers.max(axis=0))
    q, r, _ = cells_in_bbox(hull_box, 8, grid)
    expected = {HexId(8, int(a), int(b)) for a, b in zip(q, r)}
    f = polyfill_assign([feat(rect(*hull_box), v=3)], "v", 8, grid)
    assert {str(h) for h in expected} == {h for h, _ in f.keys}
    assert np.all(f.column("v") == 3.0)


def test_polyfill_dropout(grid):
    c = cell_center(HexId(8, 0, 0), grid)
    tiny = rect(c[0] + 0.1, c[1] + 0.1, c[0] + 0.12, c[1] + 0.12)
    assert len(polyfill_assign([feat(tiny, v=1)], "v", 8, grid)) == 0


def test_polyfill_last_wins(grid):
    a = feat(rect(0, 0, 3, 3), v=1)
    b = feat(rect(2, 0, 5, 3), v=9)
    f = polyfill_assign([a, b], "v", 8, grid)
    only_b = polyfill_assign([b], "v", 8, grid)
    for h, _ in only_b.keys:
        assert f.column("v")[f.row_index()[(h, "-")]] == 9.0


# ------------------------------------------------------------- overlay

def test_overlay_self(grid):
    h = HexId(8, 5, 5)
    omap = build_overlay_map([feat(cell_boundary(h, grid), v=1)], 8, grid)
    main = [r for r in omap.records if r.frac_of_hex > 1e-9]
    assert len(main) == 1 and main[0].hex_id == str(h)
    assert main[0].frac_of_source == pytest.approx(1.0, abs=1e-9)
    assert main[0].frac_of_hex == pytest.approx(1.0, abs=1e-9)


def test_overlay_disjoint_is_empty(grid):
    src = Sources([feat(rect(0, 0, 1, 1), v=1)])
    omap = build_overlay_map(src, 8, grid)
    assert all(r.source_index == 0 for r in omap.records)
    far = HexId(8, 500, 500)
    assert str(far) not in omap.by_hex()


def test_overlay_split_30_70(unit_grid):
    """A box over two neighbouring cells, cut so 30% of its area is in one."""
    g = unit_grid
    a, b = HexId(0, 0, 0), HexId(0, 1, 0)  # centers (0,0) and (sqrt3, 0); shared edge at x = sqrt3/2
    edge_x = math.sqrt(3) / 2
    height = 0.4
    width = 1.0
    x0 = edge_x - 0.3 * width
    src = rect(x0, -height / 2, x0 + width, height / 2)
    omap = build_overlay_map([feat(src, v=100)], 0, g)
    fr = {r.hex_id: r.frac_of_source for r in omap.records}
    assert fr[str(a)] == pytest.approx(0.3, abs=1e-12)
    assert fr[str(b)] == pytest.approx(0.7, abs=1e-12)
    rng = np.random.default_rng(4)
    ref = mc_intersection_area([src], cell_boundary(a, g), (x0, -0.2, edge_x, 0.2), rng)
    assert fr[str(a)] * width * height == pytest.approx(ref, rel=1e-3)
    ext = apply_overlay(omap, [100.0], "extensive")
    vals = dict(zip([h for h, _ in ext.keys], ext.column("value")))
    assert vals[str(a)] == pytest.approx(30.0, rel=1e-12)
    assert vals[str(b)] == pytest.approx(70.0, rel=1e-12)
    assert math.fsum(vals.values()) == pytest.approx(100.0, rel=1e-15)


def test_intensive_half_half(unit_grid):
    h = HexId(0, 0, 0)
    left = feat(rect(-2, -2, 0, 2), v=10)
    right = feat(rect(0, -2, 2, 2), v=20)
    out = apply_overlay(build_overlay_map([left, right], 0, unit_grid), [10.0, 20.0], "intensive")
    row = out.row_index()[(str(h), "-")]
    assert out.column("value")[row] == pytest.approx(15.0, rel=1e-12)
    assert out.column("value_coverage")[row] == pytest.approx(1.0, rel=1e-12)


def test_categorical_majority(unit_grid):
    h = HexId(0, 0, 0)
    s = unit_grid.edge(0)
    # cut the hexagon vertically so 60% of it lies left of x = cut
    lo, hi = -2.0, 2.0
    target = 0.6 * unit_grid.cell_area(0)
    from hexposome.geomkernel import intersection_area
    hexagon = cell_boundary(h, unit_grid)
    a, b = -s, s
    for _ in range(100):
        mid = 0.5 * (a + b)
        if intersection_area(rect(lo, lo, mid, hi), hexagon) < target:
            a = mid
        else:
            b = mid
    A = feat(rect(lo, lo, mid, hi), cat=1)
    B = feat(rect(mid, lo, hi, hi), cat=2)
    out = apply_overlay(build_overlay_map([A, B], 0, unit_grid), [1.0, 2.0], "categorical")
    assert out.column("value")[out.row_index()[(str(h), "-")]] == 1.0
    # equal split: ties go to the label with the smaller canonical text
    A = feat(rect(lo, lo, 0, hi), cat=7)
    B = feat(rect(0, lo, hi, hi), cat=3)
    out = apply_overlay(build_overlay_map([A, B], 0, unit_grid), [7.0, 3.0], "categorical")
    assert out.column("value")[out.row_index()[(str(h), "-")]] == 3.0


def test_nodata_excluded(grid):
    r = synthetic_raster("constant", nodata=True)
    out = convert(r, 8, grid, "overlay", semantics="intensive")
    assert np.all(np.abs(out.column("value") - 7.25) <= 1e-12)
    assert out.column("value_coverage").min() < 0.99


def test_mass_conservation(grid, raster):
    out = convert(raster, 8, grid, "overlay", semantics="extensive")
    total = math.fsum(out.column("value"))
    expected = math.fsum(raster.values.ravel())
    assert abs(total - expected) / expected <= 1e-9


def test_constant_field_fidelity(grid):
    out = convert(synthetic_raster("constant"), 8, grid, "overlay", semantics="intensive")
    full = out.column("value_coverage") >= 1 - 1e-9
    assert full.sum() > 500
    assert np.max(np.abs(out.column("value")[full] - 7.25)) <= 1e-12


def test_overlay_map_reuse(grid, features):
    omap = build_overlay_map(features, 8, grid)
    v1 = [f.properties["v"] for f in features]
    v2 = [2.0 * x + 1 for x in v1]
    for vals in (v1, v2):
        fresh = build_overlay_map(features, 8, grid)
        assert apply_overlay(omap, vals, "intensive") == apply_overlay(fresh, vals, "intensive")


def test_overlay_map_roundtrip(tmp_path, grid, features):
    omap = build_overlay_map(features, 8, grid)
    p = tmp_path / "m.csv"
    omap.write(p)
    back = OverlayMap.read(p)
    assert back == omap
    back.write(tmp_path / "m2.csv")
    assert (tmp_path / "m2.csv").read_bytes() == p.read_bytes()
    with pytest.raises(GridMismatchError):
        OverlayMap.read(p, grid.fingerprint(7))


def test_value_count_mismatch(grid, features):
    omap = build_overlay_map(features, 8, grid)
    with pytest.raises(DataError):
        apply_overlay(omap, [1.0, 2.0], "intensive")
    with pytest.raises(DataError):
        apply_overlay(omap, [1.0] * 50, "bogus")


def test_min_coverage(grid, raster):
    loose = convert(raster, 8, grid, "overlay")
    strict = convert(raster, 8, grid, "overlay", min_coverage=0.5)
    assert len(strict) < len(loose)
    assert strict.column("value_coverage").min() >= 0.5


def test_centroid_vs_overlay_smooth(grid):
    """Fine pixels (hex area >= 50 pixel areas): centroid means track overlay means."""
    n = 200
    rows, cols = np.mgrid[0:n, 0:n]
    v = 50.0 + 10.0 * np.sin(cols / 40.0) + 8.0 * np.cos(rows / 35.0)
    r = RasterGrid(n, n, 0.0, 0.0, 0.1, -9999.0, v.ravel())
    assert grid.cell_area(8) / 0.1**2 >= 50
    cen = convert(r, 8, grid, "centroid")
    ovl = convert(r, 8, grid, "overlay")
    full = {k for k, c in zip(ovl.keys, ovl.column("value_coverage")) if c >= 1 - 1e-9}
    ci, oi = cen.row_index(), ovl.row_index()
    worst = max(abs(cen.column("value")[ci[k]] - ovl.column("value")[oi[k]]) / ovl.column("value")[oi[k]]
                for k in full)
    assert worst <= 0.02


# ------------------------------------------------------------- chunking

def _canon(frame):
    return hexframe_to_text(frame)


@pytest.mark.parametrize("strategy", ["centroid", "overlay"])
def test_chunked_raster_equivalence(grid, raster, strategy):
    ref = convert(raster, 8, grid, strategy, semantics="extensive")
    got = chunked_convert(raster, 8, grid, strategy, ChunkSpec(5.0), semantics="extensive")
    assert _canon(got) == _canon(ref)


@pytest.mark.parametrize("strategy", ["centroid", "polyfill", "overlay"])
def test_chunked_vector_equivalence(grid, features, strategy):
    if strategy == "centroid":
        rng = np.random.default_rng(8)
        src = np.column_stack([rng.uniform(0, 22, 3000), rng.uniform(-5, 8, 3000), rng.normal(size=3000)])
    else:
        src = features
    ref = convert(src, 8, grid, strategy, value_field="v", semantics="intensive")
    for width, workers in ((3.0, 1), (4.0, 4)):
        got = chunked_convert(src, 8, grid, strategy, ChunkSpec(width), value_field="v",
                              semantics="intensive", workers=workers)
        assert _canon(got) == _canon(ref)


def test_chunk_boundary_hex_once(unit_grid):
    # the origin cell center sits exactly on chunk lines x=0 and y=0
    pts = np.array([[0.0, 0.0, 1.0], [0.05, 0.0, 3.0], [-0.05, 0.0, 5.0]])
    got = chunked_convert(pts, 0, unit_grid, "centroid", ChunkSpec(1.0))
    assert [k for k in got.keys] == [("H0:0:0", "-")]
    assert got.column("value").tolist() == [3.0]


def test_halo_too_small(grid, raster):
    with pytest.raises(DataError, match="halo"):
        chunked_convert(raster, 8, grid, "overlay", ChunkSpec(5.0, halo=0.0))
    need = required_halo(raster, 8, grid, "overlay")
    assert need == pytest.approx(grid.circumradius(8) + 0.25 * math.sqrt(2))
    ok = chunked_convert(raster, 8, grid, "overlay", ChunkSpec(5.0, halo=need + 1))
    assert _canon(ok) == _canon(convert(raster, 8, grid, "overlay"))


def test_chunkspec_validation():
    with pytest.raises(DataError):
        ChunkSpec(0.0)
    with pytest.raises(DataError):
        ChunkSpec(1.0, halo=-1.0)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HEXPOSOME_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("HEXPOSOME_THREADS", "0")
    assert 1 <= worker_count() <= 8
    monkeypatch.setenv("HEXPOSOME_THREADS", "many")
    with pytest.raises(DataError):
        worker_count()
