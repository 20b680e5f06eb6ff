"""Command-line entry point: ``hexposome <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to stderr;
results are written only to the output paths named on the command line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (cluster_summary, grid_search_hdbscan, hdbscan_fit, pca_fit, pca_select,
                        pca_transform, silhouette, standardize)
from .analytics.selection import DEFAULT_LATTICE
from .analytics.summary import summary_medians
from .catalog import DatasetRecord, query, read_manifest, register, validate
from .convert import (AGGREGATIONS, MIN_COVERAGE, SEMANTICS, STRATEGIES, ChunkSpec, OverlayMap,
                      Sources, apply_overlay, build_overlay_map, chunked_convert, convert)
from .errors import DataError, HexposomeError
from .expometrics import attainment, ceem_map, classify_aqi, population_mask, radar_normalize
from .frame import STATIC_PERIOD, HexFrame, Table
from .hexgrid import DEFAULT_S0, GridSpec
from .ingest import (format_number, read_ascii_grid, read_csv, read_geojson_polygons, read_hexframe,
                     write_csv, write_hexframe)
from .linkage import Crosswalk, aggregate_to_zone, build_crosswalk
from .render import quantile_breaks, quantile_class, render_svg

log = logging.getLogger("hexposome")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- option groups

def _origin(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"origin must be 'x,y', got {text!r}") from None
    return x, y


def _rot(text: str) -> int:
    if text not in ("1", "+1", "-1"):
        raise argparse.ArgumentTypeError(f"rotation sign must be +1 or -1, got {text!r}")
    return int(text)


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _grid_flags(p, with_res=True):
    g = p.add_argument_group("grid")
    if with_res:
        g.add_argument("--res", type=int, default=8, help="grid resolution (default 8)")
    g.add_argument("--s0", type=float, default=DEFAULT_S0, help="resolution-0 edge length in km")
    g.add_argument("--rot", type=_rot, default=-1, help="per-level rotation sign, +1 or -1")
    g.add_argument("--origin", type=_origin, default=(0.0, 0.0), help="planar origin 'x,y' in km")


def _chunk_flags(p):
    g = p.add_argument_group("chunking")
    g.add_argument("--chunk-width", type=float, default=None,
                   help="process output hexes in square chunks of this width (km)")
    g.add_argument("--halo", type=float, default=None,
                   help="source margin around each chunk (km); default is the minimum safe halo")
    g.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: HEXPOSOME_THREADS)")


def _grid(args) -> GridSpec:
    return GridSpec(origin=tuple(args.origin), base_edge_s0=args.s0, rotation_sign=args.rot)


def _frame_grid(frame: HexFrame, args) -> GridSpec:
    return frame.grid.grid(origin=tuple(getattr(args, "origin", (0.0, 0.0))))


def _columns(text: str | None) -> list[str] | None:
    if text is None:
        return None
    cols = [c.strip() for c in text.split(",") if c.strip()]
    if not cols:
        raise DataError("empty column list")
    return cols


# ---------------------------------------------------------------- inputs

def _read_source(path: str, args):
    """Raster (.asc), vector features (.geojson/.json) or a point table (.csv)."""
    suffix = Path(path).suffix.lower()
    if suffix == ".asc":
        return read_ascii_grid(path)
    if suffix in (".geojson", ".json"):
        return read_geojson_polygons(path)
    if suffix == ".csv":
        vf = args.value_field or "value"
        return read_csv(path, {args.x_field: "number", args.y_field: "number", vf: "number"})
    raise DataError(f"cannot tell the format of {path!r} (expected .asc, .geojson or .csv)")


def _read_frames(paths):
    frames = [read_hexframe(p) for p in paths]
    for f in frames[1:]:
        f.require_grid(frames[0].grid)
    return frames


def _matrix(frame: HexFrame, columns):
    """One row per hex; multi-period frames are widened to ``column@period`` features.

    Hexes with any missing feature are dropped.
    """
    frame = frame.select_columns(columns) if columns else frame
    periods = frame.periods()
    if len(periods) == 1:
        names = list(frame.columns)
        hexes = [h for h, _ in frame.keys]
        X = frame.values
    else:
        hexes = sorted({h for h, _ in frame.keys})
        hpos = {h: i for i, h in enumerate(hexes)}
        names = [f"{c}@{p}" for p in periods for c in frame.columns]
        X = np.full((len(hexes), len(names)), np.nan)
        ppos = {p: i for i, p in enumerate(periods)}
        width = len(frame.columns)
        for (h, p), row in zip(frame.keys, frame.values):
            j = ppos[p] * width
            X[hpos[h], j:j + width] = row
    keep = ~np.isnan(X).any(axis=1)
    dropped = int((~keep).sum())
    if dropped:
        log.warning("dropped %d hexes with missing features", dropped)
    X = X[keep]
    hexes = [h for h, k in zip(hexes, keep) if k]
    if len(hexes) < 2:
        raise DataError("fewer than 2 complete hexes to analyse")
    wide = HexFrame(frame.grid, [(h, STATIC_PERIOD) for h in hexes], names, X)
    return wide, X


# ---------------------------------------------------------------- subcommands

def cmd_hexify(args):
    g = _grid(args)
    source = _read_source(args.input, args)
    opts = dict(semantics=args.semantics, value_field=args.value_field, agg=args.agg,
                name=args.name, period=args.period, min_coverage=args.min_coverage)
    if args.strategy == "centroid" and args.input.lower().endswith(".csv") and args.value_field is None:
        opts["value_field"] = "value"
    if args.chunk_width is not None:
        frame = chunked_convert(source, args.res, g, args.strategy,
                                ChunkSpec(args.chunk_width, args.halo), workers=args.workers, **opts)
    else:
        if args.halo is not None:
            raise DataError("--halo only applies with --chunk-width")
        frame = convert(source, args.res, g, args.strategy, **opts)
    write_hexframe(frame, args.output)
    log.info("wrote %d rows to %s", len(frame), args.output)


def cmd_overlay_map(args):
    source = _read_source(args.input, args)
    if isinstance(source, Table):
        raise DataError("overlay maps need raster pixels or polygon features")
    omap = build_overlay_map(Sources(source), args.res, _grid(args))
    omap.write(args.output)
    log.info("wrote %d fragments to %s", len(omap), args.output)


def cmd_apply(args):
    omap = OverlayMap.read(args.map)
    source = _read_source(args.input, args)
    if isinstance(source, Table):
        raise DataError("overlay values come from a raster or polygon features")
    src = Sources(source)
    if src.checksum() != omap.source_checksum:
        raise DataError(f"{args.input} does not have the geometry the overlay map was built from")
    if src.raster is not None:
        values = src.raster
    else:
        if args.value_field is None:
            raise DataError("vector sources need --value-field")
        values = [f.properties.get(args.value_field) for f in src.features]
    frame = apply_overlay(omap, values, args.semantics, name=args.name, period=args.period,
                          min_coverage=args.min_coverage)
    write_hexframe(frame, args.output)


def cmd_ceem(args):
    frame = read_hexframe(args.input)
    limits = read_csv(args.limits, {"limit": "number"})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = ceem_map(frame, limits, args.predicate, name=args.name)
    for w in caught:
        log.warning("%s", w.message)
    write_hexframe(out, args.output)


def cmd_mask(args):
    frame, pop = _read_frames([args.input, args.population])
    out = population_mask(frame, pop, args.threshold, args.column)
    log.info("kept %d of %d rows", len(out), len(frame))
    write_hexframe(out, args.output)


def cmd_classify(args):
    frame = read_hexframe(args.input)
    values = frame.column(args.column)
    present = ~np.isnan(values)
    out = np.full(len(values), np.nan)
    if args.scheme == "aqi":
        out[present] = [int(classify_aqi(v)) for v in values[present]]
    elif args.scheme == "quantile":
        breaks = quantile_breaks(values, args.k)
        out[present] = [quantile_class(v, breaks) for v in values[present]]
        log.info("breaks: %s", ", ".join(format_number(b) for b in breaks))
    elif args.scheme == "attainment":
        out[present] = [1.0 if attainment(v, args.standard) else 0.0 for v in values[present]]
    else:
        out[present] = (values[present] > 1.0).astype(float)
    name = args.name or f"{args.column}_{args.scheme}"
    write_hexframe(frame.with_column(name, out), args.output)


def _write_tree(model, path):
    rows = [[int(p), int(c), float(lam), int(s)] for p, c, lam, s in model.condensed_tree]
    write_csv(Table([("parent", "number"), ("child", "number"), ("lambda", "number"),
                     ("size", "number")], rows), path)


def cmd_cluster(args):
    frame = read_hexframe(args.input)
    wide, X = _matrix(frame, _columns(args.columns))
    Z = standardize(X)[0] if args.standardize else X
    if args.pca_threshold is not None:
        model = pca_fit(Z)
        k = pca_select(model.explained_variance_ratio, "threshold", args.pca_threshold)
        Z = pca_transform(model, Z, k)
        log.info("clustering on %d principal components", k)
    if args.min_cluster_size is not None:
        cm = hdbscan_fit(Z, args.min_cluster_size, args.min_samples)
        score = silhouette(Z, cm.labels)
    else:
        lattice = range(args.lattice_start, args.lattice_stop + 1, args.lattice_step)
        (mcs, ms), cm, score = grid_search_hdbscan(Z, lattice)
        log.info("selected min_cluster_size=%d min_samples=%d", mcs, ms)
    log.info("%d clusters, %d noise hexes, silhouette %s", cm.n_clusters,
             int((cm.labels == -1).sum()), "n/a" if score is None else f"{score:.4f}")
    labels = HexFrame(wide.grid, wide.keys, ["cluster"], cm.labels.astype(float)[:, None])
    write_hexframe(labels, args.output)
    if args.tree:
        _write_tree(cm, args.tree)
    if args.summary or args.radar:
        summary = cluster_summary(wide, cm.labels)
        if args.summary:
            rows = [[lab, col, *fn] for lab, feats in summary.items() for col, fn in feats.items()]
            write_csv(Table([("cluster", "number"), ("feature", "text"), ("min", "number"),
                             ("q1", "number"), ("median", "number"), ("q3", "number"),
                             ("max", "number")], rows), args.summary)
        if args.radar:
            medians = {lab: v for lab, v in summary_medians(summary).items() if lab != -1}
            if not medians:
                raise DataError("no clusters to normalize for the radar chart")
            radar = radar_normalize(medians)
            rows = [[lab, col, v] for lab, feats in radar.items() for col, v in feats.items()]
            write_csv(Table([("cluster", "number"), ("feature", "text"), ("score", "number")], rows),
                      args.radar)


def cmd_pca(args):
    frame = read_hexframe(args.input)
    wide, X = _matrix(frame, _columns(args.columns))
    Z = standardize(X)[0] if args.standardize else X
    model = pca_fit(Z)
    k = args.k or pca_select(model.explained_variance_ratio, args.select, args.t)
    scores = pca_transform(model, Z, k)
    names = [f"pc{i + 1}" for i in range(k)]
    write_hexframe(HexFrame(wide.grid, wide.keys, names, scores), args.output)
    if args.report:
        cols = [("component", "text"), ("eigenvalue", "number"), ("ratio", "number")]
        cols += [(f"loading_{c}", "number") for c in wide.columns]
        rows = [[f"pc{i + 1}", float(model.eigenvalues[i]), float(model.explained_variance_ratio[i]),
                 *(float(x) for x in model.components[i])] for i in range(len(model.eigenvalues))]
        write_csv(Table(cols, rows), args.report)


def cmd_crosswalk(args):
    zones = read_geojson_polygons(args.zones)
    xw = build_crosswalk(zones, args.res, _grid(args), args.zone_field)
    xw.write(args.output)
    log.info("wrote %d hex-zone links to %s", len(xw), args.output)


def cmd_aggregate(args):
    frame = read_hexframe(args.input)
    xw = Crosswalk.read(args.crosswalk, frame.grid)
    stats = _columns(args.stats)
    table = aggregate_to_zone(frame, xw, stats, _columns(args.variables), args.mode)
    write_csv(table, args.output)


def _record_from_args(args) -> DatasetRecord:
    if args.record:
        try:
            data = json.loads(Path(args.record).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.record}: not JSON ({exc})") from None
        if not isinstance(data, dict):
            raise DataError(f"{args.record}: expected a JSON object")
        return DatasetRecord.from_dict(data)
    missing = [f for f in ("id", "name", "data_type", "format") if getattr(args, f) is None]
    if missing:
        raise DataError("register needs --record or --" + ", --".join(m.replace("_", "-") for m in missing))
    fields = {k: getattr(args, k) for k in ("id", "name", "data_type", "format", "native_resolution",
                                            "source_url", "license", "ingestion_code_ref")
              if getattr(args, k) is not None}
    if args.spatial_extent:
        fields["spatial_extent"] = [float(v) for v in args.spatial_extent.split(",")]
    if args.temporal_extent:
        fields["temporal_extent"] = args.temporal_extent.split(",")
    return DatasetRecord.from_dict(fields)


def cmd_catalog(args):
    if args.action == "register":
        rec = _record_from_args(args)
        register(rec, args.manifest, args.data)
        log.info("registered %s", rec.id)
    elif args.action == "validate":
        bad = 0
        for rec in read_manifest(args.manifest):
            for problem in validate(rec):
                print(f"{rec.id}: {problem}", file=sys.stderr)
                bad += 1
        if bad:
            raise DataError(f"{bad} problems in {args.manifest}")
    else:
        equals = dict(kv.split("=", 1) for kv in args.equals or [])
        contains = dict(kv.split("=", 1) for kv in args.contains or [])
        bbox = [float(v) for v in args.bbox.split(",")] if args.bbox else None
        period = args.period.split(",") if args.period and "," in args.period else args.period
        hits = query(args.manifest, equals=equals, contains=contains, bbox_intersects=bbox,
                     period_overlaps=period)
        text = "".join(r.to_json() + "\n" for r in hits)
        if args.output is None:
            raise DataError("query needs --output")
        Path(args.output).write_text(text, encoding="utf-8")
        log.info("%d matching records", len(hits))


def cmd_render(args):
    frame = read_hexframe(args.input)
    render_svg(frame, args.column, args.output, _frame_grid(frame, args), classing=args.classing,
               k=args.k, palette=args.palette, column2=args.column2, period=args.period,
               title=args.title)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hexposome", description="Hexagonal exposome harmonization and analytics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="key=value file of defaults for this command")
        sp.set_defaults(func=func)
        return sp

    sp = add("hexify", cmd_hexify, "convert a raster, polygons or points to a HexFrame")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--strategy", choices=STRATEGIES, default="overlay")
    sp.add_argument("--semantics", choices=SEMANTICS, default="intensive")
    sp.add_argument("--agg", choices=AGGREGATIONS, default="mean", help="centroid aggregation")
    sp.add_argument("--value-field", default=None)
    sp.add_argument("--x-field", default="x")
    sp.add_argument("--y-field", default="y")
    sp.add_argument("--name", default="value", help="output column name")
    sp.add_argument("--period", default=STATIC_PERIOD)
    sp.add_argument("--min-coverage", type=float, default=MIN_COVERAGE)
    _grid_flags(sp)
    _chunk_flags(sp)

    sp = add("overlay-map", cmd_overlay_map, "precompute source/hex fragments for a geometry")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--value-field", default=None)
    sp.add_argument("--x-field", default="x")
    sp.add_argument("--y-field", default="y")
    _grid_flags(sp)

    sp = add("apply", cmd_apply, "aggregate source values through a saved overlay map")
    sp.add_argument("map")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--semantics", choices=SEMANTICS, default="intensive")
    sp.add_argument("--value-field", default=None)
    sp.add_argument("--x-field", default="x")
    sp.add_argument("--y-field", default="y")
    sp.add_argument("--name", default="value")
    sp.add_argument("--period", default=STATIC_PERIOD)
    sp.add_argument("--min-coverage", type=float, default=MIN_COVERAGE)

    sp = add("ceem", cmd_ceem, "cumulative exceedance score over chemical columns")
    sp.add_argument("input", help="HexFrame whose columns are CAS ids")
    sp.add_argument("limits", help="CSV with cas, limit and optionally group, sites")
    sp.add_argument("output")
    sp.add_argument("--predicate", default=None, help="e.g. 'group in {1,2A} and site has lung'")
    sp.add_argument("--name", default="ceem")

    sp = add("mask", cmd_mask, "keep hexes with at least a given population")
    sp.add_argument("input")
    sp.add_argument("population")
    sp.add_argument("output")
    sp.add_argument("--threshold", type=float, default=1.0)
    sp.add_argument("--column", default=None, help="population column (default: first)")

    sp = add("classify", cmd_classify, "add a class column (AQI, quantile, attainment, CEEM > 1)")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--column", required=True)
    sp.add_argument("--scheme", choices=("aqi", "quantile", "attainment", "ceem-threshold"), default="aqi")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--standard", type=float, default=12.0, help="annual attainment standard")
    sp.add_argument("--name", default=None)

    sp = add("cluster", cmd_cluster, "HDBSCAN clustering of hex exposure vectors")
    sp.add_argument("input")
    sp.add_argument("output", help="HexFrame with a 'cluster' column (-1 = noise)")
    sp.add_argument("--columns", default=None)
    sp.add_argument("--standardize", type=_bool, default=True)
    sp.add_argument("--pca-threshold", type=float, default=None,
                    help="cluster on the principal components reaching this variance share")
    sp.add_argument("--min-cluster-size", type=int, default=None,
                    help="fixed parameters; omit to search the lattice by silhouette")
    sp.add_argument("--min-samples", type=int, default=None)
    sp.add_argument("--lattice-start", type=int, default=DEFAULT_LATTICE[0])
    sp.add_argument("--lattice-stop", type=int, default=DEFAULT_LATTICE[-1])
    sp.add_argument("--lattice-step", type=int, default=DEFAULT_LATTICE[1] - DEFAULT_LATTICE[0])
    sp.add_argument("--summary", default=None, help="CSV of per-cluster five-number summaries")
    sp.add_argument("--radar", default=None, help="CSV of 0..10 normalized cluster medians")
    sp.add_argument("--tree", default=None, help="CSV of the condensed tree")

    sp = add("pca", cmd_pca, "principal component scores per hex")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--columns", default=None)
    sp.add_argument("--standardize", type=_bool, default=True)
    sp.add_argument("--select", choices=("threshold", "elbow"), default="threshold")
    sp.add_argument("--t", type=float, default=0.9)
    sp.add_argument("--k", type=int, default=None, help="fixed number of components")
    sp.add_argument("--report", default=None, help="CSV of eigenvalues, ratios and loadings")

    sp = add("crosswalk", cmd_crosswalk, "hex-to-zone fractional crosswalk")
    sp.add_argument("zones", help="GeoJSON zone polygons")
    sp.add_argument("output")
    sp.add_argument("--zone-field", default="zone_id")
    _grid_flags(sp)

    sp = add("aggregate", cmd_aggregate, "zone-level statistics through a crosswalk")
    sp.add_argument("input")
    sp.add_argument("crosswalk")
    sp.add_argument("output")
    sp.add_argument("--stats", default="mean,std")
    sp.add_argument("--variables", default=None)
    sp.add_argument("--mode", choices=("fractional", "dominant"), default="fractional")

    sp = add("catalog", cmd_catalog, "register, validate or query dataset manifests")
    sp.add_argument("action", choices=("register", "validate", "query"))
    sp.add_argument("manifest")
    sp.add_argument("--record", default=None, help="JSON file holding one record")
    sp.add_argument("--data", default=None, help="data file to checksum")
    for name in ("id", "name", "data-type", "format", "native-resolution", "source-url", "license",
                 "ingestion-code-ref", "spatial-extent", "temporal-extent"):
        sp.add_argument(f"--{name}", default=None)
    sp.add_argument("--equals", action="append", help="field=value (repeatable)")
    sp.add_argument("--contains", action="append", help="field=substring (repeatable)")
    sp.add_argument("--bbox", default=None, help="xmin,ymin,xmax,ymax")
    sp.add_argument("--period", default=None, help="year, date, or start,end")
    sp.add_argument("--output", default=None, help="JSON-lines file for query results")

    sp = add("render", cmd_render, "SVG choropleth of one HexFrame column")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--column", required=True)
    sp.add_argument("--column2", default=None, help="second column for bivariate classing")
    sp.add_argument("--classing", choices=("quantile", "bivariate", "ceem-threshold"), default="quantile")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--palette", default=None, help="comma-separated colors")
    sp.add_argument("--period", default=None)
    sp.add_argument("--title", default=None)
    sp.add_argument("--origin", type=_origin, default=(0.0, 0.0), help="planar origin 'x,y' in km")
    return p


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys use flag spelling."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror}") from None
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{i}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _apply_config(sub: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """File values become parser defaults, so explicit flags still win."""
    actions = {a.dest: a for a in sub._actions if a.option_strings and a.dest not in ("help", "config")}
    unknown = sorted(set(config) - set(actions))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    defaults = {}
    for key, raw in config.items():
        action = actions[key]
        try:
            if action.nargs == 0:
                value = _bool(raw)
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(_subparser(parser, args.command), read_config(args.config))
            args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"hexposome: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="hexposome: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (DataError, HexposomeError) as exc:
        print(f"hexposome {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hexposome {args.command}: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
