"""Thematic classing and deterministic SVG choropleths of hex frames."""

from __future__ import annotations

import bisect
import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError
from .expometrics import AqiClass, classify_aqi
from .frame import HexFrame
from .hexgrid import GridSpec, cell_boundary, decode

QUANTILE_PALETTE = ("#fef0d9", "#fdcc8a", "#fc8d59", "#e34a33", "#b30000")
CEEM_PALETTE = ("#d9d9d9", "#7a0177")
NODATA_FILL = "#ffffff"
# rows: first variable class (Good..VeryUnhealthy), columns: second variable class
BIVARIATE_PALETTE = (
    ("#e8e8e8", "#b5c0da", "#6c83b5", "#2a5a8c"),
    ("#dabfd5", "#a5a6c6", "#667aa8", "#2c4f80"),
    ("#c68dbc", "#9a83b1", "#5f6b96", "#2a4472"),
    ("#be64ac", "#8c62aa", "#3b4994", "#1f2d5c"),
)
CANVAS = 800.0


def quantile_breaks(values, k: int) -> list[float]:
    """Empirical quantiles at i/k (i = 1..k-1), interpolating linearly between order statistics."""
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        raise DataError("no values to class")
    return [float(x) for x in np.quantile(v, [i / k for i in range(1, k)])]


def quantile_class(value: float, breaks: Sequence[float]) -> int:
    """Classes are [b_{i-1}, b_i); values at or above the last break fall in the last class."""
    return bisect.bisect_right(breaks, value)


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _parse_palette(spec, default):
    if spec is None:
        return list(default)
    colors = [c.strip() for c in spec.split(",")] if isinstance(spec, str) else list(spec)
    if not colors or any(not c for c in colors):
        raise DataError(f"bad palette {spec!r}")
    return colors


def render_svg(frame: HexFrame, column: str, out_path, g: GridSpec, *, classing: str = "quantile",
               k: int = 5, palette=None, column2: str | None = None, period: str | None = None,
               title: str | None = None) -> Path:
    """Write one polygon per hex, filled by class, plus a legend."""
    if period is not None:
        frame = frame.filter_period(period)
    if len(frame.periods()) > 1:
        raise DataError(f"frame has periods {frame.periods()}; choose one with a period filter")
    if len(frame) == 0:
        raise DataError("nothing to render")
    values = frame.column(column)
    legend: list[tuple[str, str]] = []
    if classing == "quantile":
        colors = _parse_palette(palette, QUANTILE_PALETTE)
        if len(colors) < k:
            raise DataError(f"palette has {len(colors)} colors for {k} classes")
        breaks = quantile_breaks(values, k)
        fills = [NODATA_FILL if math.isnan(v) else colors[quantile_class(v, breaks)] for v in values]
        edges = ["min", *(f"{b:.4g}" for b in breaks), "max"]
        legend = [(colors[i], f"{edges[i]} - {edges[i + 1]}") for i in range(k)]
    elif classing == "ceem-threshold":
        colors = _parse_palette(palette, CEEM_PALETTE)
        fills = [NODATA_FILL if math.isnan(v) else colors[1 if v > 1.0 else 0] for v in values]
        legend = [(colors[0], "CEEM <= 1"), (colors[1], "CEEM > 1")]
    elif classing == "bivariate":
        if column2 is None:
            raise DataError("bivariate classing needs a second column")
        other = frame.column(column2)
        fills = []
        for a, b in zip(values, other):
            if math.isnan(a) or math.isnan(b):
                fills.append(NODATA_FILL)
            else:
                fills.append(BIVARIATE_PALETTE[classify_aqi(a)][classify_aqi(b)])
        for ca in AqiClass:
            for cb in AqiClass:
                legend.append((BIVARIATE_PALETTE[ca][cb], f"{column} {ca.name} / {column2} {cb.name}"))
    else:
        raise DataError(f"unknown classing {classing!r}")

    polys = [cell_boundary(h, g) for h in frame.hex_ids()]
    xs = [x for p in polys for x, _ in p]
    ys = [y for p in polys for _, y in p]
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    scale = CANVAS / max(xmax - xmin, ymax - ymin)
    width = (xmax - xmin) * scale
    height = (ymax - ymin) * scale
    legend_h = 18.0 * len(legend) + 10.0

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width + 20)}" '
        f'height="{_fmt(height + legend_h + 20)}" viewBox="-10.000 -10.000 {_fmt(width + 20)} '
        f'{_fmt(height + legend_h + 20)}">',
    ]
    if title:
        lines.append(f"<title>{escape(title)}</title>")
    lines.append('<g id="hexes" stroke="#606060" stroke-width="0.2">')
    for (hex_id, _), poly, fill in zip(frame.keys, polys, fills):
        pts = " ".join(f"{_fmt((x - xmin) * scale)},{_fmt((ymax - y) * scale)}" for x, y in poly)
        lines.append(f'<polygon id="{hex_id}" points="{pts}" fill="{fill}"/>')
    lines.append("</g>")
    lines.append(f'<g id="legend" font-family="sans-serif" font-size="11" '
                 f'transform="translate(0,{_fmt(height + 10)})">')
    for i, (color, label) in enumerate(legend):
        y = 18.0 * i
        lines.append(f'<rect x="0.000" y="{_fmt(y)}" width="14.000" height="14.000" '
                     f'fill="{color}" stroke="#606060"/>')
        lines.append(f'<text x="20.000" y="{_fmt(y + 11)}">{escape(label)}</text>')
    lines.append("</g>")
    lines.append("</svg>")
    out = Path(out_path)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def hex_count(svg_text: str) -> int:
    return svg_text.count("<polygon ")


__all__ = ["quantile_breaks", "quantile_class", "render_svg", "decode"]
