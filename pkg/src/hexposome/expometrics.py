"""Exposure metrics on hexified data: mixture scores, AQI classes, masks."""

from __future__ import annotations

import enum
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .frame import HexFrame, Table

PM25_ANNUAL_STANDARD = 12.0  # ug/m^3


@dataclass
class CeemInput:
    concentrations: Sequence[float]
    limits: Sequence[float]
    chemicals: Sequence[str] = field(default_factory=list)


def ceem(concentrations, limits=None) -> float:
    """Cumulative excess exposure mixture score: sum of concentration / limit.

    A score above 1 means the mixture exceeds its limits even when every single
    chemical is below its own limit.
    """
    if isinstance(concentrations, CeemInput):
        concentrations, limits = concentrations.concentrations, concentrations.limits
    c = list(concentrations)
    lim = list(limits)
    if len(c) != len(lim):
        raise DataError(f"{len(c)} concentrations but {len(lim)} limits")
    if not c:
        raise DataError("ceem needs at least one chemical")
    for ci, li in zip(c, lim):
        if not li > 0:
            raise DataError(f"exposure limit must be positive, got {li}")
        if ci < 0:
            raise DataError(f"concentration must be >= 0, got {ci}")
    return math.fsum(ci / li for ci, li in zip(c, lim))


def hourly_to_daily_average(value: float) -> float:
    # The mean of a full year of hourly concentrations equals the mean of its
    # daily means, so the conversion is the identity on concentrations.
    return value


# ---------------------------------------------------------------- carcinogen filter

_CLAUSE = re.compile(
    r"^\s*(?P<field>group|site|sites|cas)\s+(?P<op>in|has|=|==)\s+(?P<arg>.+?)\s*$", re.IGNORECASE)


def _parse_clause(text: str):
    m = _CLAUSE.match(text)
    if not m:
        raise DataError(f"malformed predicate clause {text.strip()!r}")
    fld, op, arg = m.group("field").lower(), m.group("op").lower(), m.group("arg")
    if fld == "sites":
        fld = "site"
    if op == "in":
        if not (arg.startswith("{") and arg.endswith("}")):
            raise DataError(f"'in' needs a {{...}} set, got {arg!r}")
        options = {a.strip().lower() for a in arg[1:-1].split(",") if a.strip()}
        if not options:
            raise DataError("empty set in predicate")
    else:
        options = {arg.strip().lower()}
    if fld == "site" and op not in ("has", "in"):
        raise DataError("sites are tested with 'has' or 'in'")
    if fld != "site" and op == "has":
        raise DataError(f"'has' only applies to sites, not {fld}")

    def test(rec: Mapping) -> bool:
        if fld == "site":
            tags = {t.strip().lower() for t in (rec.get("sites") or "").split(";") if t.strip()}
            return bool(tags & options)
        value = rec.get(fld)
        if value is None:
            return False
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        return str(value).strip().lower() in options

    return test


def parse_predicate(text: str):
    """Compile ``group in {1,2A}``, ``site has lung``, ``cas = 71-43-2`` joined by and/or.

    ``and`` binds tighter than ``or``.
    """
    if text is None or not text.strip():
        raise DataError("empty predicate")
    alternatives = []
    for alt in re.split(r"\s+or\s+", text.strip(), flags=re.IGNORECASE):
        alternatives.append([_parse_clause(c) for c in re.split(r"\s+and\s+", alt, flags=re.IGNORECASE)])
    return lambda rec: any(all(t(rec) for t in clauses) for clauses in alternatives)


def filter_carcinogens(chems: Table, predicate: str) -> set[str]:
    test = parse_predicate(predicate)
    for col in ("cas", "group"):
        chems.index(col)
    return {rec["cas"] for rec in chems.records() if test(rec)}


def _limits_by_cas(limits: Table) -> dict[str, dict]:
    out = {}
    for rec in limits.records():
        if rec.get("cas") is None:
            continue
        out[str(rec["cas"])] = rec
    return out


def ceem_map(frame: HexFrame, limits: Table, predicate: str | None = None, *,
             name: str = "ceem") -> HexFrame:
    """CEEM per (hex, period) over chemical columns named by CAS id.

    Missing concentrations are left out of the sum (not counted as zero); the
    ``<name>_n`` column records how many chemicals contributed.
    """
    table = _limits_by_cas(limits)
    if predicate is not None:
        keep = filter_carcinogens(limits, predicate)
        chems = [c for c in frame.columns if c in keep]
    else:
        chems = list(frame.columns)
    count_name = f"{name}_n"
    if not chems:
        warnings.warn("CEEM filter kept no chemical columns; result is empty", stacklevel=2)
        return HexFrame(frame.grid, [], [name, count_name])
    lims = []
    for c in chems:
        lim = table.get(c, {}).get("limit")
        if lim is None:
            raise DataError(f"chemical {c} has no exposure limit")
        if not lim > 0:
            raise DataError(f"chemical {c} has non-positive limit {lim}")
        lims.append(float(lim))
    sub = frame.select_columns(chems).values
    keys, out = [], []
    for key, row in zip(frame.keys, sub):
        present = ~np.isnan(row)
        if not present.any():
            continue
        keys.append(key)
        out.append((ceem(row[present], np.asarray(lims)[present]), float(present.sum())))
    return HexFrame(frame.grid, keys, [name, count_name], np.array(out).reshape(len(keys), 2))


# ---------------------------------------------------------------- AQI

class AqiClass(enum.IntEnum):
    Good = 0
    Moderate = 1
    Unhealthy = 2
    VeryUnhealthyOrHazardous = 3


AQI_BREAKS = (50.0, 100.0, 200.0)


def classify_aqi(v: float) -> AqiClass:
    """Class boundaries belong to the lower class (50 is Good)."""
    if v is None or math.isnan(v):
        raise DataError("AQI value is missing")
    if v < 0:
        raise DataError(f"AQI value must be >= 0, got {v}")
    for cls, upper in zip(AqiClass, AQI_BREAKS):
        if v <= upper:
            return cls
    return AqiClass.VeryUnhealthyOrHazardous


def bivariate(smoke: float, total: float) -> tuple[AqiClass, AqiClass]:
    return classify_aqi(smoke), classify_aqi(total)


def attainment(annual_mean: float, standard: float = PM25_ANNUAL_STANDARD) -> bool:
    if annual_mean < 0:
        raise DataError(f"annual mean must be >= 0, got {annual_mean}")
    return annual_mean <= standard


# ---------------------------------------------------------------- masking

def population_mask(frame: HexFrame, pop: HexFrame, threshold: float = 1.0,
                    column: str | None = None) -> HexFrame:
    """Keep rows whose hex has population >= threshold; hexes absent from ``pop`` are dropped.

    Population is looked up by hex id alone when ``pop`` is static (period "-"),
    otherwise by (hex id, period).
    """
    frame.require_grid(pop.grid)
    col = column or pop.columns[0]
    values = pop.column(col)
    by_key = dict(zip(pop.keys, values))
    static = {h: v for (h, p), v in by_key.items() if p == "-"}
    keep = []
    for h, p in frame.keys:
        v = by_key.get((h, p), static.get(h))
        keep.append(v is not None and not math.isnan(v) and v >= threshold)
    return frame.select_rows(keep)


# ---------------------------------------------------------------- radar

def radar_normalize(summary: Mapping[object, Mapping[str, float]]) -> dict:
    """Rescale each feature across clusters to 0..10; constant features map to 5."""
    if not summary:
        raise DataError("radar_normalize needs at least one cluster")
    clusters = list(summary)
    features = list(next(iter(summary.values())))
    out = {c: {} for c in clusters}
    for f in features:
        xs = [float(summary[c][f]) for c in clusters]
        lo, hi = min(xs), max(xs)
        for c, x in zip(clusters, xs):
            out[c][f] = 5.0 if hi == lo else 10.0 * ((x - lo) / (hi - lo))  # ratio first: max maps to exactly 10
    return out
