"""JSON-lines dataset manifest with provenance metadata.

One record per line. Writers take an exclusive lock file next to the manifest and
replace the manifest atomically; readers never lock.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import re
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import DataError, FormatError, HexposomeError

DATA_TYPES = ("raster", "vector", "tabular", "model", "ingestion-code")
FILE_BACKED = ("raster", "vector", "tabular", "model")
_SLUG = re.compile(r"^[a-z0-9]+(?:[-_][a-z0-9]+)*$")


class LockConflict(HexposomeError):
    pass


@dataclass
class DatasetRecord:
    id: str
    name: str
    data_type: str
    format: str
    spatial_extent: list = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    temporal_extent: list = field(default_factory=lambda: ["-", "-"])
    native_resolution: str = ""
    source_url: str = ""
    license: str = ""
    ingestion_code_ref: str = ""
    checksum: str = ""
    created: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise DataError(f"unknown record fields {sorted(unknown)}")
        missing = {"id", "name", "data_type", "format"} - set(d)
        if missing:
            raise DataError(f"record lacks {sorted(missing)}")
        return cls(**d)


def file_checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_when(text: str, end: bool) -> dt.date:
    """ISO date or bare year; a year covers Jan 1 .. Dec 31."""
    text = str(text).strip()
    if re.fullmatch(r"\d{4}", text):
        return dt.date(int(text), 12, 31) if end else dt.date(int(text), 1, 1)
    return dt.date.fromisoformat(text[:10])


def validate(record: DatasetRecord, data_path=None) -> list[str]:
    """All violated invariants; an empty list means the record is valid."""
    problems = []
    if not record.id or not _SLUG.match(record.id):
        problems.append(f"id {record.id!r} is not a slug")
    for name in ("name", "format", "license"):
        if not str(getattr(record, name) or "").strip():
            problems.append(f"{name} empty")
    if record.data_type not in DATA_TYPES:
        problems.append(f"data_type {record.data_type!r} not in {DATA_TYPES}")
    box = record.spatial_extent
    if not (isinstance(box, (list, tuple)) and len(box) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in box)):
        problems.append("spatial_extent must be 4 numbers")
    elif box[0] > box[2] or box[1] > box[3]:
        problems.append(f"spatial_extent min > max: {list(box)}")
    te = record.temporal_extent
    if not (isinstance(te, (list, tuple)) and len(te) == 2):
        problems.append("temporal_extent must be (start, end)")
    elif list(te) != ["-", "-"]:
        try:
            start, stop = _parse_when(te[0], False), _parse_when(te[1], True)
            if start > stop:
                problems.append(f"temporal_extent start after end: {list(te)}")
        except ValueError:
            problems.append(f"temporal_extent not ISO dates: {list(te)}")
    if record.data_type in FILE_BACKED and not record.checksum:
        problems.append("checksum missing for file-backed dataset")
    if data_path is not None:
        actual = file_checksum(data_path)
        if record.checksum and actual != record.checksum:
            problems.append(f"checksum mismatch: recorded {record.checksum}, file {actual}")
    return problems


def read_manifest(path) -> list[DatasetRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(DatasetRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, DataError, TypeError) as exc:
            raise FormatError(f"malformed manifest record: {exc}", f"line {i}") from None
    return out


def serialize_manifest(records) -> str:
    return "".join(r.to_json() + "\n" for r in records)


@contextmanager
def _writer_lock(path: Path):
    lock = path.with_name(path.name + ".lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockConflict(f"manifest {path} is locked by another writer ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def register(record: DatasetRecord, manifest_path, data_path=None) -> str:
    """Append a validated record. The manifest is rewritten via temp file + rename."""
    path = Path(manifest_path)
    if data_path is not None and not record.checksum:
        record.checksum = file_checksum(data_path)
    if not record.created:
        record.created = dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat()
    problems = validate(record, data_path)
    if problems:
        raise DataError("invalid record: " + "; ".join(problems))
    with _writer_lock(path):
        records = read_manifest(path)
        if any(r.id == record.id for r in records):
            raise DataError(f"duplicate dataset id {record.id!r}")
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(serialize_manifest(records + [record]), encoding="utf-8")
        os.replace(tmp, path)
    return record.id


def _overlaps(a0, a1, b0, b1) -> bool:
    return a0 <= b1 and b0 <= a1


def query(manifest_path, *, equals: dict | None = None, contains: dict | None = None,
          bbox_intersects=None, period_overlaps=None) -> list[DatasetRecord]:
    """Records matching every given predicate.

    ``equals`` / ``contains`` map field names to a value / substring;
    ``bbox_intersects`` is ``(xmin, ymin, xmax, ymax)``; ``period_overlaps`` is a
    year, an ISO date, or a ``(start, end)`` pair.
    """
    names = {f.name for f in fields(DatasetRecord)}
    for d in (equals or {}), (contains or {}):
        unknown = set(d) - names
        if unknown:
            raise DataError(f"unknown fields in filter: {sorted(unknown)}")
    if period_overlaps is not None:
        if isinstance(period_overlaps, (list, tuple)):
            p0, p1 = _parse_when(period_overlaps[0], False), _parse_when(period_overlaps[1], True)
        else:
            p0, p1 = _parse_when(period_overlaps, False), _parse_when(period_overlaps, True)
    out = []
    for rec in read_manifest(manifest_path):
        if any(str(getattr(rec, k)) != str(v) for k, v in (equals or {}).items()):
            continue
        if any(str(v).lower() not in str(getattr(rec, k)).lower() for k, v in (contains or {}).items()):
            continue
        if bbox_intersects is not None:
            x0, y0, x1, y1 = rec.spatial_extent
            bx0, by0, bx1, by1 = bbox_intersects
            if not (_overlaps(x0, x1, bx0, bx1) and _overlaps(y0, y1, by0, by1)):
                continue
        if period_overlaps is not None:
            if list(rec.temporal_extent) == ["-", "-"]:
                continue
            r0 = _parse_when(rec.temporal_extent[0], False)
            r1 = _parse_when(rec.temporal_extent[1], True)
            if not _overlaps(r0, r1, p0, p1):
                continue
        out.append(rec)
    return out
