"""In-memory tabular types: generic ``Table`` and the hexified ``HexFrame``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DuplicateKeyError, GridMismatchError
from .hexgrid import GridFingerprint, HexId, decode

STATIC_PERIOD = "-"


@dataclass
class Table:
    """Rectangular records; ``None`` marks a missing cell."""

    columns: list[tuple[str, str]]
    rows: list[list] = field(default_factory=list)

    def __post_init__(self):
        names = self.names
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names in {names}")
        for kind in (k for _, k in self.columns):
            if kind not in ("text", "number"):
                raise DataError(f"unknown column kind {kind!r}")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise DataError(f"row {i} has {len(row)} cells, expected {len(self.columns)}")

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}; have {self.names}") from None

    def column(self, name: str) -> list:
        i = self.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        names = self.names
        return [dict(zip(names, row)) for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


class HexFrame:
    """Rows keyed by ``(hex_id text, period)`` holding named numeric variables.

    ``values`` is an ``(n_rows, n_columns)`` float array; NaN means missing.
    Rows are kept in canonical order (hex id text, then period).
    """

    def __init__(self, grid: GridFingerprint, keys: Sequence[tuple[str, str]],
                 columns: Sequence[str], values=None):
        self.grid = grid
        self.columns = list(columns)
        if len(set(self.columns)) != len(self.columns):
            raise DataError(f"duplicate column names in {self.columns}")
        keys = [(str(h), str(p)) for h, p in keys]
        if values is None:
            values = np.full((len(keys), len(self.columns)), np.nan)
        values = np.asarray(values, dtype=float).reshape(len(keys), len(self.columns))
        order = sorted(range(len(keys)), key=keys.__getitem__)
        self.keys = [keys[i] for i in order]
        self.values = values[order] if len(order) else values
        for a, b in zip(self.keys, self.keys[1:]):
            if a == b:
                raise DuplicateKeyError(f"duplicate row key hex_id={a[0]} period={a[1]}")
        for h, _ in self.keys:
            hid = decode(h)
            if hid.res != grid.res:
                raise DataError(f"{h} is not at the frame resolution {grid.res}")

    @classmethod
    def from_records(cls, grid: GridFingerprint, records: Iterable[tuple[str, str, dict]],
                     columns: Sequence[str] | None = None) -> "HexFrame":
        records = list(records)
        if columns is None:
            seen: dict[str, None] = {}
            for _, _, vals in records:
                for name in vals:
                    seen.setdefault(name, None)
            columns = list(seen)
        keys = [(str(h), p) for h, p, _ in records]
        values = np.full((len(records), len(columns)), np.nan)
        for i, (_, _, vals) in enumerate(records):
            for j, name in enumerate(columns):
                v = vals.get(name)
                if v is not None:
                    values[i, j] = v
        return cls(grid, keys, columns, values)

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HexFrame):
            return NotImplemented
        return (self.grid == other.grid and self.keys == other.keys
                and self.columns == other.columns
                and np.array_equal(self.values, other.values, equal_nan=True))

    def __repr__(self) -> str:
        return f"HexFrame({self.grid}, rows={len(self)}, columns={self.columns})"

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise DataError(f"frame has no column {name!r}; have {self.columns}") from None

    def hex_ids(self) -> list[HexId]:
        return [decode(h) for h, _ in self.keys]

    def periods(self) -> list[str]:
        return sorted({p for _, p in self.keys})

    def require_grid(self, other: GridFingerprint) -> None:
        if self.grid != other:
            raise GridMismatchError(other, self.grid)

    def select_columns(self, names: Sequence[str]) -> "HexFrame":
        idx = [self.columns.index(n) if n in self.columns else None for n in names]
        missing = [n for n, i in zip(names, idx) if i is None]
        if missing:
            raise DataError(f"frame has no column(s) {missing}")
        return HexFrame(self.grid, self.keys, list(names), self.values[:, idx])

    def select_rows(self, mask) -> "HexFrame":
        mask = np.asarray(mask, dtype=bool)
        keys = [k for k, m in zip(self.keys, mask) if m]
        return HexFrame(self.grid, keys, self.columns, self.values[mask])

    def filter_period(self, period: str) -> "HexFrame":
        return self.select_rows([p == period for _, p in self.keys])

    def with_column(self, name: str, values) -> "HexFrame":
        values = np.asarray(values, dtype=float).reshape(len(self), 1)
        if name in self.columns:
            out = self.values.copy()
            out[:, self.columns.index(name)] = values[:, 0]
            return HexFrame(self.grid, self.keys, self.columns, out)
        return HexFrame(self.grid, self.keys, self.columns + [name],
                        np.hstack([self.values, values]))

    def row_index(self) -> dict[tuple[str, str], int]:
        return {k: i for i, k in enumerate(self.keys)}

    @staticmethod
    def concat(frames: Sequence["HexFrame"]) -> "HexFrame":
        if not frames:
            raise DataError("nothing to concatenate")
        first = frames[0]
        keys, blocks = [], []
        for f in frames:
            f.require_grid(first.grid)
            if f.columns != first.columns:
                raise DataError(f"column mismatch: {f.columns} vs {first.columns}")
            keys.extend(f.keys)
            blocks.append(f.values)
        return HexFrame(first.grid, keys, first.columns, np.vstack(blocks))

    @staticmethod
    def join(frames: Sequence["HexFrame"]) -> "HexFrame":
        """Outer join on (hex_id, period); column names must not collide."""
        if not frames:
            raise DataError("nothing to join")
        grid = frames[0].grid
        columns: list[str] = []
        for f in frames:
            f.require_grid(grid)
            columns.extend(f.columns)
        keys = sorted({k for f in frames for k in f.keys})
        pos = {k: i for i, k in enumerate(keys)}
        out = np.full((len(keys), len(columns)), np.nan)
        c0 = 0
        for f in frames:
            rows = [pos[k] for k in f.keys]
            out[np.ix_(rows, range(c0, c0 + len(f.columns)))] = f.values
            c0 += len(f.columns)
        return HexFrame(grid, keys, columns, out)
