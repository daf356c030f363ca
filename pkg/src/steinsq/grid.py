"""Symbol arrays, partial transversals and the grid text format.

Rows, columns and symbols are 1-indexed at every public boundary. Internally
cells live in a 0-indexed numpy array where 0 marks a forbidden cell.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ForbiddenCellsPresent, GridFormatError, InvalidTransversal

Cell = tuple[int, int]


def _dtype_for(m: int):
    return np.uint16 if m <= np.iinfo(np.uint16).max else np.uint32


class Grid:
    """An n x n array over symbols 1..m with an optional forbidden mask.

    ``cells`` is read-only after construction; forbidden positions hold 0.
    """

    __slots__ = ("n", "m", "cells", "mask")

    def __init__(self, cells, m: int | None = None, mask=None):
        arr = np.asarray(cells)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise GridFormatError(f"expected a non-empty square array, got shape {arr.shape}")
        n = arr.shape[0]
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != arr.shape:
                raise GridFormatError("mask shape does not match cells")
            if not mask.any():
                mask = None
        if m is None:
            m = int(arr.max())
        if m < 1:
            raise GridFormatError("symbol count must be positive")
        arr = arr.astype(_dtype_for(m), copy=True)
        if mask is not None:
            arr[mask] = 0
            live = arr[~mask]
        else:
            live = arr
        if live.size and (int(live.min()) < 1 or int(live.max()) > m):
            raise GridFormatError(f"symbols must lie in 1..{m}")
        arr.flags.writeable = False
        if mask is not None:
            mask = mask.copy()
            mask.flags.writeable = False
        self.n = n
        self.m = int(m)
        self.cells = arr
        self.mask = mask

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int | None]], m: int | None = None) -> "Grid":
        """Build from nested lists; ``None`` marks a forbidden cell."""
        n = len(rows)
        cells = np.zeros((n, n), dtype=np.int64)
        mask = np.zeros((n, n), dtype=bool)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise GridFormatError(f"row {i + 1} has {len(row)} entries, expected {n}")
            for j, v in enumerate(row):
                if v is None:
                    mask[i, j] = True
                else:
                    cells[i, j] = v
        return cls(cells, m=m, mask=mask)

    def __repr__(self):
        return f"Grid(n={self.n}, m={self.m}, forbidden={self.num_forbidden})"

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.forbidden_mask(), other.forbidden_mask())
        )

    __hash__ = None

    def symbol(self, row: int, col: int) -> int | None:
        if self.is_forbidden(row, col):
            return None
        return int(self.cells[row - 1, col - 1])

    def is_forbidden(self, row: int, col: int) -> bool:
        return self.mask is not None and bool(self.mask[row - 1, col - 1])

    def forbidden_mask(self) -> np.ndarray:
        if self.mask is None:
            return np.zeros((self.n, self.n), dtype=bool)
        return self.mask

    @property
    def num_forbidden(self) -> int:
        return 0 if self.mask is None else int(self.mask.sum())

    @property
    def forbidden(self) -> frozenset[Cell]:
        if self.mask is None:
            return frozenset()
        rs, cs = np.nonzero(self.mask)
        return frozenset((int(r) + 1, int(c) + 1) for r, c in zip(rs, cs))

    def counts(self) -> np.ndarray:
        """Occurrences per symbol, indexed 0..m (index 0 counts forbidden cells)."""
        # chunked so bincount's cast to intp never touches the whole array at once
        out = np.zeros(self.m + 1, dtype=np.int64)
        step = max(1, (1 << 22) // self.n)
        for lo in range(0, self.n, step):
            out += np.bincount(self.cells[lo : lo + step].ravel(), minlength=self.m + 1)
        return out

    def to_lists(self) -> list[list[int | None]]:
        out = []
        for i in range(self.n):
            out.append([self.symbol(i + 1, j + 1) for j in range(self.n)])
        return out

    def is_symmetric(self) -> bool:
        return np.array_equal(self.cells, self.cells.T) and np.array_equal(
            self.forbidden_mask(), self.forbidden_mask().T
        )


@dataclass(frozen=True)
class PartialTransversal:
    cells: tuple[Cell, ...]

    def __init__(self, cells: Iterable[Sequence[int]] = ()):
        object.__setattr__(self, "cells", tuple((int(r), int(c)) for r, c in cells))

    def __len__(self):
        return len(self.cells)

    def symbols(self, g: Grid) -> list[int | None]:
        return [g.symbol(r, c) for r, c in self.cells]


def is_equi_square(g: Grid) -> bool:
    if g.mask is not None:
        raise ForbiddenCellsPresent("equi-n-squares are defined on full arrays")
    if g.m != g.n:
        return False
    return bool(np.all(g.counts()[1:] == g.n))


def validate_transversal(g: Grid, t: PartialTransversal) -> bool:
    rows, cols, syms = set(), set(), set()
    for r, c in t.cells:
        if not (1 <= r <= g.n and 1 <= c <= g.n):
            raise IndexError(f"cell {(r, c)} outside a {g.n}x{g.n} grid")
        if g.is_forbidden(r, c):
            return False
        s = g.symbol(r, c)
        if r in rows or c in cols or s in syms:
            return False
        rows.add(r)
        cols.add(c)
        syms.add(s)
    return True


@dataclass(frozen=True)
class OccurrenceStats:
    totals: np.ndarray  # index s -> count, s in 1..m (index 0 unused)
    max_row_multiplicity: np.ndarray
    max_col_multiplicity: np.ndarray

    def symbol(self, s: int) -> tuple[int, int, int]:
        return (
            int(self.totals[s]),
            int(self.max_row_multiplicity[s]),
            int(self.max_col_multiplicity[s]),
        )

    @property
    def worst_row(self) -> int:
        return int(self.max_row_multiplicity[1:].max(initial=0))

    @property
    def worst_col(self) -> int:
        return int(self.max_col_multiplicity[1:].max(initial=0))


def _max_line_multiplicity(cells: np.ndarray, m: int) -> np.ndarray:
    best = np.zeros(m + 1, dtype=np.int64)
    for line in cells:
        np.maximum(best, np.bincount(line, minlength=m + 1), out=best)
    best[0] = 0
    return best


def occurrence_stats(g: Grid) -> OccurrenceStats:
    totals = g.counts().astype(np.int64)
    totals[0] = 0
    return OccurrenceStats(
        totals=totals,
        max_row_multiplicity=_max_line_multiplicity(g.cells, g.m),
        max_col_multiplicity=_max_line_multiplicity(g.cells.T, g.m),
    )


def missed_symbols(g: Grid, t: PartialTransversal) -> set[int]:
    if not validate_transversal(g, t):
        raise InvalidTransversal("cells share a row, column or symbol, or hit a forbidden cell")
    return set(range(1, g.m + 1)) - set(t.symbols(g))


# -- text format -------------------------------------------------------------
#
#   line 1:      "n m"
#   lines 2..n+1: n tokens, each a symbol in 1..m or "*" (forbidden)
#   LF endings, single spaces, no trailing whitespace.

_HEADER = re.compile(rb"\s*(\d+)\s+(\d+)\s*")
_ROW = re.compile(rb"\s*(?:\d+|\*)(?:\s+(?:\d+|\*))*\s*")


def iter_grid_lines(g: Grid) -> Iterator[bytes]:
    """Canonical serialization, one bytes object per line (with LF)."""
    yield f"{g.n} {g.m}\n".encode()
    lut = np.array([str(s).encode() for s in range(g.m + 1)], dtype=object)
    lut[0] = b"*"
    for row in g.cells:
        yield b" ".join(lut[row].tolist()) + b"\n"


def grid_to_text(g: Grid) -> str:
    return b"".join(iter_grid_lines(g)).decode()


def grid_digest(g: Grid) -> str:
    h = hashlib.sha256()
    for line in iter_grid_lines(g):
        h.update(line)
    return h.hexdigest()


def write_grid(g: Grid, path) -> str:
    """Write the grid file and return its sha256 digest."""
    h = hashlib.sha256()
    with open(path, "wb") as fh:
        for line in iter_grid_lines(g):
            h.update(line)
            fh.write(line)
    return h.hexdigest()


def _parse_lines(lines: Iterable[bytes]) -> Grid:
    it = iter(lines)
    header = None
    for raw in it:
        if raw.strip():
            header = raw
            break
    if header is None:
        raise GridFormatError("empty grid file")
    mh = _HEADER.fullmatch(header)
    if not mh:
        raise GridFormatError(f"bad header line {header[:40]!r}")
    n, m = int(mh.group(1)), int(mh.group(2))
    if n < 1 or m < 1:
        raise GridFormatError("n and m must be positive")
    cells = np.zeros((n, n), dtype=_dtype_for(m))
    mask = None
    i = 0
    for lineno, raw in enumerate(it, start=2):
        if not raw.strip():
            continue
        if i >= n:
            raise GridFormatError(f"line {lineno}: more than {n} rows defined")
        if not _ROW.fullmatch(raw):
            raise GridFormatError(f"line {lineno}: unexpected token")
        if b"*" in raw:
            toks = raw.split()
            if len(toks) != n:
                raise GridFormatError(f"line {lineno}: {len(toks)} tokens, expected {n}")
            if mask is None:
                mask = np.zeros((n, n), dtype=bool)
            star = np.array([tk == b"*" for tk in toks])
            mask[i] = star
            vals = np.array([0 if tk == b"*" else int(tk) for tk in toks], dtype=np.int64)
            live = vals[~star]
        else:
            vals = np.fromstring(raw, dtype=np.int64, sep=" ")
            if vals.size != n:
                raise GridFormatError(f"line {lineno}: {vals.size} tokens, expected {n}")
            live = vals
        if live.size and (live.min() < 1 or live.max() > m):
            raise GridFormatError(f"line {lineno}: symbol outside 1..{m}")
        cells[i] = vals
        i += 1
    if i != n:
        raise GridFormatError(f"expected {n} rows, found {i}")
    return Grid(cells, m=m, mask=mask)


def grid_from_text(text: str | bytes) -> Grid:
    if isinstance(text, str):
        text = text.encode()
    return _parse_lines(text.splitlines())


def read_grid(path) -> Grid:
    with open(Path(path), "rb") as fh:
        return _parse_lines(fh)
