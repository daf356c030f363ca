"""Fill planned layouts to produce the counterexample grids and variants.

Balanced fills deal N_i symbols round-robin through H_i in column-major
order (J_i is the transpose). Since |N_i| = 2x_i - 1 is coprime to x_i and at
least x_i, every N_i symbol visits the x_i rows of H_i evenly and never
repeats in a column. B goes into the F blocks along wrapped diagonals. A
symbols take consecutive runs of n free cells along the wrapped diagonals of
the whole grid, so each repeats in a row or column at most as often as the
number of diagonals its run spans.

Randomness always comes from ``numpy.random.default_rng(seed)`` (PCG64).
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import FillExhausted, SymmetricInfeasible
from .grid import Grid, _dtype_for
from .layout import (
    CLASS_A,
    ConstructionParams,
    RegionLayout,
    SymbolPartition,
    deleted_cells,
    make_layout,
    make_partition,
    plan_layout,
)


def _diag_order(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """All cells of an a x b rectangle (a <= b) in wrapped-diagonal order."""
    k = np.arange(a * b, dtype=np.int64)
    r = k % a
    return r, (r + k // a) % b


def _column_major(a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(a * b, dtype=np.int64)
    return k % a, k // a


def _h_cells(layout: RegionLayout, i: int) -> tuple[np.ndarray, np.ndarray]:
    x = layout.xs[i - 1]
    lo, s = layout.S(i - 1), layout.S(i)
    r, c = _column_major(x, layout.n - s)
    return r + lo, c + s


def _j_cells(layout: RegionLayout, i: int) -> tuple[np.ndarray, np.ndarray]:
    r, c = _h_cells(layout, i)
    return c, r


def _f_cells(layout: RegionLayout) -> tuple[np.ndarray, np.ndarray]:
    rs, cs = [], []
    for i, x in enumerate(layout.xs, start=1):
        r, c = _diag_order(x, x)
        lo = layout.S(i - 1)
        rs.append(r + lo)
        cs.append(c + lo)
    if not rs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(rs), np.concatenate(cs)


def _live(cells, mask, r, c):
    """Drop forbidden or already filled cells, preserving order."""
    keep = cells[r, c] == 0
    if mask is not None:
        keep &= ~mask[r, c]
    return r[keep], c[keep]


def _deal(symbols: np.ndarray, count: int) -> np.ndarray:
    return symbols[np.arange(count) % len(symbols)]


def _fill_n_classes(cells, mask, layout, part, n, rng):
    for i in range(1, layout.n0 + 1):
        syms = part.N(i)
        total = n * len(syms)
        if total == 0:
            continue
        hr, hc = _live(cells, mask, *_h_cells(layout, i))
        jr, jc = _live(cells, mask, *_j_cells(layout, i))
        if len(hr) + len(jr) < total:
            raise FillExhausted(f"H_{i} u J_{i} has {len(hr) + len(jr)} cells, needs {total}")
        seq = _deal(syms, total)
        if rng is None:
            c_h = min(len(hr), -(-total // 2))
            cells[hr[:c_h], hc[:c_h]] = seq[:c_h]
            c_j = total - c_h
            cells[jr[:c_j], jc[:c_j]] = seq[c_h:]
        else:
            r = np.concatenate([hr, jr])
            c = np.concatenate([hc, jc])
            pick = rng.permutation(len(r))[:total]
            cells[r[pick], c[pick]] = seq


def _fill_b(cells, mask, layout, part, n, rng):
    syms = part.B
    total = n * len(syms)
    if total == 0:
        return
    fr, fc = _live(cells, mask, *_f_cells(layout))
    if len(fr) < total:
        raise FillExhausted(f"F blocks have {len(fr)} free cells, B needs {total}")
    if rng is None:
        cells[fr[:total], fc[:total]] = _deal(syms, total)
    else:
        pick = rng.permutation(len(fr))[:total]
        cells[fr[pick], fc[pick]] = _deal(syms, total)


def _fill_a(cells, mask, part, n, rng):
    syms = part.A
    expected = n * len(syms)
    if rng is None:
        # wrapped diagonals of the whole grid: each one meets every row and column
        # once, so a symbol spread over d diagonals repeats at most d times per line
        rows = np.arange(n)
        placed = 0
        for d in range(n):
            cols = (rows + d) % n
            r, c = _live(cells, mask, rows, cols)
            k = len(r)
            if k == 0:
                continue
            if placed + k > expected:
                raise FillExhausted(f"{placed + k} free cells left for A, expected {expected}")
            # contiguous runs: symbol j takes free cells j*n .. j*n + n - 1
            cells[r, c] = syms[(placed + np.arange(k)) // n]
            placed += k
    else:
        free = cells == 0
        if mask is not None:
            free &= ~mask
        idx = np.flatnonzero(free)
        placed = len(idx)
        if placed == expected and placed:
            idx = idx[rng.permutation(len(idx))]
            cells.flat[idx] = _deal(syms, placed)
    if placed != expected:
        raise FillExhausted(f"{placed} free cells left for A, expected {expected}")


def _rng(p: ConstructionParams):
    return None if p.fill == "balanced" else np.random.default_rng(p.seed)


def build(p: ConstructionParams) -> tuple[Grid, RegionLayout, SymbolPartition]:
    """Plain or deleted-diagonal construction (no padding)."""
    if p.variant == "symmetric":
        return build_symmetric(p)
    layout, part = plan_layout(p)
    n = p.n
    cells = np.zeros((n, n), dtype=_dtype_for(p.m))
    mask = None
    if p.variant == "bipartite_deleted":
        mask = np.zeros((n, n), dtype=bool)
        for r, c in deleted_cells(n):
            mask[r - 1, c - 1] = True
    rng = _rng(p)
    _fill_n_classes(cells, mask, layout, part, n, rng)
    _fill_b(cells, mask, layout, part, n, rng)
    _fill_a(cells, mask, part, n, rng)
    return Grid(cells, m=p.m, mask=mask), layout, part


def build_bipartite_deleted(p: ConstructionParams):
    if p.variant != "bipartite_deleted":
        p = _replace(p, variant="bipartite_deleted")
    return build(p)


def _replace(p: ConstructionParams, **kw) -> ConstructionParams:
    return replace(p, **kw)


def _upper_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Strict upper-triangle cells ordered by diagonal offset, then row."""
    rs, cs = [], []
    for d in range(1, n):
        r = np.arange(n - d)
        rs.append(r)
        cs.append(r + d)
    if not rs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(rs), np.concatenate(cs)


def _place_pairs(cells, r, c, syms):
    cells[r, c] = syms
    cells[c, r] = syms


def build_symmetric(p: ConstructionParams):
    """Symmetric construction.

    Only cells on or above the diagonal are decided; (i, j) and (j, i) share
    a symbol. Symbols are dealt in slots of weight two: an off-diagonal pair,
    or two diagonal cells. N-class symbols live off the diagonal, so n must
    be even whenever any N class exists.
    """
    if p.variant != "symmetric":
        p = _replace(p, variant="symmetric")
    layout, part = plan_layout(p)
    n = p.n
    if n % 2 and layout.n0:
        raise SymmetricInfeasible(
            "parity(N)",
            f"N-class symbols sit off the diagonal and come in mirrored pairs, "
            f"so they cannot occur n = {n} (odd) times",
        )
    cells = np.zeros((n, n), dtype=_dtype_for(p.m))
    rng = _rng(p)

    for i in range(1, layout.n0 + 1):
        syms = part.N(i)
        half = n // 2 * len(syms)
        hr, hc = _h_cells(layout, i)
        if len(hr) < half:
            raise SymmetricInfeasible("capacity(H)", f"H_{i} has {len(hr)} cells, needs {half}")
        if rng is not None:
            pick = rng.permutation(len(hr))[:half]
            hr, hc = hr[pick], hc[pick]
        _place_pairs(cells, hr[:half], hc[:half], _deal(syms, half))

    def slots(r_off, c_off, r_diag):
        """Weight-two slots: off-diagonal cells, then consecutive diagonal pairs."""
        out = [(int(a), int(b)) for a, b in zip(r_off, c_off)]
        d = [int(a) for a in r_diag]
        out += [(d[k], d[k + 1], "diag") for k in range(0, len(d) - 1, 2)]
        return out

    def put(slot, s):
        if len(slot) == 3:
            cells[slot[0], slot[0]] = s
            cells[slot[1], slot[1]] = s
        else:
            cells[slot[0], slot[1]] = s
            cells[slot[1], slot[0]] = s

    if n % 2:
        # n0 == 0 here: every symbol takes one diagonal cell, then pairs
        syms = part.A
        if len(part.B):
            raise SymmetricInfeasible("parity(B)", "odd n with a nonempty B class")
        order = rng.permutation(n) if rng is not None else np.arange(n)
        for k, r in enumerate(order):
            cells[r, r] = syms[k]
        ur, uc = _upper_pairs(n)
        if rng is not None:
            perm = rng.permutation(len(ur))
            ur, uc = ur[perm], uc[perm]
        _place_pairs(cells, ur, uc, _deal(syms, len(ur)))
        return Grid(cells, m=p.m), layout, part

    # B inside the F blocks
    bsyms = part.B
    if len(bsyms):
        off_r, off_c, diag = [], [], []
        for i, x in enumerate(layout.xs, start=1):
            lo = layout.S(i - 1)
            ur, uc = _upper_pairs(x)
            off_r.append(ur + lo)
            off_c.append(uc + lo)
            diag.append(np.arange(lo, lo + x))
        sl = slots(np.concatenate(off_r), np.concatenate(off_c), np.concatenate(diag))
        need = n // 2 * len(bsyms)
        if len(sl) < need:
            raise SymmetricInfeasible("capacity(F)", f"{len(sl)} slots in F blocks, B needs {need}")
        if rng is not None:
            sl = [sl[k] for k in rng.permutation(len(sl))]
        for slot, s in zip(sl[:need], _deal(bsyms, need)):
            put(slot, int(s))

    # A in whatever is left
    asyms = part.A
    ur, uc = _upper_pairs(n)
    free = cells[ur, uc] == 0
    ur, uc = ur[free], uc[free]
    diag_free = np.flatnonzero(cells[np.arange(n), np.arange(n)] == 0)
    if len(diag_free) % 2:
        raise SymmetricInfeasible("parity(diagonal)", f"{len(diag_free)} free diagonal cells")
    sl = slots(ur, uc, diag_free)
    need = n // 2 * len(asyms)
    if len(sl) != need:
        raise FillExhausted(f"{len(sl)} symmetric slots left for A, expected {need}")
    if rng is not None:
        sl = [sl[k] for k in rng.permutation(len(sl))]
    for slot, s in zip(sl, _deal(asyms, need)):
        put(slot, int(s))
    return Grid(cells, m=p.m), layout, part


def pad(g: Grid, k: int, seed: int = 0) -> Grid:
    """Append k rows and columns filled with fresh symbols.

    Uses ceil(((n+k)^2 - n^2) / n) fresh symbols, each at least once and at
    most n times; the original n x n block is unchanged.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if g.mask is not None:
        raise ValueError("cannot pad a grid with forbidden cells")
    n, m = g.n, g.m
    N = n + k
    new_cells = N * N - n * n
    fresh = -(-new_cells // n)
    out = np.zeros((N, N), dtype=_dtype_for(m + fresh))
    out[:n, :n] = g.cells
    free = np.flatnonzero(out == 0)
    free = free[np.random.default_rng(seed).permutation(len(free))]
    out.flat[free] = m + 1 + np.arange(len(free)) % fresh
    return Grid(out, m=m + fresh)


def pad_structures(layout: RegionLayout, part: SymbolPartition, k: int, fresh: int):
    """Extend a layout by k star rows/columns and a partition by fresh A symbols.

    Fresh symbols only land in cells of new rows or columns, which belong to
    H_i, J_i or R* x C* of the extended layout, so the structural conditions
    keep holding.
    """
    lay = RegionLayout(
        n=layout.n + k,
        xs=layout.xs,
        row_label=np.concatenate([layout.row_label, np.zeros(k, np.int32)]),
        col_label=np.concatenate([layout.col_label, np.zeros(k, np.int32)]),
        cx=layout.cx,
        slack_mode=layout.slack_mode,
    )
    label = np.concatenate([part.label, np.full(fresh, CLASS_A, np.int32)])
    return lay, SymbolPartition(m=part.m + fresh, label=label, n0=part.n0)


def shuffle(g: Grid, layout: RegionLayout, part: SymbolPartition, seed: int | None):
    """Permute rows, columns and symbol names consistently.

    ``seed=None`` returns the inputs unchanged.
    """
    if seed is None:
        return g, layout, part
    rng = np.random.default_rng(seed)
    n, m = g.n, g.m
    P = rng.permutation(n)
    Q = rng.permutation(n)
    sigma = rng.permutation(m) + 1
    relabel = np.zeros(m + 1, dtype=np.int64)
    relabel[1:] = sigma
    cells = np.zeros_like(g.cells)
    cells[np.ix_(P, Q)] = relabel[g.cells]
    mask = None
    if g.mask is not None:
        mask = np.zeros_like(g.mask)
        mask[np.ix_(P, Q)] = g.mask
    row_label = np.empty_like(layout.row_label)
    row_label[P] = layout.row_label
    col_label = np.empty_like(layout.col_label)
    col_label[Q] = layout.col_label
    label = np.empty_like(part.label)
    label[0] = part.label[0]
    label[sigma] = part.label[1:]
    lay = RegionLayout(
        n=layout.n,
        xs=layout.xs,
        row_label=row_label,
        col_label=col_label,
        cx=layout.cx,
        slack_mode=layout.slack_mode,
    )
    return Grid(cells, m=m, mask=mask), lay, SymbolPartition(m=m, label=label, n0=part.n0)


def generate(p: ConstructionParams):
    """Dispatch on ``p.variant`` and apply padding when ``p.pad > 0``."""
    if p.variant == "symmetric":
        g, layout, part = build_symmetric(p)
    else:
        g, layout, part = build(p)
    if p.pad:
        padded = pad(g, p.pad, p.seed)
        layout, part = pad_structures(layout, part, p.pad, padded.m - g.m)
        g = padded
    return g, layout, part


def build_structured(n: int, xs, b_size: int, seed: int, density: float = 0.7):
    """Random small instance satisfying the structural conditions.

    N_i symbols appear only in H_i u J_i and B symbols only in the F blocks
    (each B symbol at least once); A symbols may go anywhere. Per-symbol
    totals are not balanced. Used to exercise the certificate at sizes an
    exact solver can handle.
    """
    rng = np.random.default_rng(seed)
    layout = make_layout(n, xs)
    sizes = [2 * x - 1 for x in layout.xs]
    if sum(sizes) + b_size >= n:
        raise ValueError("no room left for A symbols")
    if sum(x * x for x in layout.xs) < b_size:
        raise ValueError("F blocks too small for B")
    part = make_partition(n, sizes, b_size)
    A = part.A
    B = part.B
    cells = np.zeros((n, n), dtype=np.int64)
    keys_r = layout.row_keys()
    keys_c = layout.col_keys()
    for r in range(n):
        for c in range(n):
            rk, ck = keys_r[r], keys_c[c]
            if rk == ck and rk <= layout.n0 and len(B) and rng.random() < density:
                cells[r, c] = rng.choice(B)
            elif rk != ck and rng.random() < density:
                cells[r, c] = rng.choice(part.N(min(rk, ck))) if min(rk, ck) <= layout.n0 else rng.choice(A)
            else:
                cells[r, c] = rng.choice(A)
    fr, fc = _f_cells(layout)
    spots = rng.permutation(len(fr))[: len(B)]
    cells[fr[spots], fc[spots]] = B
    return Grid(cells, m=n), layout, part
