"""Partial transversal search.

* ``solve_exact``  branch-and-bound; rows, columns and symbols may go unused
* ``solve_brute``  exhaustive recursion, the testing oracle
* ``solve_greedy`` randomized maximal extension with restarts
* ``solve_nibble`` semi-random matching in the row/column/symbol hypergraph
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import HardCapExceeded, TimeLimitExceeded
from .grid import Grid, PartialTransversal

EXACT_HARD_CAP = 24
BRUTE_HARD_CAP = 7


@dataclass
class SolveResult:
    size: int
    witness: PartialTransversal
    optimal: bool
    nodes_explored: int = 0
    elapsed: float = 0.0
    method: str = ""
    rounds: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "size": self.size,
            "optimal": self.optimal,
            "witness": [list(c) for c in self.witness.cells],
            "nodes_explored": self.nodes_explored,
            "rounds": self.rounds,
            "elapsed": round(self.elapsed, 6),
        }


@dataclass
class NibbleConfig:
    epsilon: float = 0.01  # stop the random phase once <= epsilon * n rows stay active
    round_fraction: float = 0.1
    max_rounds: int = 50
    seed: int = 0
    greedy_finish: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.round_fraction <= 1:
            raise ValueError("round_fraction must lie in (0, 1]")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be nonnegative")


def _row_options(g: Grid) -> list[list[tuple[int, int, int]]]:
    """Per row: (column, column bit, symbol bit) for every live cell, by column."""
    opts = []
    mask = g.forbidden_mask()
    for r in range(g.n):
        row = []
        for c in range(g.n):
            if not mask[r, c]:
                row.append((c, 1 << c, 1 << (int(g.cells[r, c]) - 1)))
        opts.append(row)
    return opts


def _popcount(x: int) -> int:
    return bin(x).count("1")


class _Search:
    """Depth-first branch-and-bound state shared by the recursive calls.

    ``used_c`` and ``used_s`` hold columns and symbols that are taken or
    given up; rows leave ``rows`` the same way.
    """

    def __init__(self, opts, upper, best, best_cells, deadline):
        self.opts = opts
        self.upper = upper
        self.best = best
        self.best_cells = list(best_cells)
        self.deadline = deadline
        self.nodes = 0
        self.timed_out = False

    def _done(self) -> bool:
        return self.timed_out or self.best >= self.upper

    def run(self, rows, used_c, used_s, cur):
        self.nodes += 1
        size = len(cur)
        if size > self.best:
            self.best = size
            self.best_cells = list(cur)
        if self.deadline is not None and self.nodes & 1023 == 0 and time.monotonic() > self.deadline:
            self.timed_out = True
        if self._done():
            return
        # feasible cells per remaining row; rows with none drop out
        live = []
        by_sym: dict[int, list] = {}
        by_col: dict[int, list] = {}
        for r in rows:
            feas = [o for o in self.opts[r] if not (o[1] & used_c) and not (o[2] & used_s)]
            if feas:
                live.append((len(feas), r, feas))
                for o in feas:
                    by_sym.setdefault(o[2], []).append((r, o))
                    by_col.setdefault(o[1], []).append((r, o))
        if size + min(len(live), len(by_sym), len(by_col)) <= self.best:
            return
        live.sort()
        k, r, feas = live[0]
        live_rows = [e[1] for e in live]
        # branch on the most constrained row, symbol or column (rows win ties)
        sb, s_cells = min(by_sym.items(), key=lambda e: (len(e[1]), e[0]))
        cb, c_cells = min(by_col.items(), key=lambda e: (len(e[1]), e[0]))
        if len(s_cells) < k and len(s_cells) <= len(c_cells):
            self._take_each(s_cells, live_rows, used_c, used_s, cur)
            if not self._done():
                self.run(live_rows, used_c, used_s | sb, cur)
        elif len(c_cells) < k:
            self._take_each(c_cells, live_rows, used_c, used_s, cur)
            if not self._done():
                self.run(live_rows, used_c | cb, used_s, cur)
        else:
            self._take_each([(r, o) for o in feas], live_rows, used_c, used_s, cur)
            if not self._done():
                self.run(live_rows[1:], used_c, used_s, cur)

    def _take_each(self, cells, rows, used_c, used_s, cur):
        for r, (c, cb, sb) in cells:
            cur.append((r, c))
            self.run([x for x in rows if x != r], used_c | cb, used_s | sb, cur)
            cur.pop()
            if self._done():
                return


def _greedy_lowest(g: Grid) -> list[tuple[int, int]]:
    used_c, used_s, out = set(), set(), []
    mask = g.forbidden_mask()
    for r in range(g.n):
        for c in range(g.n):
            if mask[r, c] or c in used_c:
                continue
            s = int(g.cells[r, c])
            if s in used_s:
                continue
            used_c.add(c)
            used_s.add(s)
            out.append((r, c))
            break
    return out


def _subtree(args):
    cells, mask, m, rows, used_c, used_s, cur, best, best_cells, time_limit = args
    g = Grid(cells, m=m, mask=mask)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    s = _Search(_row_options(g), min(g.n, g.m), best, best_cells, deadline)
    s.run(rows, used_c, used_s, list(cur))
    return s.best, s.best_cells, s.nodes, s.timed_out


def solve_exact(
    g: Grid,
    time_limit: float | None = None,
    hard_cap: int = EXACT_HARD_CAP,
    force: bool = False,
    threads: int = 1,
) -> SolveResult:
    """Maximum partial transversal by branch-and-bound.

    At each node the row, symbol or column with the fewest feasible cells is
    branched on: each of its cells is taken in turn, then it is given up.
    A node is pruned when the current size plus the number of rows, distinct
    free symbols, or distinct free columns still reachable cannot beat the
    incumbent. With ``threads > 1`` the root's branches run in separate
    processes; the optimum is the same but the witness may differ.

    Raises TimeLimitExceeded (carrying the best result) when ``time_limit``
    seconds pass before the search completes.
    """
    if g.n > hard_cap and not force:
        raise HardCapExceeded(f"n = {g.n} exceeds the exact-solver cap {hard_cap}")
    t0 = time.monotonic()
    opts = _row_options(g)
    upper = min(g.n, g.m)
    start = _greedy_lowest(g)
    deadline = None if time_limit is None else t0 + time_limit
    search = _Search(opts, upper, len(start), start, deadline)
    rows = list(range(g.n))

    if threads > 1 and g.n > 1 and search.best < upper:
        # expand the root the same way run() would and farm out each branch
        feas_rows = sorted(
            (len(o), r, o) for r in rows if (o := opts[r])
        )
        _, r0, feas = feas_rows[0]
        rest = [e[1] for e in feas_rows[1:]]
        jobs = [(rest, cb, sb, [(r0, c)]) for c, cb, sb in feas] + [(rest, 0, 0, [])]
        payload = [
            (g.cells, g.mask, g.m, rs, uc, us, cur, search.best, search.best_cells, time_limit)
            for rs, uc, us, cur in jobs
        ]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_subtree, payload))
        search.nodes = 1
        for best, cells, nodes, timed_out in results:
            search.nodes += nodes
            search.timed_out |= timed_out
            if best > search.best:
                search.best, search.best_cells = best, cells
    else:
        search.run(rows, 0, 0, [])

    witness = PartialTransversal((r + 1, c + 1) for r, c in sorted(search.best_cells))
    res = SolveResult(
        size=len(witness),
        witness=witness,
        optimal=not search.timed_out,
        nodes_explored=search.nodes,
        elapsed=time.monotonic() - t0,
        method="exact",
    )
    if search.timed_out:
        raise TimeLimitExceeded(res)
    return res


def solve_brute(g: Grid, hard_cap: int = BRUTE_HARD_CAP) -> SolveResult:
    """Every row in order either takes a compatible cell or is skipped."""
    if g.n > hard_cap:
        raise HardCapExceeded(f"n = {g.n} exceeds the brute-force cap {hard_cap}")
    t0 = time.monotonic()
    n = g.n
    mask = g.forbidden_mask()
    cells = [[None if mask[r, c] else int(g.cells[r, c]) for c in range(n)] for r in range(n)]
    best: list = []
    nodes = 0

    def rec(r, cols, syms, cur):
        nonlocal best, nodes
        nodes += 1
        if r == n:
            if len(cur) > len(best):
                best = list(cur)
            return
        for c in range(n):
            s = cells[r][c]
            if s is None or c in cols or s in syms:
                continue
            cols.add(c)
            syms.add(s)
            cur.append((r + 1, c + 1))
            rec(r + 1, cols, syms, cur)
            cur.pop()
            cols.discard(c)
            syms.discard(s)
        rec(r + 1, cols, syms, cur)

    rec(0, set(), set(), [])
    return SolveResult(
        size=len(best),
        witness=PartialTransversal(best),
        optimal=True,
        nodes_explored=nodes,
        elapsed=time.monotonic() - t0,
        method="brute",
    )


def solve_greedy(g: Grid, restarts: int = 10, seed: int = 0) -> SolveResult:
    """Best of ``restarts`` random maximal partial transversals."""
    t0 = time.monotonic()
    rng = np.random.default_rng(seed)
    n = g.n
    live = np.flatnonzero(~g.forbidden_mask().ravel())
    syms_flat = g.cells.ravel()
    best: list = []
    upper = min(n, g.m)
    for _ in range(max(1, restarts)):
        order = live[rng.permutation(len(live))]
        rows = (order // n).tolist()
        cols = (order % n).tolist()
        syms = syms_flat[order].tolist()
        ur, uc, us = set(), set(), set()
        cur = []
        for r, c, s in zip(rows, cols, syms):
            if r in ur or c in uc or s in us:
                continue
            ur.add(r)
            uc.add(c)
            us.add(s)
            cur.append((r + 1, c + 1))
            if len(cur) == upper:
                break
        if len(cur) > len(best):
            best = cur
        if len(best) == upper:
            break
    return SolveResult(
        size=len(best),
        witness=PartialTransversal(sorted(best)),
        optimal=False,
        elapsed=time.monotonic() - t0,
        method="greedy",
    )


def solve_nibble(g: Grid, cfg: NibbleConfig | None = None) -> SolveResult:
    """Semi-random nibble on the 3-partite hypergraph of the grid.

    Vertices are rows, columns and symbols; each live cell (r, c) with
    symbol s is the edge {r, c, s}. Each round samples about
    ``round_fraction`` times the number of active rows among edges whose
    three vertices are all active, keeps sampled edges in index order unless
    they collide with an already kept one, and deactivates the covered
    vertices. The random phase ends after ``max_rounds`` rounds, when no
    edge is left, or when at most ``epsilon * n`` rows remain active; a
    greedy pass over the remaining rows then finishes the job.
    """
    cfg = cfg or NibbleConfig()
    t0 = time.monotonic()
    rng = np.random.default_rng(cfg.seed)
    n, m = g.n, g.m
    mask = g.forbidden_mask()
    live = np.flatnonzero(~mask.ravel())
    idx_t = np.int32 if n * n < 2**31 else np.int64
    e_row = (live // n).astype(idx_t)
    e_col = (live % n).astype(idx_t)
    e_sym = g.cells.ravel()[live].astype(idx_t)
    row_on = np.ones(n, bool)
    col_on = np.ones(n, bool)
    sym_on = np.ones(m + 1, bool)
    chosen: list[tuple[int, int]] = []
    rounds = 0

    while rounds < cfg.max_rounds:
        active_rows = int(row_on.sum())
        if active_rows <= cfg.epsilon * n:
            break
        cand = np.flatnonzero(row_on[e_row] & col_on[e_col] & sym_on[e_sym])
        if len(cand) == 0:
            break
        rounds += 1
        k = min(len(cand), max(1, int(round(cfg.round_fraction * active_rows))))
        picked = np.sort(cand[rng.choice(len(cand), size=k, replace=False)])
        ur, uc, us = set(), set(), set()
        for e in picked.tolist():
            r, c, s = int(e_row[e]), int(e_col[e]), int(e_sym[e])
            if r in ur or c in uc or s in us:
                continue
            ur.add(r)
            uc.add(c)
            us.add(s)
            chosen.append((r, c))
        row_on[list(ur)] = False
        col_on[list(uc)] = False
        sym_on[list(us)] = False

    if cfg.greedy_finish:
        for r in np.flatnonzero(row_on).tolist():
            row = g.cells[r]
            ok = col_on & sym_on[row] & ~mask[r]
            hit = np.flatnonzero(ok)
            if len(hit):
                c = int(hit[0])
                chosen.append((r, c))
                row_on[r] = False
                col_on[c] = False
                sym_on[row[c]] = False

    witness = PartialTransversal(sorted((r + 1, c + 1) for r, c in chosen))
    return SolveResult(
        size=len(witness),
        witness=witness,
        optimal=False,
        elapsed=time.monotonic() - t0,
        method="nibble",
        rounds=rounds,
    )


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("STEIN_THREADS", "1")))
    except ValueError:
        return 1
