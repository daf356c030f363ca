"""Row/column block layout and symbol classes for the construction.

Rows are split into blocks R_1..R_{n0} with |R_i| = x_i followed by the
remaining rows R*; columns likewise. The grid then decomposes into

    F_i = R_i x C_i
    H_i = R_i x (C* u C_{i+1} u ...)
    J_i = (R* u R_{i+1} u ...) x C_i
    R* x C*

Symbols split into classes N_1..N_{n0} (|N_i| = 2 x_i - 1), B and A.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleParams, PlanOverflow
from .seq import (
    DEFAULT_CX,
    SequencePlan,
    as_fraction,
    build_sequence_plan,
    floor_log_multiple,
)

DEFAULT_CB = Fraction(1, 20)
VARIANTS = ("plain", "symmetric", "bipartite_deleted")
SLACK_MODES = ("paper", "tight")
FILLS = ("balanced", "random")

# symbol class codes in SymbolPartition.label
CLASS_A = 0
CLASS_B = -1
UNASSIGNED = -2


@dataclass(frozen=True)
class ConstructionParams:
    n: int
    cx: Fraction = DEFAULT_CX
    slack_mode: str = "paper"
    b: int | None = None  # None: floor(cb * ln n)
    cb: Fraction = DEFAULT_CB
    fill: str = "balanced"
    seed: int = 0
    variant: str = "plain"
    pad: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cx", as_fraction(self.cx))
        object.__setattr__(self, "cb", as_fraction(self.cb))
        if self.cx <= 0 or self.cb <= 0:
            raise ValueError("cx and cb must be positive")
        if self.slack_mode not in SLACK_MODES:
            raise ValueError(f"slack_mode must be one of {SLACK_MODES}")
        if self.fill not in FILLS:
            raise ValueError(f"fill must be one of {FILLS}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.b is not None and self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.pad < 0:
            raise ValueError("pad must be nonnegative")

    @property
    def m(self) -> int:
        return self.n - 2 if self.variant == "bipartite_deleted" else self.n

    @property
    def b_size(self) -> int:
        if self.b is not None:
            return self.b
        return floor_log_multiple(self.cb, self.n)


class Region(NamedTuple):
    kind: str  # "F", "H", "J" or "STAR"
    index: int | None = None

    def __str__(self):
        return self.kind if self.index is None else f"{self.kind}({self.index})"


STAR = Region("STAR")


@dataclass(frozen=True, eq=False)
class RegionLayout:
    """Block labels per row and column: 0 for the star part, i for block i."""

    n: int
    xs: tuple[int, ...]
    row_label: np.ndarray
    col_label: np.ndarray
    cx: Fraction | None = None
    slack_mode: str | None = None

    @property
    def n0(self) -> int:
        return len(self.xs)

    @property
    def prefix_sums(self) -> tuple[int, ...]:
        out, s = [], 0
        for x in self.xs:
            s += x
            out.append(s)
        return tuple(out)

    def S(self, i: int) -> int:
        return self.prefix_sums[i - 1] if i >= 1 else 0

    def rows_of(self, i: int) -> np.ndarray:
        """1-indexed rows of block i (0 for R*)."""
        return np.flatnonzero(self.row_label == i) + 1

    def cols_of(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.col_label == i) + 1

    def row_keys(self) -> np.ndarray:
        """Block order key per row; the star part sorts last (n0 + 1)."""
        return np.where(self.row_label > 0, self.row_label, self.n0 + 1)

    def col_keys(self) -> np.ndarray:
        return np.where(self.col_label > 0, self.col_label, self.n0 + 1)

    def is_canonical(self) -> bool:
        canon = canonical_labels(self.n, self.xs)
        return np.array_equal(self.row_label, canon) and np.array_equal(self.col_label, canon)

    def region_sizes(self, i: int) -> dict[str, int]:
        x = self.xs[i - 1]
        rest = self.n - self.S(i)
        return {"F": x * x, "H": x * rest, "J": x * rest}

    def __eq__(self, other):
        if not isinstance(other, RegionLayout):
            return NotImplemented
        return (
            self.n == other.n
            and self.xs == other.xs
            and np.array_equal(self.row_label, other.row_label)
            and np.array_equal(self.col_label, other.col_label)
            and self.cx == other.cx
            and self.slack_mode == other.slack_mode
        )


@dataclass(frozen=True, eq=False)
class SymbolPartition:
    """``label[s]`` is i for N_i, CLASS_B, CLASS_A; index 0 is unused."""

    m: int
    label: np.ndarray
    n0: int = 0

    def N(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.label == i)

    @property
    def B(self) -> np.ndarray:
        return np.flatnonzero(self.label == CLASS_B)

    @property
    def A(self) -> np.ndarray:
        out = np.flatnonzero(self.label == CLASS_A)
        return out[out > 0]

    @property
    def b_size(self) -> int:
        return int(np.count_nonzero(self.label[1:] == CLASS_B))

    def class_sizes(self) -> list[int]:
        return [int(np.count_nonzero(self.label == i)) for i in range(1, self.n0 + 1)]

    def __eq__(self, other):
        if not isinstance(other, SymbolPartition):
            return NotImplemented
        return self.m == other.m and self.n0 == other.n0 and np.array_equal(self.label, other.label)


def canonical_labels(n: int, xs) -> np.ndarray:
    lab = np.zeros(n, dtype=np.int32)
    pos = 0
    for i, x in enumerate(xs, start=1):
        lab[pos : pos + x] = i
        pos += x
    return lab


def make_layout(n: int, xs, cx=None, slack_mode=None) -> RegionLayout:
    """Canonical layout: block i takes the next x_i rows (and columns)."""
    xs = tuple(int(x) for x in xs)
    if any(x < 1 for x in xs):
        raise ValueError("block sizes must be positive")
    if sum(xs) > n:
        raise PlanOverflow(sum(xs), n)
    lab = canonical_labels(n, xs)
    return RegionLayout(
        n=n,
        xs=xs,
        row_label=lab,
        col_label=lab.copy(),
        cx=None if cx is None else as_fraction(cx),
        slack_mode=slack_mode,
    )


def make_partition(m: int, n_sizes, b_size: int) -> SymbolPartition:
    """Consecutive symbol ids: N_1, ..., N_{n0}, then B, then A."""
    label = np.full(m + 1, CLASS_A, dtype=np.int32)
    label[0] = UNASSIGNED
    pos = 1
    for i, k in enumerate(n_sizes, start=1):
        label[pos : pos + k] = i
        pos += k
    label[pos : pos + b_size] = CLASS_B
    pos += b_size
    if pos - 1 > m:
        raise ValueError("symbol classes exceed m")
    return SymbolPartition(m=m, label=label, n0=len(n_sizes))


def region_of(layout: RegionLayout, row: int, col: int) -> Region:
    rl = int(layout.row_label[row - 1])
    cl = int(layout.col_label[col - 1])
    if rl == 0 and cl == 0:
        return STAR
    rk = rl if rl else layout.n0 + 1
    ck = cl if cl else layout.n0 + 1
    if rk == ck:
        return Region("F", rl)
    if rk < ck:
        return Region("H", rl)
    return Region("J", cl)


# -- feasibility ---------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    """``lhs <= rhs`` must hold; ``where`` names the worst block if any."""

    name: str
    lhs: int
    rhs: int
    where: int | None = None

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def margin(self) -> int:
        return self.rhs - self.lhs


def deleted_cells(n: int) -> list[tuple[int, int]]:
    """Cells (i, i) and (i, i+1 mod n), 1-indexed."""
    out = [(i, i) for i in range(1, n + 1)]
    out += [(i, i % n + 1) for i in range(1, n + 1)]
    return out


def _deletions_per_region(layout: RegionLayout) -> tuple[dict[int, int], int]:
    hj = {}
    f = 0
    for r, c in deleted_cells(layout.n):
        reg = region_of(layout, r, c)
        if reg.kind == "F":
            f += 1
        elif reg.kind in ("H", "J"):
            hj[reg.index] = hj.get(reg.index, 0) + 1
    return hj, f


def feasibility(p: ConstructionParams, plan: SequencePlan | None = None) -> list[Condition]:
    """Evaluate the layout conditions in order; stops after a failed F1."""
    n, m = p.n, p.m
    try:
        plan = plan or build_sequence_plan(n, p.cx)
    except PlanOverflow as e:
        return [Condition("F1", e.total, n)]
    conds = [Condition("F1", plan.total, n)]
    b = p.b_size

    if plan.n0:
        if p.slack_mode == "tight":
            # n (2x - 1) <= 2 x (n - S_i)
            vals = [
                (n * (2 * x - 1) - 2 * x * (n - s), i)
                for i, (x, s) in enumerate(zip(plan.xs, plan.prefix_sums), start=1)
            ]
            worst, wi = max(vals)
            i = wi
            x, s = plan.xs[i - 1], plan.prefix_sums[i - 1]
            conds.append(Condition("F2", n * (2 * x - 1), 2 * x * (n - s), i))
        else:
            vals = [
                (4 * x * s, i) for i, (x, s) in enumerate(zip(plan.xs, plan.prefix_sums), start=1)
            ]
            worst, wi = max(vals)
            conds.append(Condition("F2", worst, n, wi))
    else:
        conds.append(Condition("F2", 0, 0))

    sum_sq = sum(x * x for x in plan.xs)
    conds.append(Condition("F3", n * b, sum_sq))
    conds.append(Condition("F4", b + sum(2 * x - 1 for x in plan.xs), m))

    if p.variant == "bipartite_deleted" and n >= 3:
        lay = make_layout(n, plan.xs)
        hj_del, f_del = _deletions_per_region(lay)
        worst = None
        for i, (x, s) in enumerate(zip(plan.xs, plan.prefix_sums), start=1):
            cap = 2 * x * (n - s) - hj_del.get(i, 0)
            c = Condition("F2-adjusted", n * (2 * x - 1), cap, i)
            if worst is None or c.margin < worst.margin:
                worst = c
        if worst is not None:
            conds.append(worst)
        conds.append(Condition("F3-adjusted", n * b, sum_sq - f_del))
    return conds


def plan_layout(p: ConstructionParams) -> tuple[RegionLayout, SymbolPartition]:
    if p.n < 2:
        raise ValueError("n must be at least 2")
    if p.variant == "bipartite_deleted" and p.n < 3:
        raise ValueError("the deleted-diagonal variant needs n >= 3")
    conds = feasibility(p)
    for c in conds:
        if not c.ok:
            detail = f"block {c.where}" if c.where is not None else ""
            raise InfeasibleParams(c.name, c.lhs, c.rhs, detail)
    plan = build_sequence_plan(p.n, p.cx)
    if p.slack_mode == "paper" and p.cx == DEFAULT_CX:
        for x, s in zip(plan.xs, plan.prefix_sums):
            # the per-part criterion must imply the exact capacity criterion
            assert 2 * x * (p.n - s) >= p.n * (2 * x - 1)
    layout = make_layout(p.n, plan.xs, cx=p.cx, slack_mode=p.slack_mode)
    part = make_partition(p.m, [2 * x - 1 for x in plan.xs], p.b_size)
    return layout, part


def max_feasible_b(n: int, cx=DEFAULT_CX, slack_mode: str = "paper", variant: str = "plain") -> int | None:
    """Largest |B| passing F1-F4, or None when F1/F2 fail regardless of |B|."""
    p = ConstructionParams(n=n, cx=cx, slack_mode=slack_mode, b=0, variant=variant)
    conds = {c.name: c for c in feasibility(p)}
    if not all(c.ok for c in conds.values()):
        return None
    f3 = conds.get("F3-adjusted", conds["F3"])
    by_room = f3.rhs // n
    by_symbols = conds["F4"].rhs - conds["F4"].lhs
    return min(by_room, by_symbols)


def _fast_feasible(n: int, cx: Fraction, k: int, slack_mode: str) -> bool:
    """F1-F4 for explicit |B| = k in O(sqrt n) using runs of equal x_t."""
    p, q = cx.numerator, cx.denominator
    top, qq = p * p * n, q * q
    # T[k] = #{t : x_t >= k}
    T = []
    j = 1
    while True:
        c = top // (qq * j * j)
        if c == 0:
            break
        T.append(c)
        j += 1
    if not T:
        return k == 0
    K = len(T)
    suffix = [0] * (K + 1)
    for j in range(K - 1, -1, -1):
        suffix[j] = suffix[j + 1] + T[j]
    total = suffix[0]
    if total > n:
        return False
    # S at the end of the run where x_t = v: v * T_v + sum_{j > v} T_j
    for v in range(1, K + 1):
        if v < K and T[v - 1] == T[v]:
            continue  # empty run
        s = v * T[v - 1] + suffix[v]
        if slack_mode == "tight":
            if n * (2 * v - 1) > 2 * v * (n - s):
                return False
        elif 4 * v * s > n:
            return False
    sum_sq = sum((2 * v - 1) * T[v - 1] for v in range(1, K + 1))
    if n * k > sum_sq:
        return False
    return k + 2 * total - T[0] <= n


def min_feasible_n(k: int, cx=DEFAULT_CX, slack_mode: str = "paper", n_max: int = 10**7) -> int | None:
    """First n found making explicit |B| = k feasible (plain variant).

    Feasibility is not monotone in n, so this scans upward in 1% steps and
    then refines linearly inside the first bracket that succeeds. The answer
    is the smallest feasible n among the values checked.
    """
    cx = as_fraction(cx)
    prev = 1
    n = 2
    while n <= n_max:
        if _fast_feasible(n, cx, k, slack_mode):
            for cand in range(prev + 1, n + 1):
                if _fast_feasible(cand, cx, k, slack_mode):
                    return cand
        prev = n
        n = max(n + 1, n * 101 // 100)
    return None


# -- JSON ----------------------------------------------------------------------

LAYOUT_FORMAT = "stein-layout/1"


def _order_from_labels(label: np.ndarray, key: np.ndarray) -> list[int]:
    return (np.argsort(key, kind="stable") + 1).tolist()


def _labels_from_order(order, canon: np.ndarray) -> np.ndarray:
    if sorted(order) != list(range(1, len(canon) + 1)):
        raise ValueError("order is not a permutation")
    lab = np.empty_like(canon)
    lab[np.asarray(order, dtype=np.int64) - 1] = canon
    return lab


def _symbol_keys(part: SymbolPartition) -> np.ndarray:
    lab = part.label[1:]
    return np.where(lab > 0, lab, np.where(lab == CLASS_B, part.n0 + 1, part.n0 + 2))


def layout_to_dict(layout: RegionLayout, part: SymbolPartition) -> dict:
    bounds = list(layout.prefix_sums)
    sizes = part.class_sizes() + [part.b_size]
    sym_bounds, s = [], 0
    for k in sizes:
        s += k
        sym_bounds.append(s)
    sym_bounds.append(part.m)
    d = {
        "format": LAYOUT_FORMAT,
        "n": layout.n,
        "m": part.m,
        "cx": None if layout.cx is None else f"{layout.cx.numerator}/{layout.cx.denominator}",
        "xs": list(layout.xs),
        "row_bounds": bounds,
        "col_bounds": list(bounds),
        "symbol_bounds": sym_bounds,
        "slack_mode": layout.slack_mode,
        "b_size": part.b_size,
    }
    row_order = _order_from_labels(layout.row_label, layout.row_keys())
    col_order = _order_from_labels(layout.col_label, layout.col_keys())
    sym_order = (np.argsort(_symbol_keys(part), kind="stable") + 1).tolist()
    ident = list(range(1, layout.n + 1))
    if row_order != ident:
        d["row_order"] = row_order
    if col_order != ident:
        d["col_order"] = col_order
    if sym_order != list(range(1, part.m + 1)):
        d["symbol_order"] = sym_order
    return d


def layout_from_dict(d: dict) -> tuple[RegionLayout, SymbolPartition]:
    if d.get("format") != LAYOUT_FORMAT:
        raise ValueError(f"unknown layout format {d.get('format')!r}")
    n, m = int(d["n"]), int(d["m"])
    xs = tuple(int(x) for x in d["xs"])
    canon = canonical_labels(n, xs)
    bounds = list(make_layout(n, xs).prefix_sums)
    if d["row_bounds"] != bounds or d["col_bounds"] != bounds:
        raise ValueError("row/column bounds disagree with xs")
    row_label = _labels_from_order(d["row_order"], canon) if "row_order" in d else canon
    col_label = _labels_from_order(d["col_order"], canon) if "col_order" in d else canon.copy()
    layout = RegionLayout(
        n=n,
        xs=xs,
        row_label=row_label,
        col_label=col_label,
        cx=None if d.get("cx") is None else as_fraction(d["cx"]),
        slack_mode=d.get("slack_mode"),
    )
    sb = [int(v) for v in d["symbol_bounds"]]
    if len(sb) != len(xs) + 2 or sb[-1] != m or any(b2 < b1 for b1, b2 in zip([0] + sb, sb)):
        raise ValueError("malformed symbol_bounds")
    canon_sym = np.empty(m, dtype=np.int32)
    prev = 0
    for i, end in enumerate(sb[: len(xs)], start=1):
        canon_sym[prev:end] = i
        prev = end
    canon_sym[prev : sb[-2]] = CLASS_B
    canon_sym[sb[-2] :] = CLASS_A
    label = np.empty(m + 1, dtype=np.int32)
    label[0] = UNASSIGNED
    if "symbol_order" in d:
        label[1:] = _labels_from_order(d["symbol_order"], canon_sym)
    else:
        label[1:] = canon_sym
    return layout, SymbolPartition(m=m, label=label, n0=len(xs))


def layout_to_json(layout: RegionLayout, part: SymbolPartition) -> str:
    return json.dumps(layout_to_dict(layout, part), sort_keys=True, separators=(",", ":")) + "\n"


def layout_from_json(text: str) -> tuple[RegionLayout, SymbolPartition]:
    return layout_from_dict(json.loads(text))


def layout_digest(layout: RegionLayout, part: SymbolPartition) -> str:
    return hashlib.sha256(layout_to_json(layout, part).encode()).hexdigest()
