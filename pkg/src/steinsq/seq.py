"""Block-size sequence x_t = floor(cx * sqrt(n / t)) and its inequalities.

Everything except the two logarithmic comparisons in :func:`check_squares`
is exact integer arithmetic. The logarithms are evaluated with interval
arithmetic whose precision is raised until the comparison is decided.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from mpmath import iv

from .errors import PlanOverflow

DEFAULT_CX = Fraction(1, 3)


def as_fraction(value) -> Fraction:
    """Parse ``"p/q"``, an int or a Fraction. Floats are rejected."""
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"exact rational required, got {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        s = value.strip()
        if "." in s or "e" in s.lower():
            raise ValueError(f"expected p/q, got {value!r}")
        return Fraction(s)
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def x_value(n: int, t: int, cx=DEFAULT_CX) -> int:
    """Largest k >= 0 with k <= cx * sqrt(n / t).

    With cx = p/q this is the largest k with k^2 q^2 t <= p^2 n.
    """
    cx = as_fraction(cx)
    p, q = cx.numerator, cx.denominator
    return isqrt((p * p * n) // (q * q * t))


@dataclass(frozen=True)
class SequencePlan:
    n: int
    cx: Fraction
    xs: tuple[int, ...]
    prefix_sums: tuple[int, ...]

    @property
    def n0(self) -> int:
        return len(self.xs)

    @property
    def total(self) -> int:
        """S_{n0}, the number of rows consumed by the blocks."""
        return self.prefix_sums[-1] if self.prefix_sums else 0

    def x(self, t: int) -> int:
        """1-indexed access; zero past n0."""
        return self.xs[t - 1] if 1 <= t <= self.n0 else 0

    def S(self, t: int) -> int:
        if t <= 0:
            return 0
        return self.prefix_sums[min(t, self.n0) - 1]


def build_sequence_plan(n: int, cx=DEFAULT_CX) -> SequencePlan:
    """Enumerate x_1, x_2, ... until the first zero.

    n0 may be 0 when n is small (for cx = 1/3 this happens for n < 9); the
    plan is then empty and every block-indexed statement is vacuous.
    """
    if n < 1:
        raise ValueError("n must be positive")
    cx = as_fraction(cx)
    if cx <= 0:
        raise ValueError("cx must be positive")
    p, q = cx.numerator, cx.denominator
    top = p * p * n
    qq = q * q
    xs = []
    sums = []
    s = 0
    t = 1
    while True:
        k = isqrt(top // (qq * t))
        if k == 0:
            break
        xs.append(k)
        s += k
        sums.append(s)
        t += 1
    # x_t >= 1 iff q^2 t <= p^2 n, so the scan must stop at floor(cx^2 n)
    assert len(xs) == (top // qq), (len(xs), top // qq)
    if s > n:
        raise PlanOverflow(s, n, f"cx = {cx}")
    return SequencePlan(n=n, cx=cx, xs=tuple(xs), prefix_sums=tuple(sums))


@dataclass(frozen=True)
class P1Report:
    holds: bool
    worst_t: int | None
    worst_value: int


def check_p1(plan: SequencePlan) -> P1Report:
    """Check 4 * x_t * S_t <= n for every t <= n0."""
    worst_t = None
    worst = 0
    for t, (x, s) in enumerate(zip(plan.xs, plan.prefix_sums), start=1):
        v = x * s
        if v > worst:
            worst, worst_t = v, t
    return P1Report(holds=4 * worst <= plan.n, worst_t=worst_t, worst_value=worst)


@dataclass(frozen=True)
class SquaresReport:
    sum_sq: int
    intermediate_holds: bool
    paper_bound_holds: bool


def _decide_ge(lhs: int, rhs) -> bool:
    """Decide ``lhs >= rhs(ctx)`` for a real expression evaluated on intervals.

    Precision doubles until the interval lies on one side of ``lhs``. For
    the expressions used here equality can only happen when the logarithm is
    exactly zero, in which case the interval is a point.
    """
    prec = 64
    saved = iv.prec
    try:
        while True:
            iv.prec = prec
            r = rhs()
            lo, hi = r.a, r.b
            if lhs >= hi:
                return True
            if lhs < lo:
                return False
            if lo == hi:
                return lhs >= lo
            if prec > 1 << 14:
                # cannot happen for integer n >= 1; fall back to the safe side
                return True
            prec *= 2
    finally:
        iv.prec = saved


def check_squares(plan: SequencePlan) -> SquaresReport:
    """Sum of x_i^2 against two logarithmic lower bounds.

    ``intermediate_holds`` compares against cx^2 n ln n - 4 cx n, which is
    the bound just before the final weakening; for cx = 1/3 it reads
    (n/9) ln n - (4/3) n. ``paper_bound_holds`` compares against n ln n / 10,
    which is only guaranteed for astronomically large n.
    """
    n = plan.n
    cx = plan.cx
    sum_sq = sum(x * x for x in plan.xs)
    a = iv.mpf(cx.numerator) / cx.denominator

    def intermediate():
        return a * a * n * iv.log(n) - 4 * a * n

    def paper():
        return n * iv.log(n) / 10

    return SquaresReport(
        sum_sq=sum_sq,
        intermediate_holds=_decide_ge(sum_sq, intermediate),
        paper_bound_holds=_decide_ge(sum_sq, paper),
    )


def sum_of_squares_fast(n: int, cx=DEFAULT_CX) -> int:
    """Sum of x_t^2 over t >= 1 in O(sqrt n) steps.

    Uses x_t >= k iff t <= floor(p^2 n / (q^2 k^2)), so the sum equals
    sum_k (2k - 1) * #{t : x_t >= k}.
    """
    cx = as_fraction(cx)
    p, q = cx.numerator, cx.denominator
    top = p * p * n
    total = 0
    k = 1
    while True:
        count = top // (q * q * k * k)
        if count == 0:
            return total
        total += (2 * k - 1) * count
        k += 1


def floor_log_multiple(c, n: int) -> int:
    """floor(c * ln n) for a positive rational c, decided exactly."""
    c = as_fraction(c)
    if n == 1:
        return 0
    prec = 64
    saved = iv.prec
    try:
        while True:
            iv.prec = prec
            v = iv.mpf(c.numerator) / c.denominator * iv.log(n)
            lo, hi = int(v.a), int(v.b)  # int() truncates toward zero; v > 0
            if lo == hi:
                return lo
            prec *= 2
    finally:
        iv.prec = saved
