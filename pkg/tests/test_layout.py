from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from steinsq.construct import shuffle, build
from steinsq.errors import InfeasibleParams
from steinsq.layout import (
    STAR,
    ConstructionParams,
    Region,
    _fast_feasible,
    feasibility,
    layout_digest,
    layout_from_json,
    layout_to_json,
    make_layout,
    max_feasible_b,
    min_feasible_n,
    plan_layout,
    region_of,
)
from steinsq.seq import build_sequence_plan

HALF = Fraction(1, 2)


def test_explicit_b_infeasible_n36():
    with pytest.raises(InfeasibleParams) as ei:
        plan_layout(ConstructionParams(n=36, b=1))
    e = ei.value
    assert (e.condition, e.lhs, e.rhs) == ("F3", 36, 7)
    assert "36 > 7" in str(e)


def test_auto_b_n36():
    layout, part = plan_layout(ConstructionParams(n=36))
    assert part.b_size == 0
    assert part.class_sizes() == [3, 1, 1, 1]
    assert len(part.A) == 30
    assert layout.xs == (2, 1, 1, 1)


def test_scaled_constants_admit_one_b_symbol():
    p = ConstructionParams(n=10_000, cx=HALF, slack_mode="tight", b=1)
    conds = {c.name: c for c in feasibility(p)}
    assert all(c.ok for c in conds.values())
    assert conds["F3"].rhs == 17410 >= 10_000
    assert conds["F2"].margin == 1136
    assert max_feasible_b(10_000, HALF, "tight") == 1
    layout, part = plan_layout(p)
    assert part.b_size == 1


def test_star_part_is_large():
    layout, _ = plan_layout(ConstructionParams(n=900))
    assert len(layout.rows_of(0)) == len(layout.cols_of(0)) == 747 >= 675


def test_region_examples():
    layout, _ = plan_layout(ConstructionParams(n=36))
    assert region_of(layout, 1, 1) == Region("F", 1)
    assert region_of(layout, 1, 36) == Region("H", 1)
    assert region_of(layout, 36, 36) == STAR
    assert region_of(layout, 36, 1) == Region("J", 1)
    assert region_of(layout, 3, 4) == Region("H", 2)  # row block 2, column block 3
    assert str(region_of(layout, 5, 5)) == "F(4)"


def _brute_region(n, xs, r, c):
    # explicit index sets, straight from the definitions
    blocks, pos = [], 1
    for x in xs:
        blocks.append(set(range(pos, pos + x)))
        pos += x
    star = set(range(pos, n + 1))
    for i, R in enumerate(blocks, start=1):
        later_cols = star.union(*blocks[i:])
        if r in R and c in R:
            return Region("F", i)
        if r in R and c in later_cols:
            return Region("H", i)
        if c in R and r in later_cols:
            return Region("J", i)
    assert r in star and c in star
    return STAR


@pytest.mark.parametrize("n", [9, 36, 37, 81, 200])
def test_region_of_matches_definitions(n):
    xs = build_sequence_plan(n).xs
    layout = make_layout(n, xs)
    sizes = {}
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            reg = region_of(layout, r, c)
            assert reg == _brute_region(n, xs, r, c)
            sizes[reg] = sizes.get(reg, 0) + 1
    for i in range(1, layout.n0 + 1):
        want = layout.region_sizes(i)
        assert sizes[Region("F", i)] == want["F"]
        assert sizes.get(Region("H", i), 0) == want["H"]
        assert sizes.get(Region("J", i), 0) == want["J"]
    star = n - layout.S(layout.n0)
    assert sizes.get(STAR, 0) == star * star
    assert sum(sizes.values()) == n * n


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 5000), st.sampled_from([Fraction(1, 3), HALF, Fraction(2, 5)]))
def test_partition_area(n, cx):
    plan = build_sequence_plan(n, cx)
    if plan.total > n:
        return
    layout = make_layout(n, plan.xs)
    area = (n - plan.total) ** 2
    for i in range(1, layout.n0 + 1):
        s = layout.region_sizes(i)
        area += s["F"] + s["H"] + s["J"]
    assert area == n * n


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 50_000))
def test_coarse_criterion_implies_tight(n):
    plan = build_sequence_plan(n)
    for x, s in zip(plan.xs, plan.prefix_sums):
        if 4 * x * s <= n:
            assert 2 * x * (n - s) >= n * (2 * x - 1)


@pytest.mark.parametrize("cx", [Fraction(1, 3), HALF])
@pytest.mark.parametrize("slack", ["paper", "tight"])
def test_fast_feasibility_matches_full_check(cx, slack):
    for n in list(range(2, 400, 7)) + [1617, 9000, 10_000, 20_011]:
        for k in (0, 1, 2):
            p = ConstructionParams(n=n, cx=cx, slack_mode=slack, b=k)
            slow = all(c.ok for c in feasibility(p))
            assert _fast_feasible(n, cx, k, slack) == slow, (n, k)


def test_min_feasible_n():
    assert min_feasible_n(1, HALF, "tight") == 400
    assert min_feasible_n(0) == 2
    n = min_feasible_n(1, HALF, "tight")
    assert all(c.ok for c in feasibility(ConstructionParams(n=n, cx=HALF, slack_mode="tight", b=1)))


@pytest.mark.slow
def test_min_feasible_n_default_constants():
    assert min_feasible_n(1) == 181476


def test_bipartite_capacities_n36():
    p = ConstructionParams(n=36, variant="bipartite_deleted")
    conds = {c.name: c for c in feasibility(p)}
    assert all(c.ok for c in conds.values())
    assert "F2-adjusted" in conds and "F3-adjusted" in conds
    assert p.m == 34


@pytest.mark.parametrize("seed", [None, 3])
def test_json_roundtrip(seed):
    g, layout, part = build(ConstructionParams(n=100, cx=HALF, slack_mode="tight"))
    g, layout, part = shuffle(g, layout, part, seed)
    text = layout_to_json(layout, part)
    lay2, part2 = layout_from_json(text)
    assert lay2 == layout and part2 == part
    assert layout_to_json(lay2, part2) == text
    assert layout_digest(lay2, part2) == layout_digest(layout, part)
    assert ("row_order" in text) == (seed is not None)


def test_json_rejects_inconsistent_bounds():
    layout, part = plan_layout(ConstructionParams(n=36))
    text = layout_to_json(layout, part).replace('"row_bounds":[2,3,4,5]', '"row_bounds":[2,3,4,6]')
    with pytest.raises(ValueError):
        layout_from_json(text)


def test_params_validation():
    with pytest.raises(ValueError):
        ConstructionParams(n=10, slack_mode="loose")
    with pytest.raises(ValueError):
        ConstructionParams(n=10, b=-1)
    with pytest.raises(TypeError):
        ConstructionParams(n=10, cx=0.5)
    assert ConstructionParams(n=10**60).b_size == 6
