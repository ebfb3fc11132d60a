import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spaceplan3d import Dims, Floorplan, Placement, ProblemInstance, compact_axis, compact_xyz, dead_ratio
from spaceplan3d import decode_postorder, realize
from spaceplan3d.compaction import OverlappingInput
from spaceplan3d.generate import GenConfig, generate_synthetic

from conftest import random_tree, tree_and_instance


def P(mid, origin, dims):
    return Placement(mid, origin, Dims(*dims))


def plan_of(*ps):
    return Floorplan.from_placements(ps)


def scatter_plan(rng: random.Random, n: int, extent: int = 12) -> Floorplan:
    """Random non-overlapping boxes; rejection sampling."""
    placed = []
    tries = 0
    while len(placed) < n and tries < 500:
        tries += 1
        d = (rng.randint(1, 4), rng.randint(1, 4), rng.randint(1, 4))
        o = tuple(rng.randint(0, extent) for _ in range(3))
        cand = P(len(placed), o, d)
        if not any(_overlap(cand, q) for q in placed):
            placed.append(cand)
    return Floorplan.from_placements(placed)


def _overlap(a, b):
    return all(a.origin[k] < b.corner[k] and b.origin[k] < a.corner[k] for k in range(3))


def test_gap_closure():
    plan = plan_of(P(0, (0, 0, 0), (2, 1, 1)), P(1, (5, 0, 0), (2, 1, 1)))
    out = compact_axis(plan, "X")
    assert out.placements[1].origin == (2, 0, 0)
    assert out.bounding == Dims(4, 1, 1)


def test_abutting_layout_is_fixed_point():
    plan = plan_of(P(0, (0, 0, 0), (2, 1, 1)), P(1, (2, 0, 0), (2, 1, 1)))
    assert compact_axis(plan, "X") == plan
    assert compact_xyz(plan) == plan


def test_disjoint_footprint_slides_to_zero():
    plan = plan_of(P(0, (0, 0, 0), (2, 2, 2)), P(1, (5, 5, 5), (2, 2, 2)))
    out = compact_axis(plan, "X")
    assert out.placements[1].origin == (0, 5, 5)


def test_module_drops_into_gap_below_settled_one():
    # p2 fits into the hole between p0 and p1 along X
    plan = plan_of(P(0, (0, 0, 0), (1, 1, 1)), P(1, (3, 0, 0), (1, 1, 1)), P(2, (6, 0, 0), (2, 1, 1)))
    out = compact_axis(plan, 0)
    assert [p.origin[0] for p in out.placements] == [0, 1, 2]


def test_single_module_unchanged():
    plan = plan_of(P(0, (0, 0, 0), (3, 4, 5)))
    assert compact_xyz(plan) == plan


def test_zero_dead_generator_layout_is_tight():
    li = generate_synthetic(GenConfig(n_modules=10, seed=3))
    plan = realize(decode_postorder(li.ground_truth, li.instance), li.instance)
    assert compact_xyz(plan) == plan


def test_slicing_layout_with_slack_shrinks():
    # D(p1, p2) is 3x3x4 with p1 (2x1x3) in its lower corner; p0 (1x2x3) starts
    # at x=3 but only p1 blocks it along X (p2 lies above z=3), so it slides to x=2.
    inst = ProblemInstance.from_dims([(1, 2, 3), (2, 1, 3), (3, 3, 1)])
    plan = realize(decode_postorder("p1;p2;D;p0;H", inst), inst)
    assert plan.bounding == Dims(4, 3, 4)
    out = compact_xyz(plan)
    assert out.placements[0].origin == (2, 0, 0)
    assert out.bounding == Dims(3, 3, 4)
    assert out.bounding.volume < plan.bounding.volume


def test_figure3_topology_is_already_tight():
    inst = ProblemInstance.from_dims([(1, 2, 3), (2, 1, 3), (3, 3, 1)])
    plan = realize(decode_postorder("p0;p1;H;p2;D", inst), inst)
    assert compact_xyz(plan) == plan


def test_overlapping_input_rejected():
    plan = plan_of(P(0, (0, 0, 0), (2, 2, 2)), P(1, (1, 1, 1), (2, 2, 2)))
    with pytest.raises(OverlappingInput):
        compact_axis(plan, "Y")
    with pytest.raises(OverlappingInput):
        compact_xyz(plan)


def test_bad_axis():
    with pytest.raises(ValueError):
        compact_axis(plan_of(P(0, (0, 0, 0), (1, 1, 1))), "W")


def _check(plan: Floorplan):
    out = compact_xyz(plan)
    assert not out.overlapping_pairs()
    assert out.bounding.volume <= plan.bounding.volume
    assert compact_xyz(out) == out
    before = {p.module_id: p for p in plan.placements}
    for p in out.placements:
        assert p.dims == before[p.module_id].dims
        assert all(c <= c0 for c, c0 in zip(p.origin, before[p.module_id].origin))
    return out


@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_properties_on_scattered_plans(seed, n):
    _check(scatter_plan(random.Random(seed), n))


@given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.sampled_from("XYZ"))
def test_single_axis_pass(seed, n, axis):
    plan = scatter_plan(random.Random(seed), n)
    out = compact_axis(plan, axis)
    k = "XYZ".index(axis)
    assert not out.overlapping_pairs()
    assert compact_axis(out, axis) == out
    before = {p.module_id: p for p in plan.placements}
    for p in out.placements:
        b = before[p.module_id]
        assert p.origin[k] <= b.origin[k]
        assert [p.origin[j] for j in range(3) if j != k] == [b.origin[j] for j in range(3) if j != k]


@given(tree_and_instance(min_n=1, max_n=12))
def test_compacted_ratio_never_worse_than_tree_ratio(ti):
    tree, inst = ti
    out = _check(realize(tree, inst))
    assert out.geometric_dead_ratio() <= dead_ratio(tree, inst) + 1e-12
