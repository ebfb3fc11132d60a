"""Greedy one-dimensional compaction toward the origin along X, Y and Z."""

from __future__ import annotations

from .geometry import Floorplan, Placement, cuboids_overlap

AXES = {"X": 0, "Y": 1, "Z": 2}


class OverlappingInput(ValueError):
    def __init__(self, pairs):
        self.pairs = pairs
        super().__init__(f"floorplan has overlapping modules: {pairs[:5]}")


def _axis_index(axis) -> int:
    if isinstance(axis, int):
        if axis not in (0, 1, 2):
            raise ValueError(f"axis index must be 0, 1 or 2, got {axis}")
        return axis
    try:
        return AXES[str(axis).upper()]
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}") from None


def _footprints_meet(a: Placement, b: Placement, k: int) -> bool:
    """Open-interval overlap on the two axes other than k."""
    a_lo, a_hi, b_lo, b_hi = a.origin, a.corner, b.origin, b.corner
    return all(a_lo[j] < b_hi[j] and b_lo[j] < a_hi[j] for j in range(3) if j != k)


def _settle(p: Placement, settled: list[Placement], k: int) -> int:
    size = p.dims.as_tuple()[k]
    blockers = sorted(
        (q.origin[k], q.corner[k]) for q in settled if _footprints_meet(p, q, k)
    )
    # lowest gap that fits; candidates are 0 and the far faces of blockers
    for c in [0] + [hi for _, hi in blockers]:
        if all(c + size <= lo or hi <= c for lo, hi in blockers):
            return c
    raise AssertionError("unreachable: the top of the highest blocker always fits")


def _check_legal(plan: Floorplan):
    pairs = plan.overlapping_pairs()
    if pairs:
        raise OverlappingInput(pairs)


def _compact_axis(plan: Floorplan, k: int) -> Floorplan:
    order = sorted(plan.placements, key=lambda p: (p.origin[k], p.module_id))
    settled: list[Placement] = []
    for p in order:
        c = _settle(p, settled, k)
        settled.append(p if c == p.origin[k] else p.moved(k, c))
    return Floorplan.from_placements(settled)


def compact_axis(plan: Floorplan, axis) -> Floorplan:
    """Sweep modules in ascending order on ``axis`` (ties by module id) and
    drop each to the lowest coordinate >= 0 where it clears every module
    already settled. Other coordinates are untouched."""
    _check_legal(plan)
    return _compact_axis(plan, _axis_index(axis))


def compact_xyz(plan: Floorplan, max_rounds: int = 1000) -> Floorplan:
    """X, then Y, then Z sweeps, repeated until a full round moves nothing.

    A single X/Y/Z round is not idempotent (a Z move can open room along X),
    so rounds repeat to a fixed point. Coordinates are non-negative integers
    that never increase, so this terminates.
    """
    _check_legal(plan)
    for _ in range(max_rounds):
        before = plan.placements
        for k in (0, 1, 2):
            plan = _compact_axis(plan, k)
        if plan.placements == before:
            break
    return plan
