"""Instance generation.

Synthetic instances come from recursively cutting a random cuboid, so each
one ships a zero-dead ground-truth expression. MCNC-style instances take 2D
footprints, sample depths, and can be shrunk into composite modules.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

from .anneal import SaPreset, anneal, enumerate_all
from .compaction import compact_xyz
from .geometry import Dims, Floorplan, ModuleSpec, Placement, ProblemInstance
from .tree import CutAxis, Internal, Leaf, PostOrderExpr, SlicingNode, decode_postorder, encode_postorder, realize

_AXES = (CutAxis.H, CutAxis.V, CutAxis.D)


def derive_seed(master: int, *keys) -> int:
    """Deterministic 64-bit child seed of ``master`` for the given key path."""
    text = ":".join(str(x) for x in (master, *keys))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


class Unsplittable(RuntimeError):
    pass


class SizeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    n_modules: int = 8
    # inclusive integer sampling interval per axis (w, h, d)
    dim_ranges: tuple[tuple[int, int], ...] = ((16, 64), (16, 64), (16, 64))
    seed: int = 0

    def __post_init__(self):
        if self.n_modules < 1:
            raise ValueError("n_modules must be >= 1")
        if len(self.dim_ranges) != 3:
            raise ValueError("need one sampling range per axis")
        for lo, hi in self.dim_ranges:
            if lo > hi:
                raise ValueError(f"empty sampling range [{lo}, {hi}]")
            if lo < self.n_modules:
                raise ValueError(f"range minimum {lo} is below n_modules={self.n_modules}")


@dataclass(frozen=True)
class LabeledInstance:
    instance: ProblemInstance
    ground_truth: PostOrderExpr
    source_cuboid: Dims


class _Region:
    __slots__ = ("dims", "split")

    def __init__(self, dims):
        self.dims = dims
        self.split = None  # (axis, left, right)


def _partition(base: tuple[int, int, int], n: int, rng: random.Random) -> _Region:
    root = _Region(base)
    leaves = [root]
    while len(leaves) < n:
        splittable = [i for i, r in enumerate(leaves) if max(r.dims) >= 2]
        if not splittable:
            raise Unsplittable(f"no region can be split further after {len(leaves)} modules")
        i = rng.choice(splittable)
        region = leaves[i]
        k = rng.choice([a for a in range(3) if region.dims[a] >= 2])
        cut = rng.randint(1, region.dims[k] - 1)
        lo, hi = list(region.dims), list(region.dims)
        lo[k] = cut
        hi[k] = region.dims[k] - cut
        left, right = _Region(tuple(lo)), _Region(tuple(hi))
        region.split = (k, left, right)
        leaves[i : i + 1] = [left, right]
    return root


def _label(root: _Region) -> tuple[SlicingNode, list[Dims]]:
    """Number leaves left to right and build the slicing tree."""
    dims: list[Dims] = []

    def walk(r: _Region) -> SlicingNode:
        if r.split is None:
            dims.append(Dims(*r.dims))
            return Leaf(len(dims) - 1)
        k, left, right = r.split
        a = walk(left)
        b = walk(right)
        return Internal(_AXES[k], a, b)

    return walk(root), dims


def _generate(cfg: GenConfig, scale: Sequence[int]) -> LabeledInstance:
    rng = random.Random(cfg.seed)
    base = tuple(rng.randint(lo, hi) * s for (lo, hi), s in zip(cfg.dim_ranges, scale))
    tree, dims = _label(_partition(base, cfg.n_modules, rng))
    inst = ProblemInstance.from_dims(dims, meta={"seed": cfg.seed, "source_cuboid": list(base)})
    return LabeledInstance(inst, encode_postorder(tree), Dims(*base))


def generate_synthetic(cfg: GenConfig) -> LabeledInstance:
    return _generate(cfg, (1, 1, 1))


def generate_enlarged(cfg: GenConfig, scale: Sequence[int] = (10, 10, 10)) -> LabeledInstance:
    """As generate_synthetic, with the base cuboid multiplied per axis."""
    scale = tuple(scale)
    if len(scale) != 3 or any(s < 1 for s in scale):
        raise ValueError(f"scale needs three factors >= 1, got {scale}")
    return _generate(cfg, scale)


# -- MCNC-derived instances -------------------------------------------------------


@dataclass(frozen=True)
class McncDeriveConfig:
    seed: int = 0
    # explicit (d_min, d_max); default is the case's min/max lateral extent
    depth_range: tuple[int, int] | None = None
    group_sizes: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.depth_range is not None:
            lo, hi = self.depth_range
            if not 0 < lo <= hi:
                raise ValueError(f"invalid depth range {self.depth_range}")


def depth_range(modules_2d: Sequence[tuple[str, int, int]]) -> tuple[int, int]:
    lateral = [v for _, w, h in modules_2d for v in (w, h)]
    return min(lateral), max(lateral)


def derive_3d(modules_2d: Sequence[tuple[str, int, int]], cfg: McncDeriveConfig = McncDeriveConfig()) -> ProblemInstance:
    """Keep each footprint and draw an integer depth uniformly from [d_min, d_max]."""
    if not modules_2d:
        raise ValueError("empty module list")
    for label, w, h in modules_2d:
        if w <= 0 or h <= 0:
            raise ValueError(f"module {label} has non-positive footprint {w}x{h}")
    lo, hi = cfg.depth_range or depth_range(modules_2d)
    rng = random.Random(cfg.seed)
    dims = [(w, h, rng.randint(lo, hi)) for _, w, h in modules_2d]
    meta = {"source_labels": [str(m[0]) for m in modules_2d], "depth_range": [lo, hi], "seed": cfg.seed}
    return ProblemInstance.from_dims(dims, meta=meta)


@dataclass(frozen=True)
class Composite:
    """One group: member module ids and their arrangement inside the box."""

    group_id: int
    members: tuple[int, ...]
    layout: Floorplan  # placements carry original module ids
    expr: str  # arrangement over the renumbered members (member i -> p<i>)

    @property
    def dims(self) -> Dims:
        return self.layout.bounding


def assign_groups(volumes: Sequence[int], sizes: Sequence[int]) -> list[list[int]]:
    """Largest first, each to the lightest group that still has room."""
    if sum(sizes) != len(volumes):
        raise SizeMismatch(f"group sizes sum to {sum(sizes)} but there are {len(volumes)} modules")
    if any(s < 1 for s in sizes):
        raise SizeMismatch(f"group sizes must be positive, got {list(sizes)}")
    groups: list[list[int]] = [[] for _ in sizes]
    load = [0] * len(sizes)
    for i in sorted(range(len(volumes)), key=lambda i: (-volumes[i], i)):
        open_groups = [g for g in range(len(sizes)) if len(groups[g]) < sizes[g]]
        g = min(open_groups, key=lambda g: (load[g], g))
        groups[g].append(i)
        load[g] += volumes[i]
    return groups


def arrange_members(sub: ProblemInstance, seed: int = 0, exhaustive_limit: int = 4,
                    sa_budget: float | None = 5.0) -> PostOrderExpr:
    """Best slicing arrangement of a small instance: exhaustive up to
    ``exhaustive_limit`` modules, otherwise a short SA-Fast run."""
    if len(sub) <= exhaustive_limit:
        return enumerate_all(sub, limit=exhaustive_limit).best
    best, _ = anneal(sub, SaPreset.FAST.config(seed=seed, time_budget=sa_budget))
    return best


def group_composites(inst: ProblemInstance, sizes: Sequence[int], seed: int = 0) -> tuple[ProblemInstance, list[Composite]]:
    """Shrink ``inst`` to one composite module per group.

    Members of each group are arranged (see arrange_members), realised and
    compacted; the composite's dims are the compacted bounding box.
    """
    groups = assign_groups([m.dims.volume for m in inst.modules], sizes)
    composites = []
    for g, members in enumerate(groups):
        members = sorted(members)
        sub = ProblemInstance.from_dims([inst.modules[i].dims for i in members])
        expr = arrange_members(sub, seed=derive_seed(seed, "group", g))
        local = compact_xyz(realize(decode_postorder(expr, sub), sub))
        layout = Floorplan.from_placements(
            Placement(members[p.module_id], p.origin, p.dims) for p in local.placements
        )
        composites.append(Composite(g, tuple(members), layout, str(expr)))
    meta = {"composite_of": inst.name or None, "group_sizes": list(sizes),
            "members": [list(c.members) for c in composites]}
    comp = ProblemInstance.from_dims([c.dims for c in composites], meta=meta)
    return comp, composites


def expand_layout(plan: Floorplan, composites: Sequence[Composite]) -> Floorplan:
    """Replace each composite placement by its members, offset by its origin."""
    out = []
    for p in plan.placements:
        c = composites[p.module_id]
        ox, oy, oz = p.origin
        for q in c.layout.placements:
            x, y, z = q.origin
            out.append(Placement(q.module_id, (ox + x, oy + y, oz + z), q.dims))
    return Floorplan.from_placements(out)
