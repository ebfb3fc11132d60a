"""Integer cuboid geometry: dimensions, placements, overlap, bounding boxes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Dims:
    """Extents along X (w), Y (h) and Z (d). Positive integers only."""

    w: int
    h: int
    d: int

    def __post_init__(self):
        for name in ("w", "h", "d"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise TypeError(f"{name} must be an int, got {v!r}")
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.w, self.h, self.d)

    @property
    def volume(self) -> int:
        return self.w * self.h * self.d


def volume(dims: Dims) -> int:
    return dims.w * dims.h * dims.d


def module_label(module_id: int) -> str:
    return f"p{module_id}"


@dataclass(frozen=True)
class ModuleSpec:
    id: int
    dims: Dims

    @property
    def label(self) -> str:
        return module_label(self.id)


@dataclass(frozen=True)
class ProblemInstance:
    """A set of modules with dense ids 0..n-1."""

    modules: tuple[ModuleSpec, ...]
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        ids = [m.id for m in self.modules]
        if ids != list(range(len(ids))):
            raise ValueError(f"module ids must be dense and ordered 0..n-1, got {ids}")

    @classmethod
    def from_dims(cls, dims: Iterable[Sequence[int] | Dims], name: str = "", meta=None) -> "ProblemInstance":
        mods = []
        for i, d in enumerate(dims):
            if not isinstance(d, Dims):
                d = Dims(*d)
            mods.append(ModuleSpec(i, d))
        return cls(tuple(mods), name=name, meta=dict(meta or {}))

    def __len__(self) -> int:
        return len(self.modules)

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.modules]

    @property
    def dims(self) -> list[Dims]:
        return [m.dims for m in self.modules]

    def total_volume(self) -> int:
        return sum(m.dims.volume for m in self.modules)


@dataclass(frozen=True)
class Placement:
    module_id: int
    origin: tuple[int, int, int]
    dims: Dims

    def __post_init__(self):
        if any(c < 0 for c in self.origin):
            raise ValueError(f"origin must be non-negative, got {self.origin}")

    @property
    def corner(self) -> tuple[int, int, int]:
        """Upper-back-right corner."""
        x, y, z = self.origin
        return (x + self.dims.w, y + self.dims.h, z + self.dims.d)

    def moved(self, axis: int, coord: int) -> "Placement":
        origin = list(self.origin)
        origin[axis] = coord
        return Placement(self.module_id, tuple(origin), self.dims)


def cuboids_overlap(a: Placement, b: Placement) -> bool:
    """True iff the open cuboids intersect; shared faces do not count."""
    a_lo, a_hi = a.origin, a.corner
    b_lo, b_hi = b.origin, b.corner
    return all(a_lo[k] < b_hi[k] and b_lo[k] < a_hi[k] for k in range(3))


def bounding_box(placements: Sequence[Placement]) -> Dims:
    """Origin-anchored bounding box of a non-empty placement list."""
    if not placements:
        raise ValueError("bounding_box of an empty placement list")
    return Dims(
        max(p.origin[0] + p.dims.w for p in placements),
        max(p.origin[1] + p.dims.h for p in placements),
        max(p.origin[2] + p.dims.d for p in placements),
    )


@dataclass(frozen=True)
class Floorplan:
    placements: tuple[Placement, ...]
    bounding: Dims

    @classmethod
    def from_placements(cls, placements: Iterable[Placement]) -> "Floorplan":
        placements = tuple(sorted(placements, key=lambda p: p.module_id))
        return cls(placements, bounding_box(placements))

    def overlapping_pairs(self) -> list[tuple[int, int]]:
        ps = self.placements
        return [
            (ps[i].module_id, ps[j].module_id)
            for i in range(len(ps))
            for j in range(i + 1, len(ps))
            if cuboids_overlap(ps[i], ps[j])
        ]

    def is_legal(self) -> bool:
        if self.overlapping_pairs():
            return False
        b = self.bounding
        return all(
            c[0] <= b.w and c[1] <= b.h and c[2] <= b.d for c in (p.corner for p in self.placements)
        )

    def used_volume(self) -> int:
        return sum(p.dims.volume for p in self.placements)

    def geometric_dead_ratio(self) -> float:
        """1 - occupied / bounding volume."""
        root = self.bounding.volume
        return (root - self.used_volume()) / root
