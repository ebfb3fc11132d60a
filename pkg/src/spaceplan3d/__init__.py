"""3D slicing-tree space planning: instances, codec, dead space, annealing."""

from .geometry import (
    Dims,
    Floorplan,
    ModuleSpec,
    Placement,
    ProblemInstance,
    bounding_box,
    cuboids_overlap,
    volume,
)
from .tree import (
    CutAxis,
    Internal,
    Leaf,
    LegalityError,
    PostOrderExpr,
    decode_postorder,
    encode_postorder,
    node_dims,
    parse_tokens,
    realize,
    validate_legality,
)
from .deadspace import (
    MetricsReport,
    compute_metrics,
    dead_ratio,
    pairwise_dead_space,
    total_dead_space,
)
from .compaction import compact_axis, compact_xyz

__version__ = "0.1.0"

__all__ = [
    "CutAxis",
    "Dims",
    "Floorplan",
    "Internal",
    "Leaf",
    "LegalityError",
    "MetricsReport",
    "ModuleSpec",
    "Placement",
    "PostOrderExpr",
    "ProblemInstance",
    "bounding_box",
    "compact_axis",
    "compact_xyz",
    "compute_metrics",
    "cuboids_overlap",
    "dead_ratio",
    "decode_postorder",
    "encode_postorder",
    "node_dims",
    "pairwise_dead_space",
    "parse_tokens",
    "realize",
    "total_dead_space",
    "validate_legality",
    "volume",
]
