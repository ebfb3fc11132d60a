"""Binary 3D slicing trees and their post-order token form.

A cut token merges the two sub-blocks on top of the stack. ``H`` joins along
X, ``V`` along Y and ``D`` along Z. The operand popped second (encoded
first) is the left child and sits nearer the origin.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union

from .geometry import Dims, Floorplan, ModuleSpec, Placement, ProblemInstance, module_label


class CutAxis(enum.Enum):
    H = "H"  # along X
    V = "V"  # along Y
    D = "D"  # along Z

    @property
    def index(self) -> int:
        return _AXIS_INDEX[self]

    def __str__(self) -> str:
        return self.value


_AXIS_INDEX = {CutAxis.H: 0, CutAxis.V: 1, CutAxis.D: 2}


@dataclass(frozen=True)
class Leaf:
    module_id: int


@dataclass(frozen=True)
class Internal:
    axis: CutAxis
    left: "SlicingNode"
    right: "SlicingNode"


SlicingNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class ModuleToken:
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class CutToken:
    axis: CutAxis

    def __str__(self) -> str:
        return self.axis.value


Token = Union[ModuleToken, CutToken]


@dataclass(frozen=True)
class PostOrderExpr:
    tokens: tuple[Token, ...]

    def __str__(self) -> str:
        return ";".join(str(t) for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    @property
    def text(self) -> str:
        return str(self)


# -- errors -----------------------------------------------------------------


class LegalityError(ValueError):
    """Base class for parse and legality failures of a token sequence."""

    reason = "illegal"

    def __eq__(self, other):
        return type(self) is type(other) and self.args == other.args

    def __hash__(self):
        return hash((type(self), self.args))


class EmptyInput(LegalityError):
    reason = "empty_input"

    def __init__(self):
        super().__init__("empty expression")


class UnknownToken(LegalityError):
    reason = "unknown_token"

    def __init__(self, token: str, position: int):
        self.token = token
        self.position = position
        super().__init__(f"unknown token {token!r} at position {position}")


class StackUnderflow(LegalityError):
    reason = "stack_underflow"

    def __init__(self, position: int):
        self.position = position
        super().__init__(f"cut at position {position} has fewer than two operands")


class LeftoverOperands(LegalityError):
    reason = "leftover_operands"

    def __init__(self, count: int):
        self.count = count
        super().__init__(f"{count} items left on the stack, expected 1")


class DuplicateModule(LegalityError):
    reason = "duplicate_module"

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"module {label} used more than once")


class MissingModule(LegalityError):
    reason = "missing_module"

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"module {label} never used")


class UnknownModule(LegalityError):
    reason = "unknown_module"

    def __init__(self, label: str):
        self.label = label
        super().__init__(f"module {label} is not part of the instance")


# -- encode / parse ---------------------------------------------------------


def encode_postorder(tree: SlicingNode) -> PostOrderExpr:
    out: list[Token] = []
    # iterative walk so deep trees cannot hit the recursion limit
    stack: list[tuple[SlicingNode, bool]] = [(tree, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Leaf):
            out.append(ModuleToken(module_label(node.module_id)))
        elif expanded:
            out.append(CutToken(node.axis))
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
    return PostOrderExpr(tuple(out))


_MODULE_RE = re.compile(r"p[0-9]+")
_CUTS = {"H": CutAxis.H, "V": CutAxis.V, "D": CutAxis.D}


def parse_tokens(text: str) -> PostOrderExpr:
    """Split on ';', strip whitespace per token, classify.

    Case-sensitive. Empty tokens (``p0;;p1``, trailing ``;``) are rejected.
    """
    if text is None or not text.strip():
        raise EmptyInput()
    tokens: list[Token] = []
    for pos, raw in enumerate(text.split(";")):
        tok = raw.strip()
        if tok in _CUTS:
            tokens.append(CutToken(_CUTS[tok]))
        elif _MODULE_RE.fullmatch(tok):
            tokens.append(ModuleToken(tok))
        else:
            raise UnknownToken(tok, pos)
    return PostOrderExpr(tuple(tokens))


def as_expr(expr: PostOrderExpr | str) -> PostOrderExpr:
    return parse_tokens(expr) if isinstance(expr, str) else expr


# -- legality ---------------------------------------------------------------


@dataclass(frozen=True)
class LegalVerdict:
    legal: bool
    error: LegalityError | None = None

    def __bool__(self) -> bool:
        return self.legal

    @property
    def reason(self) -> str:
        return "legal" if self.legal else self.error.reason


def _label_set(modules) -> list[str]:
    if isinstance(modules, ProblemInstance):
        return modules.labels
    out = []
    for m in modules:
        out.append(m.label if isinstance(m, ModuleSpec) else str(m))
    return out


def validate_legality(expr: PostOrderExpr | str, modules) -> LegalVerdict:
    """Check stack discipline and exact once-each module coverage.

    ``modules`` may be a ProblemInstance, ModuleSpecs or plain labels. The
    first problem found in left-to-right order is reported; missing modules
    are checked last.
    """
    try:
        expr = as_expr(expr)
    except LegalityError as e:
        return LegalVerdict(False, e)
    labels = _label_set(modules)
    known = set(labels)
    seen: set[str] = set()
    depth = 0
    for pos, tok in enumerate(expr.tokens):
        if isinstance(tok, ModuleToken):
            if tok.label not in known:
                return LegalVerdict(False, UnknownModule(tok.label))
            if tok.label in seen:
                return LegalVerdict(False, DuplicateModule(tok.label))
            seen.add(tok.label)
            depth += 1
        else:
            if depth < 2:
                return LegalVerdict(False, StackUnderflow(pos))
            depth -= 1
    if depth == 0:
        return LegalVerdict(False, EmptyInput())
    if depth > 1:
        return LegalVerdict(False, LeftoverOperands(depth))
    for label in labels:
        if label not in seen:
            return LegalVerdict(False, MissingModule(label))
    return LegalVerdict(True)


# -- decode / geometry --------------------------------------------------------


def decode_postorder(expr: PostOrderExpr | str, modules) -> SlicingNode:
    """Rebuild the tree with a stack; raises the LegalityError if illegal."""
    expr = as_expr(expr)
    verdict = validate_legality(expr, modules)
    if not verdict.legal:
        raise verdict.error
    stack: list[SlicingNode] = []
    for tok in expr.tokens:
        if isinstance(tok, ModuleToken):
            stack.append(Leaf(int(tok.label[1:])))
        else:
            right = stack.pop()
            left = stack.pop()
            stack.append(Internal(tok.axis, left, right))
    return stack[0]


def merge_dims(a: Dims, b: Dims, axis: CutAxis) -> Dims:
    """Parent box of two abutting children: sum on the cut axis, max elsewhere."""
    if axis is CutAxis.H:
        return Dims(a.w + b.w, max(a.h, b.h), max(a.d, b.d))
    if axis is CutAxis.V:
        return Dims(max(a.w, b.w), a.h + b.h, max(a.d, b.d))
    return Dims(max(a.w, b.w), max(a.h, b.h), a.d + b.d)


def dims_lookup(modules) -> Mapping[int, Dims] | Sequence[Dims]:
    if isinstance(modules, ProblemInstance):
        return modules.dims
    if isinstance(modules, Mapping):
        return modules
    out = []
    for m in modules:
        out.append(m.dims if isinstance(m, ModuleSpec) else m)
    return out


def postorder_nodes(tree: SlicingNode) -> list[SlicingNode]:
    out: list[SlicingNode] = []
    stack: list[tuple[SlicingNode, bool]] = [(tree, False)]
    while stack:
        node, expanded = stack.pop()
        if isinstance(node, Leaf) or expanded:
            out.append(node)
        else:
            stack.append((node, True))
            stack.append((node.right, False))
            stack.append((node.left, False))
    return out


def subtree_dims(tree: SlicingNode, modules) -> dict[int, Dims]:
    """Composite dims of every node, keyed by id(node)."""
    lookup = dims_lookup(modules)
    out: dict[int, Dims] = {}
    for node in postorder_nodes(tree):
        if isinstance(node, Leaf):
            out[id(node)] = lookup[node.module_id]
        else:
            out[id(node)] = merge_dims(out[id(node.left)], out[id(node.right)], node.axis)
    return out


def node_dims(tree: SlicingNode, modules) -> Dims:
    return subtree_dims(tree, modules)[id(tree)]


def realize(tree: SlicingNode, modules) -> Floorplan:
    """Assign origins: left child keeps the parent origin, right child is
    offset along the cut axis by the left child's composite extent. Every
    child sits flush at its slot's origin corner on the other two axes."""
    dims = subtree_dims(tree, modules)
    placements = []
    stack: list[tuple[SlicingNode, tuple[int, int, int]]] = [(tree, (0, 0, 0))]
    while stack:
        node, origin = stack.pop()
        if isinstance(node, Leaf):
            placements.append(Placement(node.module_id, origin, dims[id(node)]))
            continue
        k = node.axis.index
        shift = dims[id(node.left)].as_tuple()[k]
        right_origin = list(origin)
        right_origin[k] += shift
        stack.append((node.right, tuple(right_origin)))
        stack.append((node.left, origin))
    plan = Floorplan.from_placements(placements)
    return Floorplan(plan.placements, dims[id(tree)])


def leaves(tree: SlicingNode) -> list[int]:
    return [n.module_id for n in postorder_nodes(tree) if isinstance(n, Leaf)]
