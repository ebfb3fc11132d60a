"""Dead-space accounting for slicing merges and the evaluation metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .geometry import Dims, volume
from .tree import CutAxis, Internal, Leaf, SlicingNode, dims_lookup, postorder_nodes, merge_dims, node_dims


@dataclass(frozen=True)
class MergeAccount:
    axis: CutAxis
    child_a_dims: Dims
    child_b_dims: Dims
    parent_dims: Dims
    dead: int


def pairwise_dead_space(a: Dims, b: Dims, axis: CutAxis) -> MergeAccount:
    parent = merge_dims(a, b, axis)
    dead = volume(parent) - volume(a) - volume(b)
    return MergeAccount(axis, a, b, parent, dead)


def merge_accounts(tree: SlicingNode, modules) -> list[MergeAccount]:
    """One account per internal node, in post-order."""
    lookup = dims_lookup(modules)
    dims: dict[int, Dims] = {}
    out = []
    for node in postorder_nodes(tree):
        if isinstance(node, Leaf):
            dims[id(node)] = lookup[node.module_id]
        else:
            acct = pairwise_dead_space(dims[id(node.left)], dims[id(node.right)], node.axis)
            dims[id(node)] = acct.parent_dims
            out.append(acct)
    return out


def total_dead_space(tree: SlicingNode, modules) -> int:
    return sum(a.dead for a in merge_accounts(tree, modules))


def dead_ratio(tree: SlicingNode, modules) -> float:
    return total_dead_space(tree, modules) / volume(node_dims(tree, modules))


# -- metrics ----------------------------------------------------------------


@dataclass(frozen=True)
class CandidateScore:
    """Outcome of one candidate: legality plus its ratio when legal."""

    legal: bool
    ratio: float | None = None
    reason: str = "legal"


@dataclass(frozen=True)
class ProblemSummary:
    id: str
    best_ratio: float | None
    n_legal: int
    n_candidates: int

    @property
    def flagged(self) -> bool:
        return self.n_legal == 0


@dataclass(frozen=True)
class MetricsReport:
    legality_pct: float
    global_ratio: float | None
    across_best_avg: float | None
    per_problem: tuple[ProblemSummary, ...]
    n_legal: int
    n_total: int
    n_cases: int
    n_questions: int
    no_legal_candidates: tuple[str, ...] = field(default=())

    @property
    def best_ratios(self) -> list[float]:
        return [p.best_ratio for p in self.per_problem if p.best_ratio is not None]

    def to_dict(self) -> dict:
        return {
            "legality_pct": self.legality_pct,
            "global_ratio": self.global_ratio,
            "across_best_avg": self.across_best_avg,
            "per_problem": [
                {"id": p.id, "best_ratio": p.best_ratio, "n_legal": p.n_legal, "n_candidates": p.n_candidates}
                for p in self.per_problem
            ],
            "counts": {
                "n_legal": self.n_legal,
                "n_total": self.n_total,
                "n_cases": self.n_cases,
                "n_questions": self.n_questions,
            },
            "no_legal_candidates": list(self.no_legal_candidates),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)


def _score(c) -> CandidateScore:
    if isinstance(c, CandidateScore):
        return c
    if hasattr(c, "legal"):
        return CandidateScore(bool(c.legal), getattr(c, "ratio", None))
    legal, ratio = c
    return CandidateScore(bool(legal), ratio)


def compute_metrics(results: Mapping[str, Sequence] | Iterable[tuple[str, Sequence]]) -> MetricsReport:
    """Fold per-problem candidate outcomes into L, G, B and A.

    ``results`` maps problem id to candidates; each candidate is a
    CandidateScore, anything with ``legal``/``ratio`` attributes, or a
    ``(legal, ratio)`` pair. G averages legal candidates only; problems
    without a legal candidate get no B, are left out of A and are listed in
    ``no_legal_candidates``.
    """
    items = results.items() if isinstance(results, Mapping) else results
    per_problem = []
    legal_ratios: list[float] = []
    n_total = 0
    for pid, cands in items:
        scores = [_score(c) for c in cands]
        ratios = [s.ratio for s in scores if s.legal]
        if any(r is None for r in ratios):
            raise ValueError(f"problem {pid}: legal candidate without a ratio")
        n_total += len(scores)
        legal_ratios.extend(ratios)
        per_problem.append(ProblemSummary(str(pid), min(ratios) if ratios else None, len(ratios), len(scores)))

    n_legal = len(legal_ratios)
    bests = [p.best_ratio for p in per_problem if p.best_ratio is not None]
    return MetricsReport(
        legality_pct=(100.0 * n_legal / n_total) if n_total else 0.0,
        global_ratio=math.fsum(legal_ratios) / n_legal if n_legal else None,
        across_best_avg=math.fsum(bests) / len(bests) if bests else None,
        per_problem=tuple(per_problem),
        n_legal=n_legal,
        n_total=n_total,
        n_cases=n_legal,
        n_questions=len(bests),
        no_legal_candidates=tuple(p.id for p in per_problem if p.n_legal == 0),
    )
