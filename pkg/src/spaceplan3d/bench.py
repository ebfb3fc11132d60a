"""Benchmark harness: SA presets and an external candidate provider on the
same instances, summarised per module-count bucket."""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .anneal import SaPreset, anneal
from .compaction import compact_xyz
from .generate import GenConfig, derive_seed, generate_synthetic
from .geometry import ProblemInstance
from .provider import (
    CandidateSet,
    ProviderConfig,
    ProviderFailure,
    evaluate_candidates,
    fetch_all,
    load_candidates_file,
)
from .tree import decode_postorder, realize, validate_legality

SOLVERS = ("SA_FAST", "SA_QUALITY", "PROVIDER")
_PRESETS = {"SA_FAST": SaPreset.FAST, "SA_QUALITY": SaPreset.QUALITY}


@dataclass(frozen=True)
class BenchSpec:
    module_counts: tuple[int, ...] = (8,)
    per_bucket: int = 20
    instances: tuple[ProblemInstance, ...] = ()  # overrides generation when given
    solvers: tuple[str, ...] = ("SA_FAST", "SA_QUALITY")
    n_candidates: int = 5
    budget: float | None = None  # wall-clock seconds per solver per instance
    seed: int = 0
    workers: int = 1
    provider: ProviderConfig | None = None

    def __post_init__(self):
        if not self.solvers:
            raise ValueError("select at least one solver")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise ValueError(f"unknown solvers {bad}; choose from {SOLVERS}")
        if self.per_bucket < 1 or self.workers < 1 or any(n < 1 for n in self.module_counts):
            raise ValueError("module counts, per-bucket size and workers must be >= 1")
        if "PROVIDER" in self.solvers and self.provider is None:
            raise ValueError("PROVIDER solver needs a provider configuration")


@dataclass(frozen=True)
class RunRecord:
    problem_id: str
    n_modules: int
    solver: str
    legal: bool
    n_legal: int
    n_candidates: int
    tree_ratio: float | None
    ratio: float | None  # after compaction
    elapsed: float
    expr: str = ""
    error: str = ""


@dataclass(frozen=True)
class BenchRow:
    n_modules: int
    solver: str
    instances: int
    across_best_avg: float | None
    across_best_avg_pre: float | None
    zero_dead_rate: float
    mean_time: float
    legality_pct: float


@dataclass
class BenchResult:
    runs: list[RunRecord] = field(default_factory=list)
    rows: list[BenchRow] = field(default_factory=list)

    def failed_solvers(self) -> list[str]:
        out = []
        for s in sorted({r.solver for r in self.runs}):
            if not any(r.legal for r in self.runs if r.solver == s):
                out.append(s)
        return out

    def rows_csv(self) -> str:
        return _to_csv(self.rows, BenchRow)

    def runs_csv(self) -> str:
        return _to_csv(self.runs, RunRecord)

    def summary(self) -> str:
        lines = [f"{'n':>4} {'solver':<11} {'inst':>5} {'A(post)':>9} {'A(pre)':>9} {'zero%':>7} {'time[s]':>9} {'legal%':>7}"]
        for r in self.rows:
            lines.append(
                f"{r.n_modules:>4} {r.solver:<11} {r.instances:>5} {_pct(r.across_best_avg):>9} "
                f"{_pct(r.across_best_avg_pre):>9} {100 * r.zero_dead_rate:>6.1f}% {r.mean_time:>9.3f} {r.legality_pct:>6.1f}%"
            )
        return "\n".join(lines) + "\n"


def _pct(v):
    return "n/a" if v is None else f"{100 * v:.2f}%"


def _to_csv(items, cls) -> str:
    buf = io.StringIO()
    names = list(cls.__dataclass_fields__)
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for it in items:
        w.writerow({k: ("" if v is None else v) for k, v in asdict(it).items()})
    return buf.getvalue()


def bench_instances(spec: BenchSpec) -> list[ProblemInstance]:
    if spec.instances:
        return list(spec.instances)
    out = []
    for n in spec.module_counts:
        for i in range(spec.per_bucket):
            li = generate_synthetic(GenConfig(n_modules=n, seed=derive_seed(spec.seed, "inst", n, i)))
            inst = li.instance
            out.append(ProblemInstance(inst.modules, name=f"n{n}_{i:03d}",
                                       meta={**inst.meta, "ground_truth": str(li.ground_truth)}))
    return out


def run_sa(inst: ProblemInstance, solver: str, seed: int, budget: float | None) -> RunRecord:
    cfg = _PRESETS[solver].config(seed=derive_seed(seed, "sa", solver, inst.name), time_budget=budget)
    t0 = time.perf_counter()
    best, trace = anneal(inst, cfg)
    legal = validate_legality(best, inst).legal
    tree_ratio = ratio = None
    if legal:
        tree = decode_postorder(best, inst)
        plan = compact_xyz(realize(tree, inst))
        tree_ratio, ratio = trace.best_ratio, plan.geometric_dead_ratio()
    elapsed = time.perf_counter() - t0
    return RunRecord(inst.name, len(inst), solver, legal, int(legal), 1, tree_ratio, ratio, elapsed, str(best))


def run_provider(inst: ProblemInstance, cset: CandidateSet | ProviderFailure | None, elapsed: float) -> RunRecord:
    if cset is None:
        return RunRecord(inst.name, len(inst), "PROVIDER", False, 0, 0, None, None, elapsed, error="no_candidates")
    if isinstance(cset, ProviderFailure):
        return RunRecord(inst.name, len(inst), "PROVIDER", False, 0, 0, None, None, elapsed, error=cset.kind)
    ev = evaluate_candidates(inst, cset, with_compaction=True)
    n_legal = sum(v.legal for v in ev.verdicts)
    best = ev.best
    if best is None:
        return RunRecord(inst.name, len(inst), "PROVIDER", False, 0, len(ev.verdicts), None, None, elapsed,
                         error="no_legal_candidates")
    return RunRecord(inst.name, len(inst), "PROVIDER", True, n_legal, len(ev.verdicts),
                     best.tree_ratio, best.ratio, elapsed, best.expr)


def _sa_job(args):
    return run_sa(*args)


def summarize(runs: Sequence[RunRecord]) -> list[BenchRow]:
    rows = []
    keys = sorted({(r.n_modules, r.solver) for r in runs}, key=lambda k: (k[0], SOLVERS.index(k[1])))
    for n, solver in keys:
        rs = [r for r in runs if r.n_modules == n and r.solver == solver]
        good = [r for r in rs if r.legal]
        cand_total = sum(r.n_candidates for r in rs)
        rows.append(BenchRow(
            n_modules=n,
            solver=solver,
            instances=len(rs),
            across_best_avg=math.fsum(r.ratio for r in good) / len(good) if good else None,
            across_best_avg_pre=math.fsum(r.tree_ratio for r in good) / len(good) if good else None,
            zero_dead_rate=sum(1 for r in good if r.ratio == 0) / len(rs),
            mean_time=math.fsum(r.elapsed for r in rs) / len(rs),
            legality_pct=100.0 * sum(r.n_legal for r in rs) / cand_total if cand_total else 0.0,
        ))
    return rows


def run_bench(spec: BenchSpec) -> BenchResult:
    instances = bench_instances(spec)
    sa_jobs = [(inst, s, spec.seed, spec.budget) for s in spec.solvers if s in _PRESETS for inst in instances]
    if spec.workers > 1 and len(sa_jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            runs = list(pool.map(_sa_job, sa_jobs, chunksize=1))
    else:
        runs = [_sa_job(j) for j in sa_jobs]

    if "PROVIDER" in spec.solvers:
        pcfg = spec.provider
        t0 = time.perf_counter()
        if pcfg.mode == "http":
            fetched = fetch_all(pcfg, instances)
        else:
            fetched = {c.problem_id: c for c in load_candidates_file(pcfg.candidates_path)}
        per = (time.perf_counter() - t0) / max(1, len(instances))
        runs.extend(run_provider(inst, fetched.get(inst.name), per) for inst in instances)

    runs.sort(key=lambda r: (r.n_modules, r.problem_id, SOLVERS.index(r.solver)))
    return BenchResult(runs, summarize(runs))
