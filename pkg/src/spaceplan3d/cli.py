"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import random
import sys
from pathlib import Path

from . import __version__
from .anneal import SaConfig, SaPreset, TooLarge, anneal, enumerate_all
from .bench import SOLVERS, BenchSpec, run_bench
from .compaction import OverlappingInput, compact_xyz
from .deadspace import compute_metrics
from .formats import (
    FormatError,
    dump_json,
    layout_from_dict,
    layout_to_dict,
    load_instance,
    load_layout,
    load_modules_2d,
    save_instance,
)
from .generate import (
    GenConfig,
    McncDeriveConfig,
    SizeMismatch,
    derive_3d,
    derive_seed,
    generate_enlarged,
    generate_synthetic,
    group_composites,
)
from .geometry import ProblemInstance
from .provider import (
    CandidateFileError,
    ProviderConfig,
    ProviderFailure,
    evaluate_candidates,
    fetch_all,
    load_candidates_file,
)
from .render import render_svg
from .tree import LegalityError, decode_postorder, realize, validate_legality

log = logging.getLogger("spaceplan3d")


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


# -- flag parsing helpers ----------------------------------------------------------


def parse_range(text: str) -> tuple[int, int]:
    """'8..16' -> (8, 16); '8' -> (8, 8)."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected LO..HI") from None
    if lo > hi:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


def parse_int_list(text: str) -> list[int]:
    if text.startswith("sizes="):
        text = text[len("sizes="):]
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_instance(path) -> ProblemInstance:
    try:
        return load_instance(path)
    except (FormatError, OSError, ValueError) as e:
        raise RuntimeFailure(f"cannot load instance {path}: {e}") from e


def _instance_paths(items) -> list[Path]:
    paths = []
    for item in items:
        p = Path(item)
        paths.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return [p for p in paths if p.name != "manifest.json"]


def _write_table(path: Path, rows: list[dict], fmt: str):
    if fmt == "json":
        path.with_suffix(".json").write_text(dump_json(rows))
        return path.with_suffix(".json")
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    path.with_suffix(".csv").write_text(buf.getvalue())
    return path.with_suffix(".csv")


# -- subcommands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    lo_n, hi_n = parse_range(args.modules)
    dlo, dhi = parse_range(args.dims) if args.dims else (max(16, hi_n), max(64, hi_n))
    if lo_n < 1:
        raise UsageError("--modules must be >= 1")
    if dlo < hi_n:
        raise UsageError(f"--dims minimum {dlo} must be >= the largest module count {hi_n}")
    scale = parse_int_list(args.enlarged) if args.enlarged else None
    if scale is not None and (len(scale) != 3 or min(scale) < 1):
        raise UsageError("--enlarged needs three factors >= 1, e.g. 10,10,10")
    out = _out_dir(args)
    manifest = []
    for i in range(args.count):
        n = random.Random(derive_seed(args.seed, "n", i)).randint(lo_n, hi_n)
        cfg = GenConfig(n_modules=n, dim_ranges=((dlo, dhi),) * 3, seed=derive_seed(args.seed, "inst", i))
        li = generate_enlarged(cfg, scale) if scale else generate_synthetic(cfg)
        name = f"inst_{i:04d}"
        inst = ProblemInstance(li.instance.modules, name=name)
        source = {"kind": "enlarged" if scale else "synthetic", "seed": cfg.seed,
                  "source_cuboid": list(li.source_cuboid.as_tuple())}
        if scale:
            source["scale"] = scale
        path = save_instance(out / f"{name}.json", inst, li.ground_truth, source)
        manifest.append({"file": path.name, "name": name, "n_modules": n})
    _write_table(out / "manifest", manifest, args.format)
    for m in manifest:
        print(f"{m['file']}\t{m['n_modules']}")
    return 0


def cmd_derive3d(args) -> int:
    try:
        mods = load_modules_2d(args.input)
    except (FormatError, OSError) as e:
        raise RuntimeFailure(str(e)) from e
    out = _out_dir(args)
    inst = derive_3d(mods, McncDeriveConfig(seed=args.seed))
    name = args.name or Path(args.input).stem
    inst = ProblemInstance(inst.modules, name=name, meta=inst.meta)
    save_instance(out / f"{name}_3d.json", inst)
    print(f"{name}_3d.json\t{len(inst)} modules\tdepth range {inst.meta['depth_range']}")
    if args.group:
        sizes = parse_int_list(args.group)
        try:
            comp, composites = group_composites(inst, sizes, seed=args.seed)
        except SizeMismatch as e:
            raise UsageError(str(e)) from e
        comp = ProblemInstance(comp.modules, name=f"{name}_composite", meta=comp.meta)
        save_instance(out / f"{name}_composite.json", comp)
        membership = {
            "instance": f"{name}_3d.json",
            "groups": [
                {"composite": f"p{c.group_id}", "members": [f"p{m}" for m in c.members],
                 "arrangement": c.expr, "layout": layout_to_dict(c.layout)}
                for c in composites
            ],
        }
        (out / f"{name}_membership.json").write_text(dump_json(membership))
        print(f"{name}_composite.json\t{len(comp)} composites\tsizes {[len(c.members) for c in composites]}")
    return 0


def _sa_config(args) -> SaConfig:
    cfg = SaPreset[args.preset.upper()].config(seed=args.seed)
    overrides = {}
    for flag, key in (("k", "k"), ("alpha", "alpha"), ("batch", "batch"), ("t_min", "t_min"), ("t_init", "t_init")):
        v = getattr(args, flag)
        if v is not None:
            overrides[key] = v
    if args.budget is not None:
        overrides["time_budget"] = args.budget
    try:
        return SaConfig(**{**cfg.__dict__, **overrides})
    except ValueError as e:
        raise UsageError(str(e)) from e


def cmd_solve_sa(args) -> int:
    inst = _load_instance(args.instance)
    cfg = _sa_config(args)
    best, trace = anneal(inst, cfg)
    if not validate_legality(best, inst).legal:
        raise RuntimeFailure("annealer returned an illegal expression")
    tree = decode_postorder(best, inst)
    plan = realize(tree, inst)
    compacted = compact_xyz(plan)
    out = _out_dir(args)
    solution = {
        "instance": inst.name,
        "expression": str(best),
        "tree_ratio": trace.best_ratio,
        "compacted_ratio": compacted.geometric_dead_ratio(),
        "legal": True,
        "levels": len(trace.levels),
        "proposals": trace.proposals,
        "stop_reason": trace.stop_reason,
        "config": {k: v for k, v in cfg.__dict__.items()},
        "elapsed": trace.elapsed,
    }
    (out / "solution.json").write_text(dump_json(solution))
    (out / "layout.json").write_text(dump_json(layout_to_dict(plan)))
    (out / "layout_compacted.json").write_text(dump_json(layout_to_dict(compacted)))
    (out / "trace.csv").write_text(trace.to_csv())
    print(f"{best}\ttree_ratio={trace.best_ratio:.6f}\tcompacted_ratio={compacted.geometric_dead_ratio():.6f}\t"
          f"elapsed={trace.elapsed:.3f}s")
    return 0


def cmd_enumerate(args) -> int:
    inst = _load_instance(args.instance)
    try:
        res = enumerate_all(inst, limit=args.limit)
    except TooLarge as e:
        raise UsageError(str(e)) from e
    doc = {"instance": inst.name, "expression": str(res.best), "best_ratio": res.best_ratio, "count": res.count}
    if args.out:
        (_out_dir(args) / "enumerate.json").write_text(dump_json(doc))
    print(f"{res.best}\tbest_ratio={res.best_ratio:.6f}\tcount={res.count}")
    return 0


def cmd_eval(args) -> int:
    if not (args.endpoint or args.candidates):
        raise UsageError("give --candidates FILE or --endpoint URL")
    paths = _instance_paths(args.instances)
    if not paths:
        raise UsageError("no instance files given")
    instances = [_load_instance(p) for p in paths]
    if args.endpoint:
        try:
            cfg = ProviderConfig(mode="http", endpoint=args.endpoint, token_env=args.token_env,
                                 n_candidates=args.count, timeout=args.timeout, max_in_flight=args.max_in_flight,
                                 text_field=args.text_field)
        except ValueError as e:
            raise UsageError(str(e)) from e
        fetched = fetch_all(cfg, instances)
    else:
        try:
            fetched = {c.problem_id: c for c in load_candidates_file(args.candidates)}
        except (CandidateFileError, OSError) as e:
            raise RuntimeFailure(str(e)) from e

    results = {}
    verdict_rows = []
    warnings = []
    for inst in instances:
        cset = fetched.get(inst.name)
        if cset is None or isinstance(cset, ProviderFailure):
            warnings.append(f"{inst.name}: " + ("no candidates" if cset is None else f"provider failed ({cset.kind}: {cset.message})"))
            continue
        ev = evaluate_candidates(inst, cset, with_compaction=not args.no_compact)
        results[inst.name] = [v.score() for v in ev.verdicts]
        for v in ev.verdicts:
            verdict_rows.append({
                "problem": inst.name, "index": v.index, "legal": v.legal, "reason": v.reason,
                "tree_ratio": "" if v.tree_ratio is None else v.tree_ratio,
                "compacted_ratio": "" if v.compacted_ratio is None else v.compacted_ratio,
                "ratio": "" if v.ratio is None else v.ratio,
                "best": v.index == ev.best_index, "raw": v.raw_text,
            })
    report = compute_metrics(results)
    doc = report.to_dict()
    doc["compaction"] = not args.no_compact
    doc["provider_failures"] = warnings
    out = _out_dir(args)
    (out / "metrics.json").write_text(dump_json(doc))
    _write_table(out / "verdicts", verdict_rows, "csv")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for pid in report.no_legal_candidates:
        print(f"warning: {pid}: no legal candidates", file=sys.stderr)
    g = "n/a" if report.global_ratio is None else f"{report.global_ratio:.6f}"
    a = "n/a" if report.across_best_avg is None else f"{report.across_best_avg:.6f}"
    print(f"L={report.legality_pct:.2f}%\tG={g}\tA={a}\tproblems={len(report.per_problem)}")
    if args.strict and (warnings or report.no_legal_candidates):
        return 1
    return 0


def cmd_bench(args) -> int:
    solvers = tuple(s.strip().upper() for s in args.solvers.split(",") if s.strip())
    instances = tuple(_load_instance(p) for p in _instance_paths(args.instances)) if args.instances else ()
    counts = []
    for part in args.modules.split(","):
        lo, hi = parse_range(part)
        counts.extend(range(lo, hi + 1))
    provider = None
    try:
        if "PROVIDER" in solvers:
            if args.endpoint:
                provider = ProviderConfig(mode="http", endpoint=args.endpoint, token_env=args.token_env,
                                          n_candidates=args.count, timeout=args.timeout)
            elif args.candidates:
                provider = ProviderConfig(mode="file", candidates_path=args.candidates, n_candidates=args.count)
        spec = BenchSpec(module_counts=tuple(counts), per_bucket=args.per_bucket, instances=instances,
                         solvers=solvers, n_candidates=args.count, budget=args.budget, seed=args.seed,
                         workers=args.workers, provider=provider)
    except ValueError as e:
        raise UsageError(str(e)) from e
    try:
        result = run_bench(spec)
    except (CandidateFileError, OSError) as e:
        raise RuntimeFailure(str(e)) from e
    out = _out_dir(args)
    if args.format == "json":
        (out / "bench_rows.json").write_text(dump_json([r.__dict__ for r in result.rows]))
        (out / "bench_runs.json").write_text(dump_json([r.__dict__ for r in result.runs]))
    else:
        (out / "bench_rows.csv").write_text(result.rows_csv())
        (out / "bench_runs.csv").write_text(result.runs_csv())
    summary = result.summary()
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    failed = result.failed_solvers()
    if failed:
        print(f"error: solver(s) failed on every instance: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _plan_from_args(args):
    if args.layout:
        try:
            return load_layout(args.layout)
        except (FormatError, OSError) as e:
            raise RuntimeFailure(f"malformed layout {args.layout}: {e}") from e
    if args.instance and args.expr:
        inst = _load_instance(args.instance)
        try:
            return realize(decode_postorder(args.expr, inst), inst)
        except LegalityError as e:
            raise RuntimeFailure(f"illegal expression: {e}") from e
    raise UsageError("give --layout FILE or --instance FILE --expr TEXT")


def cmd_compact(args) -> int:
    plan = _plan_from_args(args)
    try:
        out_plan = compact_xyz(plan)
    except OverlappingInput as e:
        raise RuntimeFailure(str(e)) from e
    out = _out_dir(args)
    doc = layout_to_dict(out_plan, dead_ratio_before=plan.geometric_dead_ratio(),
                         dead_ratio_after=out_plan.geometric_dead_ratio())
    (out / "layout_compacted.json").write_text(dump_json(doc))
    print(f"bounding {plan.bounding.as_tuple()} -> {out_plan.bounding.as_tuple()}\t"
          f"dead {plan.geometric_dead_ratio():.6f} -> {out_plan.geometric_dead_ratio():.6f}")
    return 0


def cmd_render(args) -> int:
    plan = _plan_from_args(args)
    if plan.overlapping_pairs():
        raise RuntimeFailure("layout has overlapping modules")
    target = Path(args.svg) if args.svg else _out_dir(args) / "layout.svg"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_svg(plan, title=args.title or ""))
    print(str(target))
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master RNG seed (u64)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="csv", help="table output format")

    p = argparse.ArgumentParser(prog="spaceplan3d", description="3D slicing-tree space planning toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate zero-dead synthetic instances")
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--modules", default="8..16", help="module count range LO..HI")
    g.add_argument("--dims", help="base cuboid extent range per axis LO..HI")
    g.add_argument("--enlarged", help="per-axis scale factors, e.g. 10,10,10")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("derive3d", parents=[common], help="3D instance from a 2D module list")
    d.add_argument("--input", required=True, help="CSV label,w,h or JSON module list")
    d.add_argument("--group", help="composite group sizes, e.g. sizes=10,10,10,10,9")
    d.add_argument("--name")
    d.set_defaults(func=cmd_derive3d)

    s = sub.add_parser("solve-sa", parents=[common], help="simulated annealing on one instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--preset", choices=("fast", "quality"), default="fast")
    s.add_argument("--k", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--batch", type=int)
    s.add_argument("--t-min", dest="t_min", type=float)
    s.add_argument("--t-init", dest="t_init", type=float)
    s.add_argument("--budget", type=float, help="wall-clock cap in seconds")
    s.set_defaults(func=cmd_solve_sa)

    e = sub.add_parser("enumerate", parents=[common], help="exhaustive optimum for small instances")
    e.add_argument("--instance", required=True)
    e.add_argument("--limit", type=int, default=5)
    e.set_defaults(func=cmd_enumerate, out=None)

    v = sub.add_parser("eval", parents=[common], help="score candidate expressions")
    v.add_argument("--instances", nargs="+", required=True, help="instance files or directories")
    v.add_argument("--candidates", help="candidate text file")
    v.add_argument("--endpoint", help="text-completion URL")
    v.add_argument("--token-env", help="environment variable holding the bearer token")
    v.add_argument("--text-field", default="text", help="dotted path of the text in the JSON response")
    v.add_argument("--count", type=int, default=5, help="candidates per problem")
    v.add_argument("--timeout", type=float, default=60.0)
    v.add_argument("--max-in-flight", type=int, default=4)
    v.add_argument("--no-compact", action="store_true")
    v.add_argument("--strict", action="store_true", help="exit 1 on provider failures")
    v.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", parents=[common], help="compare solvers per module-count bucket")
    b.add_argument("--modules", default="8,12,16", help="comma list of counts or LO..HI ranges")
    b.add_argument("--per-bucket", type=int, default=20)
    b.add_argument("--instances", nargs="*", help="use these instance files instead of generating")
    b.add_argument("--solvers", default="sa_fast,sa_quality", help=f"subset of {','.join(SOLVERS).lower()}")
    b.add_argument("--candidates")
    b.add_argument("--endpoint")
    b.add_argument("--token-env")
    b.add_argument("--count", type=int, default=5)
    b.add_argument("--timeout", type=float, default=60.0)
    b.add_argument("--budget", type=float, help="wall-clock cap per solver per instance (s)")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("compact", parents=[common], help="X/Y/Z compaction of a layout")
    c.add_argument("--layout")
    c.add_argument("--instance")
    c.add_argument("--expr")
    c.set_defaults(func=cmd_compact)

    r = sub.add_parser("render", parents=[common], help="SVG with three orthographic views")
    r.add_argument("--layout")
    r.add_argument("--instance")
    r.add_argument("--expr")
    r.add_argument("--svg", help="output file (default <out>/layout.svg)")
    r.add_argument("--title")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"{parser.prog} {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (RuntimeFailure, OSError) as e:
        print(f"{parser.prog} {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
