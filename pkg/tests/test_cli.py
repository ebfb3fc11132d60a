import csv
import json
import random

import pytest

from spaceplan3d import ProblemInstance, validate_legality
from spaceplan3d.anneal import enumerate_all
from spaceplan3d.cli import main
from spaceplan3d.formats import load_instance, load_layout, save_instance


def run(*argv):
    return main([str(a) for a in argv])


def ami_like(path, n=49, seed=0):
    rng = random.Random(seed)
    path.write_text("label,w,h\n" + "".join(f"bk{i},{rng.randint(5, 60)},{rng.randint(5, 60)}\n" for i in range(n)))
    return path


def test_gen_counts_and_range(tmp_path):
    assert run("gen", "--count", 20, "--modules", "8..16", "--seed", 7, "--out", tmp_path) == 0
    files = sorted(tmp_path.glob("inst_*.json"))
    assert len(files) == 20
    for f in files:
        inst = load_instance(f)
        assert 8 <= len(inst) <= 16
        assert validate_legality(inst.meta["ground_truth"], inst).legal
    assert (tmp_path / "manifest.csv").exists()


def test_gen_minimal(tmp_path):
    assert run("gen", "--count", 1, "--modules", "2..2", "--out", tmp_path) == 0
    assert len(load_instance(tmp_path / "inst_0000.json")) == 2


def test_gen_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("gen", "--count", 5, "--modules", "3..9", "--seed", 11, "--out", tmp_path / d) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_gen_enlarged(tmp_path):
    assert run("gen", "--count", 1, "--modules", "4..4", "--enlarged", "10,10,10", "--out", tmp_path) == 0
    inst = load_instance(tmp_path / "inst_0000.json")
    src = inst.meta["source_cuboid"]
    assert inst.meta["kind"] == "enlarged" and all(v % 10 == 0 for v in src)
    assert inst.total_volume() == src[0] * src[1] * src[2]


@pytest.mark.parametrize("argv", [
    ["gen", "--modules", "9..3"],
    ["gen", "--modules", "x"],
    ["gen", "--modules", "8..16", "--dims", "4..9"],
    ["gen", "--enlarged", "1,2"],
    ["eval", "--instances", "nothing-here"],  # no candidate source given
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert run(*argv, "--out", tmp_path) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as ei:
        main(["solve-sa"])
    assert ei.value.code == 2


def test_missing_instance_exit_1(tmp_path):
    cands = tmp_path / "c.txt"
    cands.write_text("")
    assert run("eval", "--instances", tmp_path / "nope.json", "--candidates", cands, "--out", tmp_path) == 1
    assert run("solve-sa", "--instance", tmp_path / "nope.json", "--out", tmp_path) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"modules": [{"label": "p3", "w": 1, "h": 1, "d": 1}]}')
    assert run("solve-sa", "--instance", bad, "--out", tmp_path) == 1


def test_solve_sa_congruent_pair(tmp_path):
    inst = save_instance(tmp_path / "two.json", ProblemInstance.from_dims([(3, 4, 5), (3, 4, 5)], name="two"))
    assert run("solve-sa", "--instance", inst, "--preset", "fast", "--out", tmp_path / "o") == 0
    sol = json.loads((tmp_path / "o" / "solution.json").read_text())
    assert sol["tree_ratio"] == 0 and sol["legal"]
    assert load_layout(tmp_path / "o" / "layout_compacted.json").geometric_dead_ratio() == 0
    header = (tmp_path / "o" / "trace.csv").read_text().splitlines()[0]
    assert header == "level,temperature,best_ratio,acceptance_rate"


def test_solve_sa_quality_matches_enumerate(tmp_path):
    inst = ProblemInstance.from_dims([(2, 5, 1), (3, 1, 4), (1, 2, 2)], name="three")
    path = save_instance(tmp_path / "three.json", inst)
    assert run("solve-sa", "--instance", path, "--preset", "quality", "--seed", 5, "--out", tmp_path / "sa") == 0
    assert run("enumerate", "--instance", path, "--out", tmp_path / "en") == 0
    sa = json.loads((tmp_path / "sa" / "solution.json").read_text())
    en = json.loads((tmp_path / "en" / "enumerate.json").read_text())
    assert en["count"] == 108
    assert sa["tree_ratio"] == pytest.approx(en["best_ratio"], abs=1e-12)
    assert en["best_ratio"] == enumerate_all(inst).best_ratio


def test_enumerate_too_large(tmp_path):
    path = save_instance(tmp_path / "six.json", ProblemInstance.from_dims([(1, 1, 1)] * 6))
    assert run("enumerate", "--instance", path, "--out", tmp_path) == 2


def test_solve_sa_bad_override(tmp_path):
    path = save_instance(tmp_path / "two.json", ProblemInstance.from_dims([(1, 1, 1)] * 2))
    assert run("solve-sa", "--instance", path, "--alpha", "1.5", "--out", tmp_path) == 2


def test_derive3d_plain_and_seeded(tmp_path):
    src = ami_like(tmp_path / "ami.csv", n=12)
    for d in ("a", "b"):
        assert run("derive3d", "--input", src, "--seed", 3, "--out", tmp_path / d) == 0
    a = (tmp_path / "a" / "ami_3d.json").read_bytes()
    assert a == (tmp_path / "b" / "ami_3d.json").read_bytes()
    assert not (tmp_path / "a" / "ami_composite.json").exists()
    assert len(load_instance(tmp_path / "a" / "ami_3d.json")) == 12


def test_derive3d_grouping(tmp_path):
    src = ami_like(tmp_path / "ami49.csv")
    assert run("derive3d", "--input", src, "--group", "sizes=10,10,10,10,9", "--out", tmp_path) == 0
    comp = load_instance(tmp_path / "ami49_composite.json")
    membership = json.loads((tmp_path / "ami49_membership.json").read_text())
    assert len(comp) == 5
    assert sorted(len(g["members"]) for g in membership["groups"]) == [9, 10, 10, 10, 10]


def test_derive3d_size_mismatch(tmp_path):
    src = ami_like(tmp_path / "ami.csv", n=10)
    assert run("derive3d", "--input", src, "--group", "sizes=5,4", "--out", tmp_path) == 2


def test_eval_ground_truth_fixture(tmp_path):
    assert run("gen", "--count", 6, "--modules", "4..10", "--out", tmp_path / "inst") == 0
    lines = []
    for f in sorted((tmp_path / "inst").glob("inst_*.json")):
        inst = load_instance(f)
        lines += [f"# problem {inst.name}"] + [inst.meta["ground_truth"]] * 5
    cands = tmp_path / "cands.txt"
    cands.write_text("\n".join(lines) + "\n")
    for extra in ([], ["--no-compact"]):
        out = tmp_path / ("o" + "".join(extra))
        assert run("eval", "--instances", tmp_path / "inst", "--candidates", cands, "--out", out, *extra) == 0
        m = json.loads((out / "metrics.json").read_text())
        assert (m["legality_pct"], m["global_ratio"], m["across_best_avg"]) == (100.0, 0.0, 0.0)
        rows = list(csv.DictReader((out / "verdicts.csv").open()))
        assert len(rows) == 30


def test_eval_strict_and_warnings(tmp_path, capsys):
    path = save_instance(tmp_path / "q.json", ProblemInstance.from_dims([(1, 1, 1)] * 2, name="q"))
    save_instance(tmp_path / "r.json", ProblemInstance.from_dims([(1, 1, 1)] * 2, name="r"))
    cands = tmp_path / "c.txt"
    cands.write_text("# problem q\np0;H;p1\n")
    args = ("eval", "--instances", path, tmp_path / "r.json", "--candidates", cands, "--out", tmp_path / "o")
    assert run(*args) == 0
    assert "no legal candidates" in capsys.readouterr().err
    assert run(*args, "--strict") == 1


def test_eval_malformed_candidates_exit_1(tmp_path):
    path = save_instance(tmp_path / "q.json", ProblemInstance.from_dims([(1, 1, 1)] * 2, name="q"))
    cands = tmp_path / "c.txt"
    cands.write_text("p0;p1;H\n")
    assert run("eval", "--instances", path, "--candidates", cands, "--out", tmp_path) == 1


def test_compact_and_render(tmp_path):
    inst = ProblemInstance.from_dims([(1, 2, 3), (2, 1, 3), (3, 3, 1)], name="c")
    path = save_instance(tmp_path / "c.json", inst)
    assert run("compact", "--instance", path, "--expr", "p1;p2;D;p0;H", "--out", tmp_path / "k") == 0
    doc = json.loads((tmp_path / "k" / "layout_compacted.json").read_text())
    assert doc["bounding"] == {"w": 3, "h": 3, "d": 4}
    assert doc["dead_ratio_before"] > doc["dead_ratio_after"]
    svg = tmp_path / "v.svg"
    for _ in range(2):
        assert run("render", "--layout", tmp_path / "k" / "layout_compacted.json", "--svg", svg) == 0
        first = svg.read_bytes() if _ == 0 else first
    assert svg.read_bytes() == first
    assert run("compact", "--instance", path, "--expr", "p0;p1;H", "--out", tmp_path) == 1
    assert run("compact", "--out", tmp_path) == 2


def test_render_malformed_layout(tmp_path):
    bad = tmp_path / "l.json"
    bad.write_text('{"placements": [{"label": "p0"}]}')
    assert run("render", "--layout", bad, "--out", tmp_path) == 1
    overlap = tmp_path / "o.json"
    overlap.write_text(json.dumps({"placements": [
        {"label": "p0", "x": 0, "y": 0, "z": 0, "w": 2, "h": 2, "d": 2},
        {"label": "p1", "x": 1, "y": 1, "z": 1, "w": 2, "h": 2, "d": 2}]}))
    assert run("render", "--layout", overlap, "--out", tmp_path) == 1


def test_bench_small(tmp_path):
    assert run("bench", "--modules", "4", "--per-bucket", 1, "--solvers", "sa_fast", "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "bench_rows.csv").open()))
    assert len(rows) == 1 and rows[0]["n_modules"] == "4"
    assert (tmp_path / "summary.txt").read_text().startswith("   n solver")
    assert run("bench", "--modules", "4", "--per-bucket", 1, "--solvers", "sa_fast", "--format", "json",
               "--out", tmp_path / "j") == 0
    assert json.loads((tmp_path / "j" / "bench_rows.json").read_text())[0]["solver"] == "SA_FAST"


def test_bench_failing_provider_exit_1(tmp_path):
    cands = tmp_path / "c.txt"
    cands.write_text("")
    assert run("bench", "--modules", "3", "--per-bucket", 1, "--solvers", "provider", "--candidates", cands,
               "--out", tmp_path) == 1
    assert run("bench", "--solvers", "nope", "--out", tmp_path) == 2
