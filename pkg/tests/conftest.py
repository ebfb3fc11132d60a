import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from spaceplan3d import CutAxis, Dims, Internal, Leaf, ProblemInstance

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

AXES = (CutAxis.H, CutAxis.V, CutAxis.D)

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
    print(line)
    ACCEPTANCE_RESULTS.append((name, ok, detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))


def random_tree(rng: random.Random, n: int):
    """Uniformly shuffled leaves over a random split shape, random cuts."""
    ids = list(range(n))
    rng.shuffle(ids)

    def build(items):
        if len(items) == 1:
            return Leaf(items[0])
        cut = rng.randint(1, len(items) - 1)
        return Internal(rng.choice(AXES), build(items[:cut]), build(items[cut:]))

    return build(ids)


def random_instance(rng: random.Random, n: int, lo: int = 1, hi: int = 10) -> ProblemInstance:
    return ProblemInstance.from_dims([(rng.randint(lo, hi), rng.randint(lo, hi), rng.randint(lo, hi)) for _ in range(n)])


dims_st = st.builds(Dims, st.integers(1, 12), st.integers(1, 12), st.integers(1, 12))


@st.composite
def tree_and_instance(draw, min_n=1, max_n=16):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    inst = ProblemInstance.from_dims(draw(st.lists(dims_st, min_size=n, max_size=n)))
    return random_tree(rng, n), inst


@pytest.fixture
def rng():
    return random.Random(12345)
