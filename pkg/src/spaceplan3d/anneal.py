"""Simulated annealing over post-order slicing expressions.

Internally an expression is a list of ints: module ids are >= 0 and the cuts
H, V, D are -1, -2, -3. The Metropolis cost is the tree dead ratio in
percentage points, so temperatures (and ``t_min``) are in the same unit.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

from .geometry import ProblemInstance
from .tree import CutAxis, CutToken, ModuleToken, PostOrderExpr, as_expr

H, V, D = -1, -2, -3
_CUT_OF = {H: CutAxis.H, V: CutAxis.V, D: CutAxis.D}
_CODE_OF = {a: c for c, a in _CUT_OF.items()}
_CUT_CODES = (H, V, D)


@dataclass(frozen=True)
class SaConfig:
    k: int = 1
    alpha: float = 0.70
    batch: int = 125
    t_min: float = 1.0
    t_init: float | None = None  # None: calibrate from sampled uphill moves
    time_budget: float | None = None  # seconds
    seed: int = 0
    stop_at_zero: bool = True  # a zero-dead tree cannot be improved on

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.batch < 1 or self.k < 1:
            raise ValueError("batch and k must be >= 1")
        if self.t_min <= 0:
            raise ValueError("t_min must be positive")
        if self.t_init is not None and self.t_init <= 0:
            raise ValueError("t_init must be positive")


class SaPreset(enum.Enum):
    FAST = SaConfig(k=1, alpha=0.70, batch=125, t_min=1.0)
    QUALITY = SaConfig(k=2, alpha=0.97, batch=200, t_min=1e-3)

    def config(self, **overrides) -> SaConfig:
        return replace(self.value, **overrides)


SA_FAST = SaPreset.FAST.value
SA_QUALITY = SaPreset.QUALITY.value


@dataclass(frozen=True)
class LevelRecord:
    level: int
    temperature: float
    best_ratio: float
    acceptance_rate: float


@dataclass
class AnnealTrace:
    levels: list[LevelRecord] = field(default_factory=list)
    best: PostOrderExpr | None = None
    best_ratio: float = 1.0
    initial_ratio: float = 1.0
    t_init: float = 0.0
    proposals: int = 0
    uphill_accepted: int = 0
    elapsed: float = 0.0
    stop_reason: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "temperature", "best_ratio", "acceptance_rate"])
        for r in self.levels:
            w.writerow([r.level, repr(r.temperature), repr(r.best_ratio), repr(r.acceptance_rate)])
        return buf.getvalue()


# -- int-token helpers --------------------------------------------------------


def to_codes(expr: PostOrderExpr | str) -> list[int]:
    out = []
    for tok in as_expr(expr).tokens:
        out.append(int(tok.label[1:]) if isinstance(tok, ModuleToken) else _CODE_OF[tok.axis])
    return out


def from_codes(codes: Sequence[int]) -> PostOrderExpr:
    return PostOrderExpr(
        tuple(ModuleToken(f"p{c}") if c >= 0 else CutToken(_CUT_OF[c]) for c in codes)
    )


def root_volume(codes: Sequence[int], dims: Sequence[tuple[int, int, int]]) -> int:
    stack = []
    push, pop = stack.append, stack.pop
    for c in codes:
        if c >= 0:
            push(dims[c])
            continue
        b = pop()
        a = pop()
        if c == H:
            push((a[0] + b[0], a[1] if a[1] > b[1] else b[1], a[2] if a[2] > b[2] else b[2]))
        elif c == V:
            push((a[0] if a[0] > b[0] else b[0], a[1] + b[1], a[2] if a[2] > b[2] else b[2]))
        else:
            push((a[0] if a[0] > b[0] else b[0], a[1] if a[1] > b[1] else b[1], a[2] + b[2]))
    w, h, d = stack[0]
    return w * h * d


class _Evaluator:
    """Memoised dead ratio of an int-token expression (telescoped: the total
    of all merge dead spaces is root volume minus module volumes)."""

    def __init__(self, inst: ProblemInstance):
        self.dims = [m.dims.as_tuple() for m in inst.modules]
        self.used = inst.total_volume()
        self.cache: dict[tuple[int, ...], tuple[int, int]] = {}

    def dead_and_root(self, codes) -> tuple[int, int]:
        key = tuple(codes)
        hit = self.cache.get(key)
        if hit is None:
            root = root_volume(key, self.dims)
            hit = self.cache[key] = (root - self.used, root)
        return hit

    def ratio(self, codes) -> float:
        dead, root = self.dead_and_root(codes)
        return dead / root


# -- moves ------------------------------------------------------------------


def random_codes(n: int, rng: random.Random) -> list[int]:
    perm = list(range(n))
    rng.shuffle(perm)

    def build(lo: int, hi: int) -> list[int]:
        if hi - lo == 1:
            return [perm[lo]]
        mid = rng.randint(lo + 1, hi - 1)
        return build(lo, mid) + build(mid, hi) + [rng.choice(_CUT_CODES)]

    return build(0, n)


def initial_solution(inst: ProblemInstance, rng: random.Random) -> PostOrderExpr:
    """Random leaf order on a random tree shape with random cuts."""
    if len(inst) < 1:
        raise ValueError("instance has no modules")
    return from_codes(random_codes(len(inst), rng))


def _swap_modules(codes: list[int], rng: random.Random) -> bool:
    pos = [i for i, c in enumerate(codes) if c >= 0]
    m = len(pos)
    if m < 2:
        return False
    # int(random() * n) instead of randrange: this is the hot path
    a = int(rng.random() * m)
    b = int(rng.random() * (m - 1))
    if b >= a:
        b += 1
    i, j = pos[a], pos[b]
    codes[i], codes[j] = codes[j], codes[i]
    return True


def _change_cut(codes: list[int], rng: random.Random) -> bool:
    pos = [i for i, c in enumerate(codes) if c < 0]
    if not pos:
        return False
    i = pos[int(rng.random() * len(pos))]
    # step 1 or 2 around the three codes -1, -2, -3
    codes[i] = -1 - ((-1 - codes[i] + 1 + int(rng.random() * 2)) % 3)
    return True


def _swap_adjacent(codes: list[int], rng: random.Random, tries: int = 8) -> bool:
    """Swap a neighbouring operand/operator pair if the stack law survives."""
    n = len(codes)
    if n < 3:
        return False
    for _ in range(tries):
        i = int(rng.random() * (n - 1))
        a, b = codes[i], codes[i + 1]
        if (a >= 0) == (b >= 0):
            continue
        if b < 0:
            # operand then cut -> cut then operand: the prefix ending at i
            # loses one operand and must keep >= 2 before the moved cut fires
            depth = 0
            for c in codes[:i]:
                depth += 1 if c >= 0 else -1
            if depth < 2:
                continue
        codes[i], codes[i + 1] = b, a
        return True
    return False


_MOVES = (_swap_modules, _change_cut, _swap_adjacent)


def perturb_codes(codes: Sequence[int], k: int, rng: random.Random) -> list[int]:
    out = list(codes)
    for _ in range(k):
        move = int(rng.random() * 3)
        if not _MOVES[move](out, rng):
            # M1/M2 never break legality; one of them applies whenever n >= 2
            if not (_swap_modules(out, rng) if rng.random() < 0.5 else _change_cut(out, rng)):
                _swap_modules(out, rng) or _change_cut(out, rng)
    return out


def perturb(expr: PostOrderExpr | str, k: int, rng: random.Random) -> PostOrderExpr:
    """Apply ``k`` elementary moves chosen uniformly from: swap two modules,
    change one cut to another axis, swap an adjacent operand/operator pair.
    Legal in, legal out."""
    return from_codes(perturb_codes(to_codes(expr), k, rng))


# -- annealing ----------------------------------------------------------------


def _calibrate_t_init(codes, ev: _Evaluator, k: int, rng: random.Random, samples: int = 100,
                      accept: float = 0.9) -> float | None:
    """Temperature at which the mean uphill step of a short random walk is
    accepted with probability ``accept``. Walking (rather than sampling
    around the start) keeps a poor start from hiding every uphill move."""
    walk = list(codes)
    cost = 100.0 * ev.ratio(walk)
    ups, steps = [], []
    for _ in range(samples):
        nxt = perturb_codes(walk, k, rng)
        nxt_cost = 100.0 * ev.ratio(nxt)
        delta = nxt_cost - cost
        if delta > 0:
            ups.append(delta)
        if delta:
            steps.append(abs(delta))
        walk, cost = nxt, nxt_cost
    sample = ups or steps
    if not sample:
        return None
    return -(sum(sample) / len(sample)) / math.log(accept)


def anneal(inst: ProblemInstance, cfg: SaConfig = SA_FAST) -> tuple[PostOrderExpr, AnnealTrace]:
    """Metropolis search over slicing expressions minimising dead ratio.

    ``batch`` proposals per temperature level, then ``T <- alpha * T``; stops
    once ``T < t_min``, when the time budget runs out, or (by default) as
    soon as a zero-dead tree is found. At least one level always runs.
    """
    start = time.perf_counter()
    deadline = start + cfg.time_budget if cfg.time_budget is not None else math.inf
    rng = random.Random(cfg.seed)
    ev = _Evaluator(inst)
    n = len(inst)
    trace = AnnealTrace()

    cur = random_codes(n, rng)
    cur_dead, cur_root = ev.dead_and_root(cur)
    cur_cost = 100.0 * cur_dead / cur_root
    best, best_dead, best_cost = cur, cur_dead, cur_cost
    trace.initial_ratio = cur_dead / cur_root

    t = cfg.t_init
    if t is None:
        t = _calibrate_t_init(cur, ev, cfg.k, rng) if n > 1 else None
        t = cfg.t_min if t is None else max(t, cfg.t_min)
    trace.t_init = t

    stop = ""
    if n == 1 or (cfg.stop_at_zero and best_dead == 0):
        stop = "optimal"
    level = 0
    while not stop:
        accepted = 0
        done = 0
        for _ in range(cfg.batch):
            if time.perf_counter() > deadline:
                stop = "time_budget"
                break
            cand = perturb_codes(cur, cfg.k, rng)
            dead, root = ev.dead_and_root(cand)
            cost = 100.0 * dead / root
            delta = cost - cur_cost
            done += 1
            if delta <= 0 or rng.random() < math.exp(-delta / t):
                if delta > 0:
                    trace.uphill_accepted += 1
                accepted += 1
                cur, cur_cost = cand, cost
                if cost < best_cost:
                    best, best_dead, best_cost = cand, dead, cost
                    if cfg.stop_at_zero and dead == 0:
                        stop = "optimal"
                        break
        trace.proposals += done
        dead, root = ev.dead_and_root(best)
        trace.levels.append(LevelRecord(level, t, dead / root, accepted / done if done else 0.0))
        level += 1
        t *= cfg.alpha
        if not stop and t < cfg.t_min:
            stop = "t_min"

    dead, root = ev.dead_and_root(best)
    trace.best = from_codes(best)
    trace.best_ratio = dead / root
    trace.elapsed = time.perf_counter() - start
    trace.stop_reason = stop
    return trace.best, trace


# -- exhaustive oracle ----------------------------------------------------------


class TooLarge(ValueError):
    def __init__(self, n: int, limit: int):
        self.n = n
        super().__init__(f"exhaustive enumeration refused for n={n} (limit {limit})")


@dataclass(frozen=True)
class EnumResult:
    best: PostOrderExpr
    best_ratio: float
    count: int


def _shapes(n: int) -> list[tuple[bool, ...]]:
    """Post-order skeletons of all full binary trees with n leaves (True = leaf)."""
    if n == 1:
        return [(True,)]
    out = []
    for i in range(1, n):
        for a in _shapes(i):
            for b in _shapes(n - i):
                out.append(a + b + (False,))
    return out


def enumerate_all(inst: ProblemInstance, limit: int = 5) -> EnumResult:
    """Score every (shape, leaf order, cut labelling); first minimiser wins."""
    n = len(inst)
    if n > limit:
        raise TooLarge(n, limit)
    if n < 1:
        raise ValueError("instance has no modules")
    dims = [m.dims.as_tuple() for m in inst.modules]
    used = inst.total_volume()
    best_codes, best_root, count = None, None, 0
    for shape in _shapes(n):
        for perm in itertools.permutations(range(n)):
            for cuts in itertools.product(_CUT_CODES, repeat=n - 1):
                leaf_it, cut_it = iter(perm), iter(cuts)
                codes = [next(leaf_it) if is_leaf else next(cut_it) for is_leaf in shape]
                root = root_volume(codes, dims)
                count += 1
                if best_root is None or root < best_root:
                    best_codes, best_root = codes, root
    return EnumResult(from_codes(best_codes), (best_root - used) / best_root, count)
