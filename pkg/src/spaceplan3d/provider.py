"""Candidate expressions from outside sources (fixture files or an HTTP
text-completion endpoint) and best-of-k scoring of them.

Raw candidate text is scored exactly as received; nothing is repaired.
"""

from __future__ import annotations

import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import httpx

from .compaction import compact_xyz
from .deadspace import CandidateScore, dead_ratio
from .geometry import ProblemInstance
from .tree import LegalityError, decode_postorder, parse_tokens, realize, validate_legality

INSTRUCTION = (
    "Output the post-order slicing tree expression for these modules, "
    "using the module labels and the cut operators H, V, D separated by semicolons."
)


def render_prompt(inst: ProblemInstance) -> str:
    lines = [f"{m.label}: {m.dims.w} {m.dims.h} {m.dims.d}" for m in inst.modules]
    lines.append(INSTRUCTION)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CandidateSet:
    problem_id: str
    raw_texts: tuple[str, ...]
    provenance: str = "file"  # file | endpoint


# -- candidate files ---------------------------------------------------------------


class CandidateFileError(ValueError):
    pass


class MalformedLine(CandidateFileError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: malformed{': ' + detail if detail else ''}")


class MissingProblemHeader(CandidateFileError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: candidate before any '# problem <id>' header")


_HEADER = re.compile(r"#\s*problem\s+(\S+)\s*")


def parse_candidates(text: str) -> list[CandidateSet]:
    """``# problem <id>`` header, then one candidate per line; blank lines ignored.

    Repeated headers for the same id extend that problem's candidates.
    """
    order: list[str] = []
    groups: dict[str, list[str]] = {}
    header_line: dict[str, int] = {}
    current = None
    for no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            m = _HEADER.fullmatch(line.strip())
            if not m:
                raise MalformedLine(no, "expected '# problem <id>'")
            current = m.group(1)
            if current not in groups:
                order.append(current)
                groups[current] = []
                header_line[current] = no
            continue
        if current is None:
            raise MissingProblemHeader(no)
        groups[current].append(line)
    for pid in order:
        if not groups[pid]:
            raise MalformedLine(header_line[pid], f"problem {pid} has no candidates")
    return [CandidateSet(pid, tuple(groups[pid]), "file") for pid in order]


def load_candidates_file(path) -> list[CandidateSet]:
    return parse_candidates(Path(path).read_text())


def format_candidates(sets: Sequence[CandidateSet]) -> str:
    out = []
    for s in sets:
        out.append(f"# problem {s.problem_id}")
        out.extend(s.raw_texts)
    return "\n".join(out) + "\n"


# -- HTTP provider -----------------------------------------------------------------


class ProviderError(RuntimeError):
    kind = "provider_error"


class NetworkError(ProviderError):
    kind = "network_error"


class Timeout(ProviderError):
    kind = "timeout"


class NonSuccessStatus(ProviderError):
    kind = "non_success_status"

    def __init__(self, status: int, body: str = ""):
        self.status = status
        super().__init__(f"HTTP {status}: {body[:200]}")


@dataclass(frozen=True)
class ProviderConfig:
    mode: str = "file"  # file | http
    endpoint: str | None = None
    token_env: str | None = None
    n_candidates: int = 5
    timeout: float = 60.0
    max_in_flight: int = 4
    # dotted path to the completion text in the JSON response, e.g. "choices.0.text"
    text_field: str = "text"
    extra_body: Mapping = field(default_factory=dict)
    candidates_path: str | None = None

    def __post_init__(self):
        if self.mode not in ("file", "http"):
            raise ValueError(f"unknown provider mode {self.mode!r}")
        if self.mode == "http" and not self.endpoint:
            raise ValueError("http mode requires an endpoint")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")


def _dig(doc, path: str):
    cur = doc
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        else:
            cur = cur[part]
    return cur


def fetch_candidates_http(cfg: ProviderConfig, inst: ProblemInstance, client: httpx.Client | None = None,
                          problem_id: str | None = None) -> CandidateSet:
    """POST the rendered prompt ``n_candidates`` times; texts are returned verbatim."""
    if cfg.mode != "http":
        raise ValueError("fetch_candidates_http needs an http-mode ProviderConfig")
    headers = {}
    if cfg.token_env:
        token = os.environ.get(cfg.token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    body = {"prompt": render_prompt(inst), **cfg.extra_body}
    own = client is None
    client = client or httpx.Client(timeout=cfg.timeout)
    texts = []
    try:
        for _ in range(cfg.n_candidates):
            try:
                resp = client.post(cfg.endpoint, json=body, headers=headers, timeout=cfg.timeout)
            except httpx.TimeoutException as e:
                raise Timeout(str(e) or "request timed out") from e
            except httpx.HTTPError as e:
                raise NetworkError(str(e)) from e
            if not resp.is_success:
                raise NonSuccessStatus(resp.status_code, resp.text)
            try:
                text = _dig(resp.json(), cfg.text_field)
            except (ValueError, KeyError, IndexError, TypeError) as e:
                raise ProviderError(f"response has no {cfg.text_field!r} text field") from e
            texts.append(str(text))
    finally:
        if own:
            client.close()
    return CandidateSet(problem_id or inst.name, tuple(texts), "endpoint")


@dataclass(frozen=True)
class ProviderFailure:
    problem_id: str
    kind: str
    message: str


def fetch_all(cfg: ProviderConfig, instances: Sequence[ProblemInstance],
              client: httpx.Client | None = None) -> dict[str, CandidateSet | ProviderFailure]:
    """Fetch for every instance with at most ``max_in_flight`` problems at once.

    A failing problem becomes a ProviderFailure; the others carry on.
    """
    own = client is None
    client = client or httpx.Client(timeout=cfg.timeout)

    def one(inst):
        try:
            return fetch_candidates_http(cfg, inst, client=client)
        except ProviderError as e:
            return ProviderFailure(inst.name, e.kind, str(e))

    try:
        with ThreadPoolExecutor(max_workers=max(1, cfg.max_in_flight)) as pool:
            results = list(pool.map(one, instances))
    finally:
        if own:
            client.close()
    return {inst.name: r for inst, r in zip(instances, results)}


# -- evaluation --------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateVerdict:
    index: int
    raw_text: str
    legal: bool
    reason: str
    expr: str | None = None  # canonical text when parseable
    tree_ratio: float | None = None  # slicing-tree dead ratio
    compacted_ratio: float | None = None  # bounding-box ratio after compaction
    ratio: float | None = None  # the ratio that is ranked and reported

    def score(self) -> CandidateScore:
        return CandidateScore(self.legal, self.ratio, self.reason)


@dataclass(frozen=True)
class CandidateEvaluation:
    problem_id: str
    verdicts: tuple[CandidateVerdict, ...]
    best_index: int | None

    @property
    def best(self) -> CandidateVerdict | None:
        return None if self.best_index is None else self.verdicts[self.best_index]

    @property
    def no_legal_candidates(self) -> bool:
        return self.best_index is None

    def reason_counts(self) -> Counter:
        return Counter(v.reason for v in self.verdicts)


def score_text(inst: ProblemInstance, text: str, index: int = 0, with_compaction: bool = True) -> CandidateVerdict:
    try:
        expr = parse_tokens(text)
    except LegalityError as e:
        return CandidateVerdict(index, text, False, e.reason)
    verdict = validate_legality(expr, inst)
    if not verdict.legal:
        return CandidateVerdict(index, text, False, verdict.reason, expr=str(expr))
    tree = decode_postorder(expr, inst)
    tree_ratio = dead_ratio(tree, inst)
    compacted = None
    if with_compaction:
        compacted = compact_xyz(realize(tree, inst)).geometric_dead_ratio()
    return CandidateVerdict(index, text, True, "legal", str(expr), tree_ratio, compacted,
                            compacted if with_compaction else tree_ratio)


def evaluate_candidates(inst: ProblemInstance, cset: CandidateSet, with_compaction: bool = True) -> CandidateEvaluation:
    """Parse, check, decode, realise, optionally compact and score every
    candidate; the best is the first legal candidate with the lowest ratio."""
    verdicts = tuple(score_text(inst, t, i, with_compaction) for i, t in enumerate(cset.raw_texts))
    best = None
    for v in verdicts:
        if v.legal and (best is None or v.ratio < verdicts[best].ratio):
            best = v.index
    return CandidateEvaluation(cset.problem_id, verdicts, best)
