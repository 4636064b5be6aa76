"""Workspace scenario scoring: MRR over ranked snippet lists and the
end-to-end keyword-detection check."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import TestCase, Verdict, WorkspacePayload
from .errors import EmptyInput, SchemaViolation
from .ingest import RepoWorkspace
from .modelio import BackendConfig, Prompt, build_prompt, complete


@dataclass(frozen=True)
class Snippet:
    id: str
    file_path: str
    span: tuple[int, int]


@dataclass(frozen=True)
class RankedRetrieval:
    case_id: str
    snippets: tuple[Snippet, ...]
    rank_of_correct: Optional[int] = None

    def __post_init__(self) -> None:
        r = self.rank_of_correct
        if r is not None and not (1 <= r <= len(self.snippets)):
            raise SchemaViolation(
                f"rank {r} outside snippet list of length {len(self.snippets)}"
            )


def reciprocal_rank(rr: RankedRetrieval) -> float:
    """1/r for the correct snippet's rank; 0 on a miss."""
    if rr.rank_of_correct is None:
        return 0.0
    return 1.0 / rr.rank_of_correct


def mrr(retrievals: list[RankedRetrieval]) -> float:
    if not retrievals:
        raise EmptyInput("mrr over an empty retrieval list")
    return sum(reciprocal_rank(r) for r in retrievals) / len(retrievals)


def keyword_detect(
    answer: str, keywords: list[str] | tuple[str, ...], mode: str = "all"
) -> bool:
    """Case-insensitive, prefix-tolerant keyword detection: each keyword
    must match at a word start ('index' matches 'indexes'); trailing
    characters are free."""
    if not keywords:
        raise EmptyInput("keyword list is empty")
    hits = keyword_hits(answer, keywords)
    if mode == "any":
        return any(hits.values())
    return all(hits.values())


def keyword_hits(
    answer: str, keywords: list[str] | tuple[str, ...]
) -> dict[str, bool]:
    out = {}
    for kw in keywords:
        pattern = r"(?<!\w)" + re.escape(kw)
        out[kw] = re.search(pattern, answer, re.IGNORECASE) is not None
    return out


def load_retrievals(path: Path) -> dict[str, RankedRetrieval]:
    """JSONL: {case_id, snippets: [{id, path, start, end}], correct_rank?}."""
    out: dict[str, RankedRetrieval] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON: {exc}", line=lineno)
            try:
                snippets = tuple(
                    Snippet(s["id"], s["path"], (int(s["start"]), int(s["end"])))
                    for s in rec.get("snippets", [])
                )
                rr = RankedRetrieval(
                    case_id=rec["case_id"],
                    snippets=snippets,
                    rank_of_correct=rec.get("correct_rank"),
                )
            except (KeyError, TypeError) as exc:
                raise SchemaViolation(f"bad retrieval record: {exc}", line=lineno)
            out[rr.case_id] = rr
    return out


def snippet_texts(
    ws: Optional[RepoWorkspace], retrieval: RankedRetrieval
) -> list[tuple[str, str]]:
    texts = []
    for s in retrieval.snippets:
        content = ""
        if ws is not None:
            p = ws.root / s.file_path
            if p.exists():
                data = p.read_bytes()
                content = data[s.span[0] : s.span[1]].decode("utf-8", "replace")
        texts.append((s.id, content))
    return texts


def end_to_end(
    case: TestCase,
    ws: Optional[RepoWorkspace],
    backend: BackendConfig,
    retrieval: Optional[RankedRetrieval],
    keyword_mode: str = "all",
) -> Verdict:
    """Answer the query with the retrieved snippets as context, then check
    the answer for the associated keywords."""
    assert isinstance(case.payload, WorkspacePayload)
    snippets = snippet_texts(ws, retrieval) if retrieval is not None else []
    prompt = build_prompt(case, ws, retrieval_snippets=snippets)
    exchange = complete(prompt, backend)
    hits = keyword_hits(exchange.raw_response, case.payload.keywords)
    passed = (
        any(hits.values()) if keyword_mode == "any" else all(hits.values())
    )
    rr_score = reciprocal_rank(retrieval) if retrieval is not None else 0.0
    return Verdict(
        case_id=case.id,
        syntax_ok=True,
        passed=passed,
        failure_class=None,
        evidence={
            "keyword_hits": hits,
            "keyword_mode": keyword_mode,
            "reciprocal_rank": rr_score,
            "replay_key": exchange.replay_key,
        },
    )
