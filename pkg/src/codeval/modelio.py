"""Prompt construction, model backends, response code extraction, replay.

build_prompt is a pure function of (case, workspace): identical inputs give
identical prompt bytes, which makes the replay store content-addressable.
Template wording beyond the quoted instruction sentences is versioned via
TEMPLATE_VERSION and hashed into reports.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import textwrap
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import requests

from .core import FixPayload, Language, Scenario, TestCase, WorkspacePayload
from .errors import ContextTooLarge, HttpError, ReplayMiss
from .ingest import RepoWorkspace
from .parsing import parse_source

TEMPLATE_VERSION = "1"
API_KEY_ENV = "CODEVAL_API_KEY"
DEFAULT_FILE_BUDGET = 16000  # rendered characters per context file

COMMENT_PREFIX = {
    Language.PYTHON: "#",
    Language.JAVASCRIPT: "//",
    Language.TYPESCRIPT: "//",
    Language.JAVA: "//",
    Language.CSHARP: "//",
    Language.CPP: "//",
}

FIX_CLOSING = (
    "Describe in a single sentence how you would solve the problem. "
    "Then, fix the error."
)
DOC_NO_EDIT = (
    "You are asked not to change any of the focal code; only add documentation."
)

SYSTEM_TEXT = {
    Scenario.DOC: "You are a programming assistant that documents code.",
    Scenario.FIX: "You are a programming assistant that fixes bugs reported "
                  "by static analysis tools.",
    Scenario.GENERATE: "You are a programming assistant that writes method "
                       "bodies for existing signatures.",
    Scenario.TEST: "You are a programming assistant that writes unit tests.",
    Scenario.WORKSPACE: "You are a programming assistant that answers "
                        "questions about a codebase.",
}


@dataclass(frozen=True)
class Prompt:
    system_text: str
    user_text: str
    scenario: Scenario
    context_files: tuple[tuple[str, str], ...] = ()

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system_text.encode("utf-8"))
        h.update(b"\0")
        h.update(self.user_text.encode("utf-8"))
        return h.hexdigest()


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http_chat" | "replay"
    model_id: str
    endpoint: str = ""
    transcripts_dir: Optional[str] = None
    timeout: float = 120.0
    record: bool = False

    @property
    def backend_id(self) -> str:
        return self.model_id


@dataclass(frozen=True)
class ModelExchange:
    prompt: Prompt
    raw_response: str
    extracted_code: Optional[str]
    backend_id: str
    replay_key: str


def replay_key(backend_id: str, prompt: Prompt) -> str:
    h = hashlib.sha256()
    h.update(backend_id.encode("utf-8"))
    h.update(b"\0")
    h.update(prompt.digest().encode("ascii"))
    return h.hexdigest()[:32]


def template_hash() -> str:
    blob = json.dumps(
        {
            "version": TEMPLATE_VERSION,
            "fix_closing": FIX_CLOSING,
            "doc_no_edit": DOC_NO_EDIT,
            "system": {k.value: v for k, v in SYSTEM_TEXT.items()},
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------- store
class TranscriptStore:
    """Content-addressed transcript directory: <replay_key>.json holding
    {prompt_digest, raw_response}. Read-only during evaluation; append-only
    while recording."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)

    def path_for(self, key: str) -> Path:
        return self.dir / f"{key}.json"

    def get(self, key: str) -> Optional[str]:
        p = self.path_for(key)
        if not p.exists():
            return None
        data = json.loads(p.read_text(encoding="utf-8"))
        return data["raw_response"]

    def put(self, backend_id: str, prompt: Prompt, raw_response: str) -> str:
        self.dir.mkdir(parents=True, exist_ok=True)
        key = replay_key(backend_id, prompt)
        self.path_for(key).write_text(
            json.dumps(
                {"prompt_digest": prompt.digest(), "raw_response": raw_response},
                indent=1,
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        return key


# ---------------------------------------------------------------- prompts
def _truncate_around(
    text: str, focus: tuple[int, int], budget: int
) -> str:
    """Head+tail truncation keeping the focal span in view."""
    if len(text) <= budget:
        return text
    lo, hi = focus
    span = hi - lo
    if span >= budget:
        raise ContextTooLarge(
            f"focal span of {span} chars exceeds context budget {budget}"
        )
    slack = (budget - span) // 2
    start = max(0, lo - slack)
    end = min(len(text), hi + slack)
    head = "" if start == 0 else "/* ... truncated ... */\n"
    tail = "" if end == len(text) else "\n/* ... truncated ... */"
    return head + text[start:end] + tail


def _file_text(ws: RepoWorkspace, rel_path: str) -> str:
    return (ws.root / rel_path).read_text(encoding="utf-8", errors="replace")


def build_prompt(
    case: TestCase,
    ws: Optional[RepoWorkspace],
    file_budget: int = DEFAULT_FILE_BUDGET,
    retrieval_snippets: Optional[list[tuple[str, str]]] = None,
) -> Prompt:
    scenario = case.scenario
    system_text = SYSTEM_TEXT[scenario]

    if scenario is Scenario.WORKSPACE:
        assert isinstance(case.payload, WorkspacePayload)
        parts = [case.payload.query, ""]
        if retrieval_snippets:
            parts.append("Here are code snippets from the workspace that may help:")
            for sid, text in retrieval_snippets:
                parts.append(f"--- snippet {sid} ---")
                parts.append(text)
        user = "\n".join(parts)
        return Prompt(system_text, user, scenario)

    assert ws is not None
    method = case.method
    rel = method.file_path
    source = _file_text(ws, rel)
    span = method.body_span
    method_text = source[span[0] : span[1]]
    filename = Path(rel).name

    if scenario is Scenario.FIX:
        assert isinstance(case.payload, FixPayload)
        diag = case.payload.diagnostic
        file_block = _truncate_around(source, span, file_budget)
        snippet = textwrap.dedent(method_text)
        line_text = _line_of(source, diag.line).strip()
        user = (
            f"You have been given the file contents of {filename}.\n"
            f"{file_block}\n"
            "The following code snippet within the file has a bug:\n"
            f"{snippet}\n"
            "This is the line with the error:\n"
            f"{line_text}\n"
            "This is the problem with the line:\n"
            f"{diag.message}\n"
            f"{FIX_CLOSING}"
        )
        return Prompt(system_text, user, scenario, ((rel, file_block),))

    if scenario is Scenario.DOC:
        focal = _truncate_around(method_text, (0, len(method_text)), file_budget)
        user = (
            f"Write documentation for {method.name}\n"
            "-----------------------------\n"
            f"{focal}\n"
            f"{DOC_NO_EDIT}"
        )
        return Prompt(system_text, user, scenario, ((rel, focal),))

    if scenario is Scenario.GENERATE:
        comment = COMMENT_PREFIX[case.language] + " Your Code Here."
        replaced = _replace_body_with_comment(source, case, ws, comment)
        file_block = _truncate_around(replaced, span, file_budget)
        user = (
            f"You have been given the file contents of {filename}, with one "
            "method body removed:\n"
            f"{file_block}\n"
            f"Write the body of {method.name} so it matches its signature "
            "and docstring. Return the complete method."
        )
        return Prompt(system_text, user, scenario, ((rel, file_block),))

    if scenario is Scenario.TEST:
        doc = method.docstring_text or ""
        focal = _truncate_around(method_text, (0, len(method_text)), file_budget)
        user = (
            f"Write a working unit test for the method {method.name} from "
            f"{filename}.\n"
            "Method signature:\n"
            f"{method.signature_text}\n"
            + (f"Docstring:\n{doc}\n" if doc else "")
            + "Method body:\n"
            f"{focal}\n"
            "Return only the test code."
        )
        return Prompt(system_text, user, scenario, ((rel, focal),))

    raise AssertionError(f"unhandled scenario {scenario}")


def _line_of(source: str, line: int) -> str:
    lines = source.splitlines()
    if 1 <= line <= len(lines):
        return lines[line - 1]
    return ""


def _replace_body_with_comment(
    source: str, case: TestCase, ws: RepoWorkspace, comment: str
) -> str:
    """Replace the focal method's body with a commented placeholder,
    keeping the signature (and docstring for Python) visible."""
    pf = parse_source(source.encode("utf-8"), case.language, case.method.file_path)
    target = None
    for m in pf.methods:
        if m.span == tuple(case.method.body_span) and m.name == case.method.name:
            target = m
            break
    if target is None:
        target = pf.method_named(case.method.name)
    if target is None:
        return source
    src = pf.source_bytes
    interior = target.interior
    indent = _interior_indent(src, interior[0])
    if case.language is Language.PYTHON and target.docstring_text:
        doc_end = _python_docstring_end(src, target)
        keep = src[: doc_end].decode("utf-8", errors="replace")
        rest = src[target.span[1]:].decode("utf-8", errors="replace")
        return keep + "\n" + indent + comment + rest
    head = src[: interior[0]].decode("utf-8", errors="replace")
    tail = src[interior[1]:].decode("utf-8", errors="replace")
    if case.language is Language.PYTHON:
        return head + comment + tail
    return head + "\n" + indent + comment + "\n" + tail


def _interior_indent(src: bytes, interior_start: int) -> str:
    line_start = src.rfind(b"\n", 0, interior_start) + 1
    prefix = src[line_start:interior_start].decode("utf-8", errors="replace")
    indent = re.match(r"\s*", prefix).group(0)
    return indent if indent else "    "


def _python_docstring_end(src: bytes, method) -> int:
    text = src[method.interior[0] : method.span[1]]
    doc = (method.docstring_text or "").encode("utf-8")
    idx = text.find(doc)
    if idx < 0:
        return method.interior[0]
    end = idx + len(doc)
    # include the closing quotes
    closer = text.find(b'"""', end)
    alt = text.find(b"'''", end)
    candidates = [c for c in (closer, alt) if c >= 0]
    if candidates:
        end = min(candidates) + 3
    return method.interior[0] + end


# ---------------------------------------------------------------- backends
def complete(prompt: Prompt, backend: BackendConfig) -> ModelExchange:
    key = replay_key(backend.backend_id, prompt)
    if backend.kind == "replay":
        if backend.transcripts_dir is None:
            raise ReplayMiss("replay backend has no transcript directory")
        store = TranscriptStore(backend.transcripts_dir)
        raw = store.get(key)
        if raw is None:
            raise ReplayMiss(f"no transcript for key {key}")
    elif backend.kind == "http_chat":
        raw = _http_chat(prompt, backend)
        if backend.record and backend.transcripts_dir:
            TranscriptStore(backend.transcripts_dir).put(
                backend.backend_id, prompt, raw
            )
    else:
        raise HttpError(f"unknown backend kind {backend.kind!r}")
    return ModelExchange(
        prompt=prompt,
        raw_response=raw,
        extracted_code=None,
        backend_id=backend.backend_id,
        replay_key=key,
    )


def _http_chat(prompt: Prompt, backend: BackendConfig) -> str:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": backend.model_id,
        "messages": [
            {"role": "system", "content": prompt.system_text},
            {"role": "user", "content": prompt.user_text},
        ],
    }
    try:
        resp = requests.post(
            backend.endpoint, json=body, headers=headers, timeout=backend.timeout
        )
    except requests.Timeout as exc:
        raise HttpError(f"backend timeout: {exc}") from exc
    except requests.RequestException as exc:
        raise HttpError(f"backend request failed: {exc}") from exc
    if resp.status_code != 200:
        raise HttpError(
            f"backend returned {resp.status_code}: {resp.text[:300]}",
            status=resp.status_code,
        )
    data = resp.json()
    try:
        return data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise HttpError(f"malformed chat response: {exc}") from exc


# ---------------------------------------------------------------- extract
_FENCE = re.compile(
    r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\r?\n(.*?)```", re.DOTALL
)


def extract_code(raw_response: str, language: Language) -> Optional[str]:
    """Largest fenced code block; failing that, the longest contiguous
    line-range that parses cleanly; None when neither exists."""
    blocks = [m.group(2) for m in _FENCE.finditer(raw_response)]
    if blocks:
        return max(blocks, key=len).strip("\n")

    lines = raw_response.splitlines()
    best: Optional[str] = None
    start = 0
    while start < len(lines):
        if not _looks_like_code(lines[start], language):
            start += 1
            continue
        for end in range(len(lines), start, -1):
            candidate = "\n".join(lines[start:end]).rstrip()
            if not candidate:
                continue
            if len(best or "") >= len(candidate):
                break
            pf = parse_source(candidate.encode("utf-8"), language)
            if pf.parse_ok and (pf.methods or _has_code_tokens(candidate)):
                best = candidate
                break
        start += 1
    return best


_CODE_STARTERS = {
    Language.PYTHON: ("def ", "class ", "import ", "from ", "@", "async "),
    Language.JAVASCRIPT: ("function", "const ", "let ", "var ", "class ",
                          "export ", "import ", "//", "/*"),
    Language.TYPESCRIPT: ("function", "const ", "let ", "var ", "class ",
                          "export ", "import ", "//", "/*"),
    Language.JAVA: ("public ", "private ", "protected ", "class ", "void ",
                    "static ", "//", "/*", "@"),
    Language.CSHARP: ("public ", "private ", "protected ", "class ", "void ",
                      "static ", "//", "/*", "["),
    Language.CPP: ("#include", "void ", "int ", "class ", "struct ",
                   "template", "//", "/*", "auto ", "namespace "),
}


def _looks_like_code(line: str, language: Language) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    return stripped.startswith(_CODE_STARTERS.get(language, ())) or (
        language is not Language.PYTHON and stripped.endswith(("{", ";", "*/"))
    )


def _has_code_tokens(candidate: str) -> bool:
    return any(ch in candidate for ch in "={}();") or "def " in candidate
