"""Scenario test-case materialization from an ingested workspace.

Case criteria: doc cases need methods longer than three lines that are not
minifier output; fix cases need a baseline diagnostic outside the
import/config exclusion list; generate cases need a docstring plus at least
one covering baseline-passing test; test cases exclude methods that live in
test files. Ordering is stable: (path, span).
"""

from __future__ import annotations

import json
import fnmatch
from pathlib import Path
from typing import Iterable, Optional

from .core import (
    Diagnostic,
    FixPayload,
    Language,
    MethodInfo,
    Scenario,
    TestCase,
    WorkspacePayload,
    language_for_path,
)
from .coverage import CoverageMap
from .errors import SchemaViolation
from .ingest import RepoWorkspace, TestStatus
from .parsing import ParsedFile, ParsedMethod, line_byte_span, parse_source

MAX_LINE_LEN = 2000
MEAN_LINE_LEN = 200
FEW_LINES = 10

SKIP_DIRS = {".git", "node_modules", "venv", ".venv", "__pycache__",
             "dist", "build", "target", ".tox"}

TEST_PATH_PATTERNS = ("*.spec.*", "*.test.*", "*Test.java", "test_*.py", "*_test.py")
TEST_DIR_NAMES = {"test", "tests", "__tests__"}

#: Per-tool rule ids (or prefixes, trailing '*') excluded from fix cases:
#: import and project-configuration diagnostics are unfixable with a single
#: file as context.
IMPORT_CONFIG_EXCLUSIONS: dict[str, tuple[str, ...]] = {
    "pyright": ("reportMissingImports", "reportMissingModuleSource",
                "reportAttributeAccessIssue:import*"),
    "pylint": ("import-error", "no-name-in-module", "wrong-import-*"),
    "eslint": ("import/no-unresolved", "node/no-missing-import",
               "import/named", "import/default"),
    "tsc": ("TS2307", "TS2306", "TS2688", "TS5*", "TS6053", "TS18002",
            "TS18003"),
    "spotbugs": (),
    "roslyn": ("CS0246", "CS0234", "CS8021"),
    "clang": ("-Wunused-macros", "pp_file_not_found*"),
}


def is_minified(source: bytes) -> bool:
    """Cheap bundler-output heuristic: one enormous line, or a short file
    whose lines are all long."""
    text = source.decode("utf-8", errors="replace")
    lines = [ln for ln in text.splitlines()]
    if not lines:
        return False
    longest = max(len(ln) for ln in lines)
    if longest > MAX_LINE_LEN:
        return True
    nonempty = [ln for ln in lines if ln.strip()]
    if not nonempty:
        return False
    mean = sum(len(ln) for ln in nonempty) / len(nonempty)
    return mean > MEAN_LINE_LEN and len(lines) < FEW_LINES


def in_test_path(rel_path: str) -> bool:
    parts = Path(rel_path).parts
    if any(p in TEST_DIR_NAMES for p in parts[:-1]):
        return True
    name = parts[-1] if parts else rel_path
    return any(fnmatch.fnmatch(name, pat) for pat in TEST_PATH_PATTERNS)


def scan_workspace_files(ws: RepoWorkspace) -> dict[str, ParsedFile]:
    """Parse every source file of the workspace language; keys are
    tree-relative paths."""
    files: dict[str, ParsedFile] = {}
    for path in sorted(ws.root.rglob("*")):
        if not path.is_file():
            continue
        if any(part in SKIP_DIRS for part in path.parts):
            continue
        rel = str(path.relative_to(ws.root))
        if language_for_path(rel) is not ws.language:
            continue
        files[rel] = parse_source(path.read_bytes(), ws.language, rel)
    return files


def _eligible_files(
    ws: RepoWorkspace, files: Optional[dict[str, ParsedFile]]
) -> dict[str, ParsedFile]:
    return files if files is not None else scan_workspace_files(ws)


def _sorted_methods(files: dict[str, ParsedFile]) -> list[ParsedMethod]:
    out: list[ParsedMethod] = []
    for rel in sorted(files):
        out.extend(sorted(files[rel].methods, key=lambda m: m.span))
    return out


def make_doc_cases(
    ws: RepoWorkspace, files: Optional[dict[str, ParsedFile]] = None
) -> list[TestCase]:
    files = _eligible_files(ws, files)
    cases = []
    for m in _sorted_methods(files):
        if m.line_count() <= 3:
            continue
        if is_minified(files[m.file_path].source_bytes):
            continue
        cases.append(
            TestCase.make(Scenario.DOC, ws.language, ws.repo_ref, m.to_info())
        )
    return cases


def excluded_rule(diag: Diagnostic) -> bool:
    patterns = IMPORT_CONFIG_EXCLUSIONS.get(diag.tool, ())
    for pat in patterns:
        if pat.endswith("*"):
            if diag.rule_id.startswith(pat[:-1]):
                return True
        elif diag.rule_id == pat:
            return True
    return False


def make_fix_cases(
    ws: RepoWorkspace, files: Optional[dict[str, ParsedFile]] = None
) -> list[TestCase]:
    files = _eligible_files(ws, files)
    cases = []
    for diag in sorted(
        ws.baseline_diagnostics,
        key=lambda d: (d.file_path, d.line, d.rule_id, d.message),
    ):
        if excluded_rule(diag):
            continue
        pf = files.get(diag.file_path)
        if pf is not None:
            offset = line_byte_span(pf.source_bytes, diag.line)[0]
            enclosing = pf.smallest_method_containing(offset)
        else:
            enclosing = None
        if enclosing is not None:
            method = enclosing.to_info()
        else:
            # fall back to a whole-file span
            source = (
                pf.source_bytes
                if pf is not None
                else (ws.root / diag.file_path).read_bytes()
            )
            method = MethodInfo(
                file_path=diag.file_path,
                name=Path(diag.file_path).stem,
                signature_text="",
                body_span=(0, len(source)),
                line_count=source.count(b"\n") + (0 if source.endswith(b"\n") else 1),
                docstring_text=None,
            )
        cases.append(
            TestCase.make(
                Scenario.FIX,
                ws.language,
                ws.repo_ref,
                method,
                FixPayload(diagnostic=diag),
            )
        )
    return cases


def make_generate_cases(
    ws: RepoWorkspace,
    coverage: CoverageMap,
    files: Optional[dict[str, ParsedFile]] = None,
) -> list[TestCase]:
    files = _eligible_files(ws, files)
    passing = ws.baseline_tests.passing()
    cases = []
    for m in _sorted_methods(files):
        if not m.docstring_text:
            continue
        covering = coverage.covering_tests(m) & passing
        if not covering:
            continue
        cases.append(
            TestCase.make(Scenario.GENERATE, ws.language, ws.repo_ref, m.to_info())
        )
    return cases


def make_test_cases(
    ws: RepoWorkspace, files: Optional[dict[str, ParsedFile]] = None
) -> list[TestCase]:
    files = _eligible_files(ws, files)
    cases = []
    for m in _sorted_methods(files):
        if in_test_path(m.file_path):
            continue
        if is_minified(files[m.file_path].source_bytes):
            continue
        cases.append(
            TestCase.make(Scenario.TEST, ws.language, ws.repo_ref, m.to_info())
        )
    return cases


_WORKSPACE_SENTINEL = MethodInfo(
    file_path="", name="", signature_text="", body_span=(0, 0), line_count=0
)


def load_workspace_cases(
    path: Path, language: Language = Language.PYTHON
) -> list[TestCase]:
    """One Workspace case per JSONL record {query, keywords,
    correct_snippet_id?}; keywords must be non-empty."""
    cases = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(f"invalid JSON: {exc}", line=lineno)
            query = rec.get("query")
            keywords = rec.get("keywords")
            if not isinstance(query, str) or not query:
                raise SchemaViolation("missing or empty 'query'", line=lineno)
            if not isinstance(keywords, list) or not keywords or not all(
                isinstance(k, str) and k for k in keywords
            ):
                raise SchemaViolation(
                    "'keywords' must be a non-empty list of strings", line=lineno
                )
            payload = WorkspacePayload(
                query=query,
                keywords=tuple(keywords),
                correct_snippet_id=rec.get("correct_snippet_id"),
            )
            cases.append(
                TestCase.make(
                    Scenario.WORKSPACE,
                    language,
                    str(path),
                    _WORKSPACE_SENTINEL,
                    payload,
                )
            )
    return cases
