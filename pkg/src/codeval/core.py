"""Shared domain types: scenarios, languages, test cases, diagnostics, verdicts.

Every type here is an immutable value object; instances are safe to share
across worker threads. TestCases serialize to JSONL with snake_case field
names matching the attribute names exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Union


class Scenario(str, Enum):
    DOC = "doc"
    FIX = "fix"
    GENERATE = "generate"
    TEST = "test"
    WORKSPACE = "workspace"


class Language(str, Enum):
    JAVASCRIPT = "javascript"
    TYPESCRIPT = "typescript"
    PYTHON = "python"
    JAVA = "java"
    CSHARP = "csharp"
    CPP = "cpp"


#: Map from file extension to language, used by workspace scanning.
EXTENSION_LANGUAGES: dict[str, Language] = {
    ".js": Language.JAVASCRIPT,
    ".jsx": Language.JAVASCRIPT,
    ".mjs": Language.JAVASCRIPT,
    ".cjs": Language.JAVASCRIPT,
    ".ts": Language.TYPESCRIPT,
    ".tsx": Language.TYPESCRIPT,
    ".mts": Language.TYPESCRIPT,
    ".py": Language.PYTHON,
    ".java": Language.JAVA,
    ".cs": Language.CSHARP,
    ".cpp": Language.CPP,
    ".cc": Language.CPP,
    ".cxx": Language.CPP,
    ".c": Language.CPP,
    ".h": Language.CPP,
    ".hpp": Language.CPP,
    ".hh": Language.CPP,
}


def language_for_path(path: str) -> Optional[Language]:
    dot = path.rfind(".")
    if dot < 0:
        return None
    return EXTENSION_LANGUAGES.get(path[dot:].lower())


class FailureClass(str, Enum):
    CODE_LOGIC_CHANGE = "code_logic_change"
    SYNTAX_CHANGE = "syntax_change"
    INCOMPLETE_DOCSTRING = "incomplete_docstring"
    IRRELEVANT_DOCSTRING = "irrelevant_docstring"
    NEW_DIAGNOSTIC_INTRODUCED = "new_diagnostic_introduced"
    ORIGINAL_DIAGNOSTIC_REMAINS = "original_diagnostic_remains"
    TEST_REGRESSION = "test_regression"
    GENERATED_TEST_FAILED = "generated_test_failed"
    FOCAL_METHOD_NOT_INVOKED = "focal_method_not_invoked"
    UNRELIABLE_FILE = "unreliable_file"
    RESPONSE_UNPARSEABLE = "response_unparseable"
    BUILD_FAILURE = "build_failure"


@dataclass(frozen=True)
class MethodInfo:
    """A single function/method definition located in a repository file.

    ``body_span`` is the half-open byte range of the whole definition
    (signature through end of body); ``line_count`` is the number of
    newline-separated lines that range covers. ``name`` is the identifier
    from the declarator, never a surrounding class name.
    """

    file_path: str
    name: str
    signature_text: str
    body_span: tuple[int, int]
    line_count: int
    docstring_text: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "file_path": self.file_path,
            "name": self.name,
            "signature_text": self.signature_text,
            "body_span": list(self.body_span),
            "line_count": self.line_count,
            "docstring_text": self.docstring_text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MethodInfo":
        return cls(
            file_path=d["file_path"],
            name=d["name"],
            signature_text=d["signature_text"],
            body_span=(d["body_span"][0], d["body_span"][1]),
            line_count=d["line_count"],
            docstring_text=d.get("docstring_text"),
        )


@dataclass(frozen=True)
class Diagnostic:
    """One static-analysis finding, normalized across tools.

    Identity for set comparison is (rule_id, message); line numbers shift
    when code moves and are kept as evidence only.
    """

    rule_id: str
    message: str
    file_path: str
    line: int
    tool: str

    def key(self) -> tuple[str, str]:
        return (self.rule_id, self.message)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "message": self.message,
            "file_path": self.file_path,
            "line": self.line,
            "tool": self.tool,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Diagnostic":
        return cls(
            rule_id=d["rule_id"],
            message=d["message"],
            file_path=d["file_path"],
            line=int(d["line"]),
            tool=d["tool"],
        )


@dataclass(frozen=True)
class FixPayload:
    diagnostic: Diagnostic

    def to_dict(self) -> dict[str, Any]:
        return {"diagnostic": self.diagnostic.to_dict()}


@dataclass(frozen=True)
class WorkspacePayload:
    query: str
    keywords: tuple[str, ...]
    correct_snippet_id: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "keywords": list(self.keywords),
            "correct_snippet_id": self.correct_snippet_id,
        }


Payload = Union[FixPayload, WorkspacePayload, None]


def case_id(
    scenario: Scenario,
    repo_ref: str,
    method: MethodInfo,
    payload: Payload = None,
) -> str:
    """Deterministic, collision-resistant identifier for one test case."""
    record: dict[str, Any] = {
        "scenario": scenario.value,
        "repo_ref": repo_ref,
        "method": method.to_dict(),
    }
    if isinstance(payload, FixPayload):
        record["payload"] = payload.to_dict()
    elif isinstance(payload, WorkspacePayload):
        record["payload"] = payload.to_dict()
    blob = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class TestCase:
    """One evaluable unit: a scenario bound to a focal method in a repo."""

    __test__ = False  # not a pytest collection target

    id: str
    scenario: Scenario
    language: Language
    repo_ref: str
    method: MethodInfo
    payload: Payload = None

    def __post_init__(self) -> None:
        if self.scenario is Scenario.FIX and not isinstance(self.payload, FixPayload):
            raise ValueError("fix case requires a Fix payload")
        if self.scenario is Scenario.WORKSPACE and not isinstance(
            self.payload, WorkspacePayload
        ):
            raise ValueError("workspace case requires a Workspace payload")
        if self.scenario in (Scenario.DOC, Scenario.GENERATE, Scenario.TEST):
            if self.payload is not None:
                raise ValueError(f"{self.scenario.value} case takes no payload")

    @classmethod
    def make(
        cls,
        scenario: Scenario,
        language: Language,
        repo_ref: str,
        method: MethodInfo,
        payload: Payload = None,
    ) -> "TestCase":
        return cls(
            id=case_id(scenario, repo_ref, method, payload),
            scenario=scenario,
            language=language,
            repo_ref=repo_ref,
            method=method,
            payload=payload,
        )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "scenario": self.scenario.value,
            "language": self.language.value,
            "repo_ref": self.repo_ref,
            "method": self.method.to_dict(),
        }
        if self.payload is not None:
            d["payload"] = self.payload.to_dict()
        else:
            d["payload"] = {}
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestCase":
        scenario = Scenario(d["scenario"])
        payload: Payload = None
        raw = d.get("payload") or {}
        if scenario is Scenario.FIX:
            payload = FixPayload(diagnostic=Diagnostic.from_dict(raw["diagnostic"]))
        elif scenario is Scenario.WORKSPACE:
            payload = WorkspacePayload(
                query=raw["query"],
                keywords=tuple(raw["keywords"]),
                correct_snippet_id=raw.get("correct_snippet_id"),
            )
        return cls(
            id=d["id"],
            scenario=scenario,
            language=Language(d["language"]),
            repo_ref=d["repo_ref"],
            method=MethodInfo.from_dict(d["method"]),
            payload=payload,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TestCase":
        return cls.from_dict(json.loads(line))


@dataclass(frozen=True)
class Verdict:
    """Per-case outcome. passed implies no failure class; a syntax failure
    can never pass."""

    case_id: str
    syntax_ok: bool
    passed: bool
    failure_class: Optional[FailureClass] = None
    evidence: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.passed and self.failure_class is not None:
            raise ValueError("a passing verdict cannot carry a failure class")
        if not self.syntax_ok and self.passed:
            raise ValueError("a syntax failure cannot pass")

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "syntax_ok": self.syntax_ok,
            "passed": self.passed,
            "failure_class": self.failure_class.value if self.failure_class else None,
            "evidence": self.evidence,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Verdict":
        fc = d.get("failure_class")
        return cls(
            case_id=d["case_id"],
            syntax_ok=bool(d["syntax_ok"]),
            passed=bool(d["passed"]),
            failure_class=FailureClass(fc) if fc else None,
            evidence=d.get("evidence") or {},
        )


def write_cases_jsonl(cases: list[TestCase], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(case.to_json())
            fh.write("\n")


def read_cases_jsonl(path: str) -> list[TestCase]:
    cases = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                cases.append(TestCase.from_json(line))
    return cases
