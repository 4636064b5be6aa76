"""Verdict production: re-parse, re-analyze, re-test the spliced tree.

Failure classification is first-failure-wins in the order syntax, then the
scenario-specific checks. For doc: code-logic change, syntax change,
irrelevant docstring, incomplete docstring (a docstring about the wrong
entity cannot be meaningfully "incomplete"). No verifier mutates baseline
state.
"""

from __future__ import annotations

import re
import subprocess
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import docformat
from .analyzers import Roster, run_analyzers
from .core import (
    Diagnostic,
    FailureClass,
    FixPayload,
    Language,
    MethodInfo,
    Scenario,
    TestCase,
    Verdict,
)
from .coverage import CoverageMap
from .errors import BuildFailure
from .ingest import RecipeKind, RepoWorkspace, TestStatus, run_command, run_suite
from .parsing import ParsedMethod, check_syntax, compare_tokens, parse_source
from .splice import SpliceResult

DiagKey = tuple[str, str]


# ---------------------------------------------------------------- syntax
def verify_syntax(file_contents: bytes, language: Language) -> bool:
    return check_syntax(file_contents, language)


# ---------------------------------------------------------------- doc
@dataclass
class ParamDocReport:
    documented: bool
    typed: bool

    def to_dict(self) -> dict:
        return {"documented": self.documented, "typed": self.typed}


@dataclass
class DocFormatReport:
    has_description: bool = False
    params_documented: dict[str, ParamDocReport] = field(default_factory=dict)
    return_documented: bool = False
    names_focal_function: bool = False
    focal_code_unchanged: bool = False

    def to_dict(self) -> dict:
        return {
            "has_description": self.has_description,
            "params_documented": {
                k: v.to_dict() for k, v in self.params_documented.items()
            },
            "return_documented": self.return_documented,
            "names_focal_function": self.names_focal_function,
            "focal_code_unchanged": self.focal_code_unchanged,
        }


def _method_token_split(
    m: ParsedMethod, language: Language, drop_docstring: bool
) -> Optional[tuple[list[str], list[str]]]:
    src = m._source
    sig_text = src[m.span[0] : m.sig_end].decode("utf-8", "replace")
    body_text = src[m.sig_end : m.span[1]].decode("utf-8", "replace")
    sig = compare_tokens(sig_text, language)
    if language is Language.PYTHON:
        # a bare indented block does not tokenize standalone; wrap it
        body = compare_tokens("if True:\n" + _indent(body_text), language)
        if body is not None:
            body = body[3:]  # drop the wrapper tokens: 'if' 'True' ':'
    else:
        body = compare_tokens(body_text, language)
    if sig is None or body is None:
        return None
    if drop_docstring and language is Language.PYTHON and m.docstring_text:
        for i, tok in enumerate(body):
            if tok.startswith(("'", '"', 'r"', "r'", 'b"', "b'")):
                del body[i]
                break
    return sig, body


def _indent(text: str) -> str:
    return "\n".join(
        ("    " + ln) if ln.strip() else ln for ln in text.splitlines()
    )


_PUNCT_ONLY = {";"}


def classify_focal_change(
    old: ParsedMethod, new: ParsedMethod, language: Language
) -> Optional[FailureClass]:
    """None when token-identical (modulo comments/docstring/layout);
    CodeLogicChange for body token changes beyond punctuation;
    SyntaxChange for signature or punctuation-only changes."""
    old_split = _method_token_split(old, language, drop_docstring=False)
    new_split = _method_token_split(new, language, drop_docstring=True)
    if old_split is None or new_split is None:
        return FailureClass.SYNTAX_CHANGE
    old_sig, old_body = old_split
    new_sig, new_body = new_split
    old_sem = [t for t in old_body if t not in _PUNCT_ONLY]
    new_sem = [t for t in new_body if t not in _PUNCT_ONLY]
    if old_sem != new_sem:
        return FailureClass.CODE_LOGIC_CHANGE
    if old_sig != new_sig or old_body != new_body:
        return FailureClass.SYNTAX_CHANGE
    return None


def verify_doc(
    original_file: bytes,
    spliced: SpliceResult,
    method: MethodInfo,
    language: Language,
    case_id: str,
) -> Verdict:
    new_bytes = spliced.new_file_contents
    report = DocFormatReport()
    if not verify_syntax(new_bytes, language):
        return Verdict(
            case_id=case_id,
            syntax_ok=False,
            passed=False,
            failure_class=FailureClass.SYNTAX_CHANGE,
            evidence={"format": report.to_dict(), "reason": "file no longer parses"},
        )

    old_pf = parse_source(original_file, language, method.file_path)
    old_m = _locate(old_pf.methods, method)
    new_pf = parse_source(new_bytes, language, method.file_path)
    new_m = _nearest_named(new_pf.methods, method)
    if old_m is None or new_m is None:
        return Verdict(
            case_id=case_id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.IRRELEVANT_DOCSTRING,
            evidence={
                "format": report.to_dict(),
                "reason": "focal method missing after splice",
            },
        )

    change = classify_focal_change(old_m, new_m, language)
    report.focal_code_unchanged = change is None
    if change is not None:
        return Verdict(
            case_id=case_id,
            syntax_ok=True,
            passed=False,
            failure_class=change,
            evidence={"format": report.to_dict()},
        )

    doc = new_m.docstring_text
    if not doc:
        return Verdict(
            case_id=case_id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.INCOMPLETE_DOCSTRING,
            evidence={"format": report.to_dict(), "reason": "no docstring found"},
        )

    analysis = docformat.analyze(doc, language)
    report.has_description = analysis.has_description
    report.return_documented = analysis.returns_documented
    report.names_focal_function = docformat.mentions_name(
        analysis.tokens, method.name
    )
    params = old_m.params
    for p in params:
        if p.name is None:
            continue
        documented = p.name in analysis.documented_params
        typed = bool(p.annotated) or analysis.documented_params.get(p.name, False)
        report.params_documented[p.name] = ParamDocReport(documented, typed)

    if not report.names_focal_function:
        return Verdict(
            case_id=case_id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.IRRELEVANT_DOCSTRING,
            evidence={"format": report.to_dict()},
        )

    missing = [
        name for name, pr in report.params_documented.items() if not pr.documented
    ]
    incomplete = (
        not report.has_description
        or missing
        or (old_m.returns_value and not report.return_documented)
    )
    if incomplete:
        return Verdict(
            case_id=case_id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.INCOMPLETE_DOCSTRING,
            evidence={"format": report.to_dict(), "missing_params": missing},
        )
    return Verdict(
        case_id=case_id,
        syntax_ok=True,
        passed=True,
        evidence={"format": report.to_dict()},
    )


def _locate(methods: list[ParsedMethod], method: MethodInfo) -> Optional[ParsedMethod]:
    for m in methods:
        if m.span == tuple(method.body_span) and m.name == method.name:
            return m
    named = [m for m in methods if m.name == method.name]
    return named[0] if len(named) == 1 else None


def _nearest_named(
    methods: list[ParsedMethod], method: MethodInfo
) -> Optional[ParsedMethod]:
    named = [m for m in methods if m.name == method.name]
    if not named:
        return None
    anchor = method.body_span[0]
    return min(named, key=lambda m: abs(m.span[0] - anchor))


# ---------------------------------------------------------------- fix
def fix_decision(
    d0_key: DiagKey,
    before: Counter,
    after: Counter,
) -> tuple[bool, Optional[FailureClass], list[DiagKey]]:
    """Pure fix verdict: pass iff d0 gone and after ⊆ before as multisets
    over (rule_id, message). Returns (passed, failure_class, new_keys)."""
    if after.get(d0_key, 0) > 0:
        return (False, FailureClass.ORIGINAL_DIAGNOSTIC_REMAINS, [])
    new_keys = [k for k, n in after.items() if n > before.get(k, 0)]
    if new_keys:
        return (False, FailureClass.NEW_DIAGNOSTIC_INTRODUCED, sorted(new_keys))
    return (True, None, [])


def diagnostics_multiset(diags: list[Diagnostic] | tuple[Diagnostic, ...]) -> Counter:
    return Counter(d.key() for d in diags)


def verify_fix(
    ws: RepoWorkspace,
    case: TestCase,
    spliced: SpliceResult,
    scratch_tree: Path,
    roster: Optional[Roster] = None,
    pins: Optional[dict[str, str]] = None,
) -> Verdict:
    assert isinstance(case.payload, FixPayload)
    d0 = case.payload.diagnostic
    if not verify_syntax(spliced.new_file_contents, case.language):
        return Verdict(
            case_id=case.id,
            syntax_ok=False,
            passed=False,
            failure_class=FailureClass.SYNTAX_CHANGE,
            evidence={"reason": "spliced file no longer parses"},
        )
    after_list = run_analyzers(scratch_tree, case.language, roster, pins)
    before = diagnostics_multiset(ws.baseline_diagnostics)
    after = diagnostics_multiset(after_list)
    passed, failure, new_keys = fix_decision(d0.key(), before, after)
    evidence = {
        "before_count": sum(before.values()),
        "after_count": sum(after.values()),
        "new_diagnostics": [list(k) for k in new_keys],
        "target": list(d0.key()),
    }
    return Verdict(
        case_id=case.id,
        syntax_ok=True,
        passed=passed,
        failure_class=failure,
        evidence=evidence,
    )


# ---------------------------------------------------------------- generate
def verify_generate(
    ws: RepoWorkspace,
    case: TestCase,
    spliced: SpliceResult,
    scratch_tree: Path,
    coverage: Optional[CoverageMap] = None,
) -> Verdict:
    if not verify_syntax(spliced.new_file_contents, case.language):
        return Verdict(
            case_id=case.id,
            syntax_ok=False,
            passed=False,
            failure_class=FailureClass.SYNTAX_CHANGE,
            evidence={"reason": "generated body does not parse"},
        )
    after = run_suite(ws.recipe, scratch_tree, ws.venv_python)
    if not after.exit_ok and not after.tests:
        return Verdict(
            case_id=case.id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.BUILD_FAILURE,
            evidence={"reason": "test suite did not run"},
        )
    baseline_pass = ws.baseline_tests.passing()
    regressed = sorted(
        t for t in baseline_pass if after.tests.get(t) is not TestStatus.PASS
    )
    evidence: dict = {"regressed_tests": regressed}
    if coverage is not None:
        covering = coverage.covering_tests(case.method) & baseline_pass
        if covering:
            still = {t for t in covering if after.tests.get(t) is TestStatus.PASS}
            evidence["covering_pass_ratio"] = len(still) / len(covering)
            evidence["covering_tests"] = sorted(covering)
    if regressed:
        return Verdict(
            case_id=case.id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.TEST_REGRESSION,
            evidence=evidence,
        )
    return Verdict(case_id=case.id, syntax_ok=True, passed=True, evidence=evidence)


# ---------------------------------------------------------------- test
_CALL_TOKEN = r"(?<![\w.]){name}\s*\("
_REF_TOKEN = r"(?<!\w)\.?{name}\b"

_TIMING_NOISE = re.compile(
    r"(duration_ms:?\s*[\d.]+|in \d+\.\d+s|\d+\.\d+ ?ms)"
)


def _scrub_timing(text: str) -> str:
    """Verdict evidence must serialize identically across runs."""
    return _TIMING_NOISE.sub("<t>", text)


def focal_invoked(test_code: str, focal_name: str) -> bool:
    """Static invocation check: the focal name must appear as a call (or
    at minimum as a referenced symbol) in the generated test."""
    pattern = _CALL_TOKEN.format(name=re.escape(focal_name))
    if re.search(pattern, test_code):
        return True
    return bool(re.search(_REF_TOKEN.format(name=re.escape(focal_name)), test_code))


def run_js_file(
    tree: Path, rel_path: str, language: Language, timeout: float = 120.0
) -> tuple[bool, str]:
    """Execute one focal file under node; TS files are compiled first."""
    if language is Language.TYPESCRIPT:
        with tempfile.TemporaryDirectory(prefix="codeval-tsc-") as tmp:
            proc = run_command(
                ("tsc", rel_path, "--outDir", tmp, "--module", "commonjs",
                 "--target", "es2020", "--esModuleInterop", "--skipLibCheck"),
                tree,
                timeout,
            )
            js_name = Path(rel_path).with_suffix(".js").name
            candidates = list(Path(tmp).rglob(js_name))
            if not candidates:
                return (False, proc.stdout + proc.stderr)
            run = run_command(("node", str(candidates[0])), tree, timeout)
            return (run.returncode == 0, run.stdout + run.stderr)
    proc = run_command(("node", rel_path), tree, timeout)
    return (proc.returncode == 0, proc.stdout + proc.stderr)


def reliability_gate(
    ws: RepoWorkspace, rel_path: str, language: Language
) -> bool:
    """Append an assert-true test to a pristine copy of the focal file in a
    temp tree and run it; False marks the file unreliable."""
    from .splice import append_trivial_test

    source = (ws.root / rel_path).read_bytes()
    probe = append_trivial_test(source, language)
    with tempfile.TemporaryDirectory(prefix="codeval-gate-") as tmp:
        tree = Path(tmp)
        target = tree / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        for extra in ws.root.rglob("*"):
            if extra.is_file() and ".git" not in extra.parts:
                dest = tree / extra.relative_to(ws.root)
                dest.parent.mkdir(parents=True, exist_ok=True)
                dest.write_bytes(extra.read_bytes())
        target.write_bytes(probe)
        ok, _ = run_js_file(tree, rel_path, language)
        return ok


def verify_test(
    ws: RepoWorkspace,
    case: TestCase,
    spliced: SpliceResult,
    scratch_tree: Path,
    test_code: str,
    gate_ok: Optional[bool] = None,
) -> Verdict:
    language = case.language
    if language in (Language.JAVASCRIPT, Language.TYPESCRIPT):
        if gate_ok is None:
            gate_ok = reliability_gate(ws, case.method.file_path, language)
        if not gate_ok:
            return Verdict(
                case_id=case.id,
                syntax_ok=True,
                passed=False,
                failure_class=FailureClass.UNRELIABLE_FILE,
                evidence={"reason": "trivial-test gate failed for focal file"},
            )
    if not verify_syntax(spliced.new_file_contents, language):
        return Verdict(
            case_id=case.id,
            syntax_ok=False,
            passed=False,
            failure_class=FailureClass.SYNTAX_CHANGE,
            evidence={"reason": "generated test does not parse"},
        )
    if not focal_invoked(test_code, case.method.name):
        return Verdict(
            case_id=case.id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.FOCAL_METHOD_NOT_INVOKED,
            evidence={"focal": case.method.name},
        )

    if language in (Language.JAVASCRIPT, Language.TYPESCRIPT):
        target = case.method.file_path
        ok, output = run_js_file(scratch_tree, target, language)
    elif language is Language.PYTHON:
        target = spliced.target_path or case.method.file_path
        try:
            proc = run_command(
                (ws.venv_python or "python3", "-m", "pytest", "-q", target),
                scratch_tree,
                ws.recipe.timeout,
            )
            ok, output = proc.returncode == 0, proc.stdout[-2000:]
        except subprocess.TimeoutExpired:
            ok, output = False, "timeout"
    else:
        raise BuildFailure(
            f"generated-test execution unsupported for {language.value}"
        )
    if not ok:
        return Verdict(
            case_id=case.id,
            syntax_ok=True,
            passed=False,
            failure_class=FailureClass.GENERATED_TEST_FAILED,
            evidence={"output": _scrub_timing(output[-2000:])},
        )
    return Verdict(case_id=case.id, syntax_ok=True, passed=True, evidence={})
