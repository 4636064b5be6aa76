"""Pipeline orchestration: ingest -> extract -> run -> report.

cmd_run drives a work pool over (case, backend) pairs. Each in-flight case
gets its own scratch copy of the workspace tree; a crash or backend error
in one case never aborts the run (it yields an error verdict row instead).
Verdict rows are written canonically sorted, so replay-mode runs are
byte-reproducible at any parallelism.
"""

from __future__ import annotations

import json
import shutil
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .analyzers import DEFAULT_ROSTER, Roster, analyzer_versions
from .core import (
    FailureClass,
    Language,
    Scenario,
    TestCase,
    Verdict,
    read_cases_jsonl,
    write_cases_jsonl,
)
from .coverage import CoverageMap, collect_coverage
from .errors import (
    AnalyzerUnavailable,
    AnchorNotFound,
    BuildFailure,
    ContextTooLarge,
    CoverageUnavailable,
    HttpError,
    ProbeFailure,
    RecipeNotFound,
    ReplayMiss,
)
from .extract import (
    load_workspace_cases,
    make_doc_cases,
    make_fix_cases,
    make_generate_cases,
    make_test_cases,
    scan_workspace_files,
)
from .ingest import (
    BaselineProbe,
    RecipeKind,
    RepoWorkspace,
    checkout,
    detect_recipe,
    ensure_venv,
    filter_repo,
    load_workspace,
    repo_hash,
    run_install,
    run_suite,
    save_workspace,
    tree_size,
)
from .modelio import (
    BackendConfig,
    DEFAULT_FILE_BUDGET,
    build_prompt,
    complete,
    extract_code,
    template_hash,
)
from .parsing import parse_source
from .report import CaseResult, aggregate, read_results_jsonl, render, write_results_jsonl
from .retrieval import RankedRetrieval, end_to_end, load_retrievals
from .splice import SpliceResult, splice_body, splice_doc, splice_fix, append_test
from .verify import (
    reliability_gate,
    run_analyzers,
    verify_doc,
    verify_fix,
    verify_generate,
    verify_test,
)


@dataclass
class RunConfig:
    repos_file: Optional[Path] = None
    languages: tuple[Language, ...] = tuple(Language)
    scenarios: tuple[Scenario, ...] = tuple(Scenario)
    backends: tuple[BackendConfig, ...] = ()
    cache_root: Path = Path("cache")
    scratch_root: Path = Path("scratch")
    out_dir: Path = Path("out")
    parallelism: int = 1
    keyword_mode: str = "all"
    token_budget: int = DEFAULT_FILE_BUDGET
    min_repo_bytes: int = 1 * 1024 * 1024
    max_repo_bytes: int = 100 * 1024 * 1024
    recipe_timeout: float = 600.0
    roster: Optional[Roster] = None
    analyzer_pins: Optional[dict[str, str]] = None
    workspace_cases: Optional[Path] = None
    retrievals: Optional[Path] = None
    cpp_manifest: Optional[Path] = None

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


# ---------------------------------------------------------------- ingest
def detect_language(
    root: Path, allowed: tuple[Language, ...]
) -> Optional[Language]:
    """Majority language by source byte count among the allowed set."""
    from .core import language_for_path

    totals: dict[Language, int] = {}
    for p in root.rglob("*"):
        if not p.is_file() or ".git" in p.parts or "node_modules" in p.parts:
            continue
        lang = language_for_path(p.name)
        if lang in allowed:
            totals[lang] = totals.get(lang, 0) + p.stat().st_size
    if not totals:
        return None
    return max(totals.items(), key=lambda kv: kv[1])[0]


@dataclass
class IngestOutcome:
    repo_ref: str
    status: str  # cached | accepted | rejected | error
    reason: str = ""


def parse_repos_file(path: Path) -> list[tuple[str, str]]:
    entries = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        entries.append((parts[0], parts[1] if len(parts) > 1 else "-"))
    return entries


def ingest_one(repo_ref: str, commit_hint: str, config: RunConfig) -> IngestOutcome:
    import tempfile
    import time

    cache_root = config.cache_root
    cache_root.mkdir(parents=True, exist_ok=True)
    try:
        with tempfile.TemporaryDirectory(prefix="codeval-co-") as tmp:
            staged = Path(tmp) / "tree"
            commit = checkout(repo_ref, commit_hint, staged)
            slot = cache_root / repo_hash(repo_ref) / commit
            baseline_path = slot / "baseline.json"
            if baseline_path.exists():
                return IngestOutcome(repo_ref, "cached")

            language = detect_language(staged, config.languages)
            if language is None:
                return IngestOutcome(repo_ref, "rejected", "no_supported_language")

            size = tree_size(staged)
            if size < config.min_repo_bytes:
                return IngestOutcome(repo_ref, "rejected", "too_small")
            if size > config.max_repo_bytes:
                return IngestOutcome(repo_ref, "rejected", "too_large")

            manifest_entry = None
            if language is Language.CPP and config.cpp_manifest:
                from .ingest import load_cpp_manifest

                entry = load_cpp_manifest(config.cpp_manifest).get(repo_ref)
                if entry is not None:
                    manifest_entry = entry[1]
            recipe = detect_recipe(
                staged, language, config.recipe_timeout, manifest_entry
            )

            slot.mkdir(parents=True, exist_ok=True)
            tree = slot / "tree"
            if tree.exists():
                shutil.rmtree(tree)
            shutil.move(str(staged), str(tree))

            venv_python = None
            started = time.monotonic()
            try:
                if recipe.kind is RecipeKind.PYTHON_VENV:
                    venv_python = ensure_venv(slot / "venv")
                run_install(recipe, tree, venv_python)
                suite = run_suite(recipe, tree, venv_python)
            except BuildFailure as exc:
                shutil.rmtree(slot, ignore_errors=True)
                return IngestOutcome(repo_ref, "rejected", f"probe_failure: {exc}")
            wall = time.monotonic() - started

            files = scan_workspace_files_for(tree, language)
            method_count = sum(len(pf.methods) for pf in files.values())
            probe = BaselineProbe(
                wall_time=wall,
                build_ok=suite.exit_ok,
                method_count=method_count,
            )
            try:
                decision, reason = filter_repo(
                    tree, recipe, probe,
                    config.min_repo_bytes, config.max_repo_bytes,
                )
            except ProbeFailure as exc:
                shutil.rmtree(slot, ignore_errors=True)
                return IngestOutcome(repo_ref, "rejected", f"probe_failure: {exc}")
            if decision == "reject":
                shutil.rmtree(slot, ignore_errors=True)
                return IngestOutcome(repo_ref, "rejected", reason or "rejected")

            diagnostics = tuple(
                run_analyzers(tree, language, config.roster, config.analyzer_pins)
            )
            ws = RepoWorkspace(
                root=tree,
                language=language,
                recipe=recipe,
                size_bytes=size,
                commit=commit,
                repo_ref=repo_ref,
                baseline_diagnostics=diagnostics,
                baseline_tests=suite,
                venv_python=venv_python,
            )
            save_workspace(ws, baseline_path)
            return IngestOutcome(repo_ref, "accepted")
    except RecipeNotFound as exc:
        return IngestOutcome(repo_ref, "rejected", f"recipe_not_found: {exc}")
    except AnalyzerUnavailable as exc:
        return IngestOutcome(repo_ref, "error", f"analyzer_unavailable: {exc}")
    except Exception as exc:  # noqa: BLE001 - isolation: one bad repo never aborts
        return IngestOutcome(repo_ref, "error", f"{type(exc).__name__}: {exc}")


def scan_workspace_files_for(tree: Path, language: Language):
    stub = RepoWorkspace(
        root=tree,
        language=language,
        recipe=None,  # type: ignore[arg-type]  (only .root/.language used)
        size_bytes=0,
        commit="",
        repo_ref="",
    )
    return scan_workspace_files(stub)


def cmd_ingest(config: RunConfig) -> tuple[list[IngestOutcome], int]:
    """Returns (outcomes, exit_code)."""
    if config.repos_file is None or not config.repos_file.exists():
        return ([], 2)
    outcomes = [
        ingest_one(ref, commit, config)
        for ref, commit in parse_repos_file(config.repos_file)
    ]
    config.out_dir.mkdir(parents=True, exist_ok=True)
    log_path = config.out_dir / "ingest_log.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.__dict__, sort_keys=True) + "\n")
    accepted = sum(o.status in ("accepted", "cached") for o in outcomes)
    return (outcomes, 0 if accepted > 0 else 4)


# ---------------------------------------------------------------- extract
def cached_workspaces(config: RunConfig) -> list[RepoWorkspace]:
    out = []
    if not config.cache_root.exists():
        return out
    for baseline in sorted(config.cache_root.glob("*/*/baseline.json")):
        ws = load_workspace(baseline)
        if ws.language in config.languages:
            out.append(ws)
    return out


def cmd_extract(config: RunConfig, cases_path: Path) -> tuple[int, int]:
    """Returns (case_count, exit_code)."""
    cases: list[TestCase] = []
    for ws in cached_workspaces(config):
        files = scan_workspace_files(ws)
        if Scenario.DOC in config.scenarios:
            cases.extend(make_doc_cases(ws, files))
        if Scenario.FIX in config.scenarios:
            cases.extend(make_fix_cases(ws, files))
        if Scenario.GENERATE in config.scenarios:
            try:
                coverage = collect_coverage(ws, files)
                cases.extend(make_generate_cases(ws, coverage, files))
                cov_path = (
                    config.cache_root
                    / repo_hash(ws.repo_ref)
                    / ws.commit
                    / "coverage.json"
                )
                cov_path.write_text(coverage.to_json())
            except CoverageUnavailable:
                pass
        if Scenario.TEST in config.scenarios:
            cases.extend(make_test_cases(ws, files))
    if Scenario.WORKSPACE in config.scenarios and config.workspace_cases:
        cases.extend(load_workspace_cases(config.workspace_cases))

    cases.sort(
        key=lambda c: (
            c.repo_ref,
            c.method.file_path,
            tuple(c.method.body_span),
            c.scenario.value,
            c.id,
        )
    )
    cases_path.parent.mkdir(parents=True, exist_ok=True)
    write_cases_jsonl(cases, str(cases_path))
    return (len(cases), 0)


# ---------------------------------------------------------------- run
@dataclass
class _RunContext:
    config: RunConfig
    workspaces: dict[str, RepoWorkspace]
    coverage: dict[str, Optional[CoverageMap]]
    retrievals: dict[str, RankedRetrieval] = field(default_factory=dict)
    gate_cache: dict[tuple[str, str], bool] = field(default_factory=dict)
    gate_lock: threading.Lock = field(default_factory=threading.Lock)
    skips: list[dict] = field(default_factory=list)
    skips_lock: threading.Lock = field(default_factory=threading.Lock)


def _error_verdict(case: TestCase, kind: str, message: str,
                   failure: Optional[FailureClass] = None) -> Verdict:
    return Verdict(
        case_id=case.id,
        syntax_ok=failure is not FailureClass.SYNTAX_CHANGE,
        passed=False,
        failure_class=failure,
        evidence={"error_kind": kind, "error": message},
    )


def _scratch_tree(
    config: RunConfig, case: TestCase, backend: BackendConfig, multi: bool
) -> Path:
    base = config.scratch_root / case.id
    if multi:
        base = base / backend.model_id
    tree = base / "tree"
    if tree.exists():
        shutil.rmtree(tree)
    return tree


def _run_one(
    ctx: _RunContext, case: TestCase, backend: BackendConfig, multi: bool
) -> CaseResult:
    try:
        verdict = _evaluate(ctx, case, backend, multi)
    except ReplayMiss as exc:
        verdict = _error_verdict(case, "replay_miss", str(exc))
    except HttpError as exc:
        verdict = _error_verdict(case, "http_error", str(exc))
    except AnchorNotFound as exc:
        verdict = _error_verdict(
            case, "anchor_not_found", str(exc), FailureClass.RESPONSE_UNPARSEABLE
        )
    except BuildFailure as exc:
        verdict = _error_verdict(
            case, "build_failure", str(exc), FailureClass.BUILD_FAILURE
        )
    except AnalyzerUnavailable as exc:
        verdict = _error_verdict(case, "analyzer_unavailable", str(exc))
    except Exception as exc:  # noqa: BLE001 - case isolation
        verdict = _error_verdict(
            case, "internal_error", f"{type(exc).__name__}: {exc}\n"
            + traceback.format_exc(limit=4)
        )
    return CaseResult(
        scenario=case.scenario,
        language=case.language,
        model_id=backend.model_id,
        verdict=verdict,
    )


def _evaluate(
    ctx: _RunContext, case: TestCase, backend: BackendConfig, multi: bool
) -> Verdict:
    config = ctx.config

    if case.scenario is Scenario.WORKSPACE:
        retrieval = ctx.retrievals.get(case.id)
        ws = ctx.workspaces.get(case.repo_ref)
        return end_to_end(case, ws, backend, retrieval, config.keyword_mode)

    ws = ctx.workspaces.get(case.repo_ref)
    if ws is None:
        return _error_verdict(case, "missing_workspace", case.repo_ref)

    try:
        prompt = build_prompt(case, ws, config.token_budget)
    except ContextTooLarge as exc:
        with ctx.skips_lock:
            ctx.skips.append(
                {"case_id": case.id, "model_id": backend.model_id,
                 "reason": f"context_too_large: {exc}"}
            )
        return _error_verdict(case, "context_too_large", str(exc))

    exchange = complete(prompt, backend)
    code = extract_code(exchange.raw_response, case.language)
    if code is None:
        return _error_verdict(
            case, "unparseable", "no code payload in response",
            FailureClass.RESPONSE_UNPARSEABLE,
        )

    original = (ws.root / case.method.file_path).read_bytes()

    if case.scenario is Scenario.DOC:
        spliced = splice_doc(original, case.method, code, case.language)
        return verify_doc(original, spliced, case.method, case.language, case.id)

    if case.scenario is Scenario.FIX:
        spliced = splice_fix(
            original, tuple(case.method.body_span), code, case.language
        )
        tree = _materialize_scratch(ctx, case, backend, multi, spliced)
        return verify_fix(
            ws, case, spliced, tree, config.roster, config.analyzer_pins
        )

    if case.scenario is Scenario.GENERATE:
        body = _body_from_response(code, case)
        spliced = splice_body(original, case.method, body, case.language)
        tree = _materialize_scratch(ctx, case, backend, multi, spliced)
        coverage = ctx.coverage.get(case.repo_ref)
        return verify_generate(ws, case, spliced, tree, coverage)

    if case.scenario is Scenario.TEST:
        spliced = append_test(
            original, case.method.file_path, code, case.language
        )
        tree = _materialize_scratch(ctx, case, backend, multi, spliced)
        gate_ok = None
        if case.language in (Language.JAVASCRIPT, Language.TYPESCRIPT):
            gate_key = (case.repo_ref, case.method.file_path)
            with ctx.gate_lock:
                gate_ok = ctx.gate_cache.get(gate_key)
            if gate_ok is None:
                gate_ok = reliability_gate(ws, case.method.file_path, case.language)
                with ctx.gate_lock:
                    ctx.gate_cache[gate_key] = gate_ok
        return verify_test(ws, case, spliced, tree, code, gate_ok)

    raise AssertionError(f"unhandled scenario {case.scenario}")


def _body_from_response(code: str, case: TestCase) -> str:
    """Models often echo the whole method; accept either a body or a full
    method and use its interior in that case."""
    pf = parse_source(code.encode("utf-8"), case.language)
    echoed = pf.method_named(case.method.name)
    if echoed is not None and pf.parse_ok:
        return echoed.interior_text()
    return code


def _materialize_scratch(
    ctx: _RunContext,
    case: TestCase,
    backend: BackendConfig,
    multi: bool,
    spliced: SpliceResult,
) -> Path:
    ws = ctx.workspaces[case.repo_ref]
    tree = _scratch_tree(ctx.config, case, backend, multi)
    shutil.copytree(
        ws.root, tree, ignore=shutil.ignore_patterns(".git", "node_modules")
    )
    target = tree / (spliced.target_path or case.method.file_path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(spliced.new_file_contents)
    return tree


def cmd_run(
    config: RunConfig, cases_path: Path, verdicts_path: Path
) -> tuple[int, int]:
    """Returns (verdict_count, exit_code)."""
    if not cases_path.exists():
        return (0, 2)
    if not config.backends:
        return (0, 2)
    cases = read_cases_jsonl(str(cases_path))
    cases = [
        c
        for c in cases
        if c.scenario in config.scenarios and c.language in config.languages
    ]
    workspaces = {ws.repo_ref: ws for ws in cached_workspaces(config)}
    coverage: dict[str, Optional[CoverageMap]] = {}
    for ref, ws in workspaces.items():
        cov_path = (
            config.cache_root / repo_hash(ref) / ws.commit / "coverage.json"
        )
        coverage[ref] = (
            CoverageMap.from_json(cov_path.read_text())
            if cov_path.exists()
            else None
        )
    ctx = _RunContext(config=config, workspaces=workspaces, coverage=coverage)
    if config.retrievals and config.retrievals.exists():
        ctx.retrievals = load_retrievals(config.retrievals)

    multi = len(config.backends) > 1
    jobs = [(case, backend) for case in cases for backend in config.backends]
    results: list[CaseResult] = []
    if config.parallelism == 1:
        for case, backend in jobs:
            results.append(_run_one(ctx, case, backend, multi))
    else:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            futures = [
                pool.submit(_run_one, ctx, case, backend, multi)
                for case, backend in jobs
            ]
            results = [f.result() for f in futures]

    verdicts_path.parent.mkdir(parents=True, exist_ok=True)
    write_results_jsonl(results, verdicts_path)
    if ctx.skips:
        skips_path = verdicts_path.parent / "skips.jsonl"
        with open(skips_path, "w", encoding="utf-8") as fh:
            for entry in sorted(ctx.skips, key=lambda e: (e["case_id"], e["model_id"])):
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return (len(results), 0)


# ---------------------------------------------------------------- report
def cmd_report(
    config: RunConfig, verdicts_path: Path, out_dir: Path
) -> tuple[Path, Path, int]:
    results = read_results_jsonl(verdicts_path)
    metrics = aggregate(results)
    roster = config.roster or DEFAULT_ROSTER
    versions = analyzer_versions(roster)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_doc = render(metrics, "json", versions, template_hash())
    md_doc = render(metrics, "markdown", versions, template_hash())
    json_path = out_dir / "report.json"
    md_path = out_dir / "report.md"
    json_path.write_text(json_doc, encoding="utf-8")
    md_path.write_text(md_doc, encoding="utf-8")
    return (json_path, md_path, 0)
