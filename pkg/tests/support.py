"""Shared test helpers: fixture paths, the installed-analyzer roster, and
fixture-repo ingestion with relaxed size thresholds."""

from __future__ import annotations

from pathlib import Path

from codeval.analyzers import Roster
from codeval.core import Language
from codeval.ingest import RepoWorkspace, load_workspace
from codeval.runner import RunConfig, ingest_one

FIXTURES = Path(__file__).parent / "fixtures"

#: Analyzers actually installed in this environment (see decisions ledger:
#: pylint/spotbugs/roslyn binaries are unavailable here).
FIXTURE_ROSTER: Roster = {
    Language.PYTHON: ("pyright",),
    Language.JAVASCRIPT: ("eslint",),
    Language.TYPESCRIPT: ("tsc",),
    Language.JAVA: (),
    Language.CSHARP: (),
    Language.CPP: ("clang",),
}


def make_config(cache_root: Path, **overrides) -> RunConfig:
    defaults = dict(
        cache_root=cache_root,
        scratch_root=cache_root.parent / "scratch",
        out_dir=cache_root.parent / "out",
        min_repo_bytes=0,
        max_repo_bytes=100 * 1024 * 1024,
        recipe_timeout=300.0,
        roster=dict(FIXTURE_ROSTER),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


def ingest_fixture(repo_dir: Path, cache_root: Path) -> RepoWorkspace:
    config = make_config(cache_root)
    outcome = ingest_one(str(repo_dir), "-", config)
    assert outcome.status in ("accepted", "cached"), outcome
    for baseline in sorted(cache_root.glob("*/*/baseline.json")):
        ws = load_workspace(baseline)
        if ws.repo_ref == str(repo_dir):
            return ws
    raise AssertionError(f"workspace for {repo_dir} not cached")


# ------------------------------------------------------- golden pipeline
GOLDEN = FIXTURES / "golden"
RESPONSES = GOLDEN / "responses"


def golden_workspaces(cache_root: Path) -> dict[str, RepoWorkspace]:
    out = {}
    for name in ("lightning_repo", "tutorial_repo", "picgo_repo", "dump_repo"):
        ws = ingest_fixture(GOLDEN / name, cache_root)
        out[name] = ws
    return out


def select_golden_cases(cache_root: Path) -> tuple[list, dict]:
    """Extract doc+fix cases over the cache and keep the four figure cases.
    Returns (cases, workspaces_by_ref)."""
    from codeval.core import Scenario
    from codeval.extract import (
        make_doc_cases,
        make_fix_cases,
        scan_workspace_files,
    )

    workspaces = golden_workspaces(cache_root)
    by_ref = {ws.repo_ref: ws for ws in workspaces.values()}
    picked = []
    for name, ws in workspaces.items():
        files = scan_workspace_files(ws)
        if name == "dump_repo":
            doc = [
                c for c in make_doc_cases(ws, files) if c.method.name == "dump"
            ]
            assert len(doc) == 1
            picked.extend(doc)
        elif name == "tutorial_repo":
            fix = [
                c
                for c in make_fix_cases(ws, files)
                if '">"' in c.payload.diagnostic.message
            ]
            assert len(fix) == 1
            picked.extend(fix)
        else:
            fix = make_fix_cases(ws, files)
            assert len(fix) == 1, (name, fix)
            picked.extend(fix)
    return picked, by_ref


#: (repo dir name, model) -> hand-entered response file
GOLDEN_RESPONSES = {
    ("lightning_repo", "gpt-4"): "fix_pass_gpt4.md",
    ("tutorial_repo", "gpt-4"): "fix_fail_gpt4.md",
    ("picgo_repo", "gpt-3.5"): "fix_ts_gpt35.md",
    ("picgo_repo", "gpt-4"): "fix_ts_gpt4.md",
    ("dump_repo", "gpt-3.5"): "doc_dump_gpt35.md",
    ("dump_repo", "gpt-4"): "doc_dump_gpt4.md",
}


def enter_golden_transcripts(
    cases, by_ref, transcripts_dir: Path
) -> None:
    from codeval.modelio import TranscriptStore, build_prompt

    store = TranscriptStore(transcripts_dir)
    for case in cases:
        ws = by_ref[case.repo_ref]
        repo_name = Path(case.repo_ref).name
        prompt = build_prompt(case, ws)
        for model in ("gpt-4", "gpt-3.5"):
            fname = GOLDEN_RESPONSES.get((repo_name, model))
            if fname is not None:
                store.put(model, prompt, (RESPONSES / fname).read_text())


def enter_workspace_transcripts(
    ws_cases, retrievals, transcripts_dir: Path
) -> None:
    from codeval.modelio import TranscriptStore, build_prompt
    from codeval.retrieval import snippet_texts

    answers = {
        "merge": "Repeated keys merge by add: values for shared keys are "
                 "added together.",
        "padded": "Labels are padded with trailing spaces until they reach "
                  "the width.",
        "clamps": "The range helper bounds values between lo and hi.",
    }
    store = TranscriptStore(transcripts_dir)
    for case in ws_cases:
        retrieval = retrievals.get(case.id)
        snippets = snippet_texts(None, retrieval) if retrieval else []
        prompt = build_prompt(case, None, retrieval_snippets=snippets)
        for word, answer in answers.items():
            if word in case.payload.query:
                for model in ("gpt-4", "gpt-3.5"):
                    store.put(model, prompt, answer)


def run_golden_pipeline(
    cache_root: Path, work_dir: Path, parallelism: int
) -> tuple[Path, Path, Path]:
    """Replay-mode ingest->extract->run->report over the golden fixtures.
    Returns (cases_path, verdicts_path, report_json_path)."""
    import json

    from codeval.core import Scenario, write_cases_jsonl
    from codeval.extract import load_workspace_cases
    from codeval.modelio import BackendConfig
    from codeval.retrieval import load_retrievals
    from codeval.runner import cmd_report, cmd_run

    work_dir.mkdir(parents=True, exist_ok=True)
    cases, by_ref = select_golden_cases(cache_root)

    ws_dataset = FIXTURES / "workspace" / "queries.jsonl"
    ws_cases = load_workspace_cases(ws_dataset)
    retrievals_path = work_dir / "retrievals.jsonl"
    records = []
    ranks = {0: 1, 1: 2, 2: None}
    for i, case in enumerate(ws_cases):
        rec = {
            "case_id": case.id,
            "snippets": [
                {"id": f"s{i}a", "path": "src/a.js", "start": 0, "end": 40},
                {"id": f"s{i}b", "path": "src/b.js", "start": 0, "end": 40},
            ],
        }
        if ranks[i] is not None:
            rec["correct_rank"] = ranks[i]
        records.append(rec)
    retrievals_path.write_text(
        "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"
    )

    transcripts = work_dir / "transcripts"
    enter_golden_transcripts(cases, by_ref, transcripts)
    enter_workspace_transcripts(
        ws_cases, load_retrievals(retrievals_path), transcripts
    )

    all_cases = sorted(
        cases + ws_cases,
        key=lambda c: (c.repo_ref, c.method.file_path,
                       tuple(c.method.body_span), c.scenario.value, c.id),
    )
    cases_path = work_dir / "cases.jsonl"
    write_cases_jsonl(all_cases, str(cases_path))

    from codeval.modelio import BackendConfig as _BC

    config = make_config(
        cache_root,
        scratch_root=work_dir / "scratch",
        out_dir=work_dir,
        parallelism=parallelism,
        backends=(
            _BC(kind="replay", model_id="gpt-4",
                transcripts_dir=str(transcripts)),
            _BC(kind="replay", model_id="gpt-3.5",
                transcripts_dir=str(transcripts)),
        ),
        retrievals=retrievals_path,
    )
    verdicts_path = work_dir / "verdicts.jsonl"
    count, code = cmd_run(config, cases_path, verdicts_path)
    assert code == 0, f"cmd_run exited {code}"
    json_path, md_path, _ = cmd_report(config, verdicts_path, work_dir)
    return cases_path, verdicts_path, json_path
