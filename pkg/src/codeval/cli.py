"""Operator entry points.

Exit codes: 0 success, 2 config error, 3 environment error (missing
toolchain or analyzer), 4 no eligible input. Secrets reach the HTTP
backend only through the CODEVAL_API_KEY environment variable; config
files interpolate ${VAR} references instead of embedding values.
"""

from __future__ import annotations

import os
import re
import sys
from pathlib import Path
from typing import Optional

import click

from .analyzers import ADAPTERS, DEFAULT_ROSTER, Roster
from .core import Language, Scenario
from .errors import ConfigError, SchemaViolation
from .modelio import BackendConfig
from .runner import RunConfig, cmd_extract, cmd_ingest, cmd_report, cmd_run

_ENV_REF = re.compile(r"\$\{(?P<name>[A-Za-z_][A-Za-z0-9_]*)\}")


def parse_config_file(path: Path) -> dict[str, str]:
    """Flat key = value pairs; ${VAR} values interpolate from the
    environment so secrets never land in files or reports."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        value = value.strip().strip("\"'")
        value = _ENV_REF.sub(
            lambda m: os.environ.get(m.group("name"), ""), value
        )
        out[key.strip()] = value
    return out


def _parse_roster(spec: str) -> Roster:
    """`python:pyright;typescript:tsc,eslint` -> roster dict. An empty tool
    list disables analyzers for that language."""
    roster: Roster = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        lang_s, _, tools_s = chunk.partition(":")
        lang = Language(lang_s.strip())
        tools = tuple(t.strip() for t in tools_s.split(",") if t.strip())
        for t in tools:
            if t not in ADAPTERS:
                raise ConfigError(f"unknown analyzer {t!r}")
        roster[lang] = tools
    for lang in Language:
        roster.setdefault(lang, DEFAULT_ROSTER[lang])
    return roster


def _split_enum(value: str, enum_cls):
    if not value or value == "all":
        return tuple(enum_cls)
    return tuple(enum_cls(v.strip()) for v in value.split(",") if v.strip())


@click.group()
def main() -> None:
    """Batch evaluation harness for LLM coding assistants."""


_COMMON = [
    click.option("--config", "config_file", default=None,
                 help="Flat key=value config file."),
    click.option("--scenarios", default="all",
                 help="Comma list: doc,fix,generate,test,workspace."),
    click.option("--languages", default="all",
                 help="Comma list: javascript,typescript,python,java,csharp,cpp."),
    click.option("--cache", default="cache", help="Workspace cache directory."),
    click.option("--out", default="out", help="Output directory."),
    click.option("--analyzers", default=None,
                 help="Roster override, e.g. 'python:pyright;typescript:tsc'."),
]


def _common(fn):
    for opt in reversed(_COMMON):
        fn = opt(fn)
    return fn


@main.command()
@_common
@click.option("--repos", required=True, help="File of `<url-or-path> <commit>` lines.")
@click.option("--min-size", type=int, default=None, help="Min repo bytes.")
@click.option("--max-size", type=int, default=None, help="Max repo bytes.")
@click.option("--timeout", type=float, default=None,
              help="Build+test wall-clock limit in seconds.")
@click.option("--cpp-manifest", default=None,
              help="Curated C/C++ manifest: `<url> <commit> <build_cmd>`.")
def ingest(config_file, scenarios, languages, cache, out, analyzers,
           repos, min_size, max_size, timeout, cpp_manifest):
    """Acquire repositories, filter, and establish baselines."""
    config = _make_config(
        config_file=config_file, scenarios=scenarios, languages=languages,
        cache=cache, out=out, analyzers=analyzers, repos=repos,
        min_size=min_size, max_size=max_size, timeout=timeout,
    )
    if cpp_manifest:
        config.cpp_manifest = Path(cpp_manifest)
    outcomes, code = cmd_ingest(config)
    for o in outcomes:
        line = f"{o.status:9s} {o.repo_ref}"
        if o.reason:
            line += f"  ({o.reason})"
        click.echo(line)
    sys.exit(code)


@main.command()
@_common
@click.option("--cases", default="out/cases.jsonl", help="Output cases JSONL.")
@click.option("--workspace-cases", default=None,
              help="Workspace-scenario dataset JSONL.")
def extract(config_file, scenarios, languages, cache, out, analyzers,
            cases, workspace_cases):
    """Materialize scenario test cases from cached workspaces."""
    config = _make_config(
        config_file=config_file, scenarios=scenarios, languages=languages,
        cache=cache, out=out, analyzers=analyzers,
        workspace_cases=workspace_cases,
    )
    try:
        count, code = cmd_extract(config, Path(cases))
    except SchemaViolation as exc:
        click.echo(f"schema violation: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{count} cases -> {cases}")
    sys.exit(code)


@main.command()
@_common
@click.option("--cases", default="out/cases.jsonl", help="Input cases JSONL.")
@click.option("--verdicts", default="out/verdicts.jsonl", help="Output verdicts.")
@click.option("--backend", type=click.Choice(["replay", "http"]), default="replay")
@click.option("--model", "models", multiple=True, required=True,
              help="Model/backend id (repeatable).")
@click.option("--transcripts", default=None, help="Transcript store directory.")
@click.option("--endpoint", default=None, help="Chat-completion endpoint URL.")
@click.option("--parallelism", type=int, default=1)
@click.option("--keyword-mode", type=click.Choice(["all", "any"]), default="all")
@click.option("--scratch", default="scratch", help="Scratch tree root.")
@click.option("--retrievals", default=None, help="Ranked retrievals JSONL.")
@click.option("--token-budget", type=int, default=None)
@click.option("--record", is_flag=True, default=False,
              help="Record http exchanges into the transcript store.")
def run(config_file, scenarios, languages, cache, out, analyzers, cases,
        verdicts, backend, models, transcripts, endpoint, parallelism,
        keyword_mode, scratch, retrievals, token_budget, record):
    """Evaluate cases against one or more model backends."""
    config = _make_config(
        config_file=config_file, scenarios=scenarios, languages=languages,
        cache=cache, out=out, analyzers=analyzers, backend=backend,
        models=models, transcripts=transcripts, endpoint=endpoint,
        parallelism=parallelism, keyword_mode=keyword_mode, scratch=scratch,
        retrievals=retrievals, token_budget=token_budget, record=record,
    )
    if backend == "replay" and not (transcripts or config.backends[0].transcripts_dir):
        click.echo("replay backend requires --transcripts", err=True)
        sys.exit(2)
    count, code = cmd_run(config, Path(cases), Path(verdicts))
    click.echo(f"{count} verdicts -> {verdicts}")
    sys.exit(code)


@main.command()
@_common
@click.option("--verdicts", default="out/verdicts.jsonl", help="Input verdicts.")
def report(config_file, scenarios, languages, cache, out, analyzers, verdicts):
    """Aggregate verdicts into report.json and report.md."""
    config = _make_config(
        config_file=config_file, scenarios=scenarios, languages=languages,
        cache=cache, out=out, analyzers=analyzers,
    )
    vpath = Path(verdicts)
    if not vpath.exists():
        click.echo(f"no verdicts at {vpath}", err=True)
        sys.exit(2)
    try:
        json_path, md_path, code = cmd_report(config, vpath, config.out_dir)
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(2)
    click.echo(f"report -> {json_path} {md_path}")
    sys.exit(code)


def _make_config(**kwargs) -> RunConfig:
    """Merge CLI flags and optional config file into a RunConfig."""
    file_conf: dict[str, str] = {}
    config_file = kwargs.get("config_file")
    if config_file:
        try:
            file_conf = parse_config_file(Path(config_file))
        except (ConfigError, OSError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)

    def conf(key, fallback):
        value = kwargs.get(key)
        if value not in (None, (), ""):
            return value
        return file_conf.get(key, fallback)

    try:
        backends = []
        backend_kind = conf("backend", "replay")
        models = kwargs.get("models") or ()
        for model in models:
            backends.append(
                BackendConfig(
                    kind="replay" if backend_kind == "replay" else "http_chat",
                    model_id=model,
                    endpoint=conf("endpoint", "") or "",
                    transcripts_dir=conf("transcripts", None),
                    record=bool(kwargs.get("record", False)),
                )
            )
        roster = None
        roster_spec = conf("analyzers", None)
        if roster_spec:
            roster = _parse_roster(roster_spec)
        config = RunConfig(
            repos_file=Path(kwargs["repos"]) if kwargs.get("repos") else None,
            languages=_split_enum(conf("languages", "all"), Language),
            scenarios=_split_enum(conf("scenarios", "all"), Scenario),
            backends=tuple(backends),
            cache_root=Path(conf("cache", "cache")),
            scratch_root=Path(conf("scratch", "scratch")),
            out_dir=Path(conf("out", "out")),
            parallelism=int(conf("parallelism", 1)),
            keyword_mode=conf("keyword_mode", "all"),
            token_budget=int(conf("token_budget", 16000)),
            min_repo_bytes=int(conf("min_size", 1048576)),
            max_repo_bytes=int(conf("max_size", 104857600)),
            recipe_timeout=float(conf("timeout", 600.0)),
            roster=roster,
            workspace_cases=(
                Path(conf("workspace_cases", "")) or None
                if conf("workspace_cases", None)
                else None
            ),
            retrievals=(
                Path(conf("retrievals", "")) if conf("retrievals", None) else None
            ),
        )
    except (ConfigError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    return config


if __name__ == "__main__":
    main()
