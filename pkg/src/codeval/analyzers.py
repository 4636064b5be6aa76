"""Static-analyzer adapters and the per-language roster.

Each adapter invokes one tool against a working tree and normalizes its
machine-readable output into Diagnostic records with tree-relative paths.
Diagnostics identity is (rule_id, message); adapters must never embed
absolute paths or timestamps in either field.
"""

from __future__ import annotations

import json
import re
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .core import Diagnostic, Language
from .errors import AnalyzerUnavailable

ANALYZER_TIMEOUT = 240.0

#: Paper roster: which tools run per language unless a run configures
#: its own subset.
DEFAULT_ROSTER: dict[Language, tuple[str, ...]] = {
    Language.JAVASCRIPT: ("eslint",),
    Language.TYPESCRIPT: ("eslint", "tsc"),
    Language.PYTHON: ("pylint", "pyright"),
    Language.JAVA: ("spotbugs",),
    Language.CSHARP: ("roslyn",),
    Language.CPP: ("clang",),
}

Roster = dict[Language, tuple[str, ...]]


def _run(cmd: list[str], cwd: Path) -> subprocess.CompletedProcess:
    return subprocess.run(
        cmd,
        cwd=str(cwd),
        capture_output=True,
        text=True,
        timeout=ANALYZER_TIMEOUT,
    )


@dataclass(frozen=True)
class Adapter:
    name: str
    binary: str
    run: Callable[[Path], list[Diagnostic]]
    version_args: tuple[str, ...] = ("--version",)

    def available(self) -> bool:
        return shutil.which(self.binary) is not None

    def version(self) -> Optional[str]:
        if not self.available():
            return None
        proc = subprocess.run(
            [self.binary, *self.version_args],
            capture_output=True,
            text=True,
            timeout=60,
        )
        out = (proc.stdout or proc.stderr).strip()
        m = re.search(r"\d+(?:\.\d+)+", out)
        return m.group(0) if m else out.splitlines()[0] if out else None


def _rel(path_str: str, tree: Path) -> str:
    try:
        return str(Path(path_str).resolve().relative_to(tree.resolve()))
    except ValueError:
        return path_str


# ---------------------------------------------------------------- pyright
def _run_pyright(tree: Path) -> list[Diagnostic]:
    proc = _run(["pyright", "--outputjson", "."], tree)
    if not proc.stdout.strip():
        raise AnalyzerUnavailable(f"pyright produced no output: {proc.stderr[:400]}")
    data = json.loads(proc.stdout)
    out = []
    for d in data.get("generalDiagnostics", []):
        if d.get("severity") not in ("error", "warning"):
            continue
        out.append(
            Diagnostic(
                rule_id=d.get("rule") or d.get("severity", "error"),
                message=d.get("message", ""),
                file_path=_rel(d.get("file", d.get("uri", "")), tree),
                line=int(d.get("range", {}).get("start", {}).get("line", 0)) + 1,
                tool="pyright",
            )
        )
    return out


# ---------------------------------------------------------------- pylint
def _run_pylint(tree: Path) -> list[Diagnostic]:
    proc = _run(
        ["pylint", "--output-format=json", "--recursive=y", "--score=n", "."],
        tree,
    )
    text = proc.stdout.strip()
    if not text:
        return []
    records = json.loads(text)
    out = []
    for r in records:
        if r.get("type") not in ("error", "warning", "convention", "refactor"):
            continue
        out.append(
            Diagnostic(
                rule_id=r.get("symbol") or r.get("message-id", ""),
                message=r.get("message", ""),
                file_path=r.get("path", ""),
                line=int(r.get("line", 0)),
                tool="pylint",
            )
        )
    return out


# ---------------------------------------------------------------- eslint
def _run_eslint(tree: Path) -> list[Diagnostic]:
    proc = _run(
        ["eslint", "--format", "json", "--no-error-on-unmatched-pattern", "."],
        tree,
    )
    text = proc.stdout.strip()
    if not text.startswith("["):
        raise AnalyzerUnavailable(f"eslint failed: {proc.stderr[:400]}")
    out = []
    for entry in json.loads(text):
        fpath = _rel(entry.get("filePath", ""), tree)
        for msg in entry.get("messages", []):
            out.append(
                Diagnostic(
                    rule_id=msg.get("ruleId") or "fatal",
                    message=msg.get("message", ""),
                    file_path=fpath,
                    line=int(msg.get("line") or 0),
                    tool="eslint",
                )
            )
    return out


# ---------------------------------------------------------------- tsc
_TSC_LINE = re.compile(
    r"^(?P<path>[^()\n]+)\((?P<line>\d+),(?P<col>\d+)\): "
    r"(?P<sev>error|warning) (?P<code>TS\d+): (?P<msg>.*)$"
)


def _run_tsc(tree: Path) -> list[Diagnostic]:
    if (tree / "tsconfig.json").exists():
        cmd = ["tsc", "-p", ".", "--noEmit", "--pretty", "false"]
    else:
        files = sorted(
            str(p.relative_to(tree))
            for p in tree.rglob("*.ts")
            if "node_modules" not in p.parts
        )
        if not files:
            return []
        cmd = ["tsc", "--noEmit", "--strict", "--pretty", "false", *files]
    proc = _run(cmd, tree)
    out = []
    for line in proc.stdout.splitlines():
        m = _TSC_LINE.match(line.strip())
        if m is None:
            continue
        out.append(
            Diagnostic(
                rule_id=m.group("code"),
                message=m.group("msg").strip(),
                file_path=m.group("path").strip(),
                line=int(m.group("line")),
                tool="tsc",
            )
        )
    return out


# ---------------------------------------------------------------- spotbugs
def _run_spotbugs(tree: Path) -> list[Diagnostic]:
    classes = tree / "target" / "classes"
    target = str(classes if classes.exists() else tree)
    proc = _run(["spotbugs", "-textui", "-sarif", target], tree)
    return _parse_sarif(proc.stdout, tree, "spotbugs")


# ---------------------------------------------------------------- roslyn
_MSBUILD_DIAG = re.compile(
    r"^(?P<path>[^(]+)\((?P<line>\d+),\d+\): "
    r"(?P<sev>warning|error) (?P<code>[A-Z]{2}\d+): (?P<msg>.*?)( \[[^\]]*\])?$"
)


def _run_roslyn(tree: Path) -> list[Diagnostic]:
    proc = _run(["dotnet", "build", "--nologo", "-clp:NoSummary"], tree)
    seen = set()
    out = []
    for line in proc.stdout.splitlines():
        m = _MSBUILD_DIAG.match(line.strip())
        if m is None:
            continue
        key = (m.group("path"), m.group("line"), m.group("code"), m.group("msg"))
        if key in seen:  # msbuild repeats diagnostics per target
            continue
        seen.add(key)
        out.append(
            Diagnostic(
                rule_id=m.group("code"),
                message=m.group("msg").strip(),
                file_path=_rel(m.group("path").strip(), tree),
                line=int(m.group("line")),
                tool="roslyn",
            )
        )
    return out


# ---------------------------------------------------------------- clang
_CLANG_DIAG = re.compile(
    r"^(?P<path>[^:\n]+):(?P<line>\d+):\d+: (?P<sev>warning|error): "
    r"(?P<msg>.*?)(?: \[(?P<flag>[-\w,]+)\])?$"
)


def _run_clang(tree: Path) -> list[Diagnostic]:
    sources = sorted(
        p
        for p in tree.rglob("*")
        if p.suffix in (".c", ".cc", ".cpp", ".cxx") and p.is_file()
    )
    out = []
    for src in sources:
        lang_std = ["-std=c11"] if src.suffix == ".c" else ["-std=c++17"]
        proc = _run(
            ["clang", "-fsyntax-only", "-Wall", *lang_std,
             str(src.relative_to(tree))],
            tree,
        )
        for line in proc.stderr.splitlines():
            m = _CLANG_DIAG.match(line.strip())
            if m is None:
                continue
            out.append(
                Diagnostic(
                    rule_id=m.group("flag") or m.group("sev"),
                    message=m.group("msg").strip(),
                    file_path=_rel(m.group("path"), tree),
                    line=int(m.group("line")),
                    tool="clang",
                )
            )
    return out


def _parse_sarif(text: str, tree: Path, tool: str) -> list[Diagnostic]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return []
    out = []
    for run in data.get("runs", []):
        for res in run.get("results", []):
            loc = (res.get("locations") or [{}])[0]
            phys = loc.get("physicalLocation", {})
            art = phys.get("artifactLocation", {}).get("uri", "")
            out.append(
                Diagnostic(
                    rule_id=res.get("ruleId", ""),
                    message=res.get("message", {}).get("text", ""),
                    file_path=_rel(art, tree),
                    line=int(phys.get("region", {}).get("startLine", 0)),
                    tool=tool,
                )
            )
    return out


ADAPTERS: dict[str, Adapter] = {
    "pyright": Adapter("pyright", "pyright", _run_pyright),
    "pylint": Adapter("pylint", "pylint", _run_pylint),
    "eslint": Adapter("eslint", "eslint", _run_eslint, ("--version",)),
    "tsc": Adapter("tsc", "tsc", _run_tsc, ("--version",)),
    "spotbugs": Adapter("spotbugs", "spotbugs", _run_spotbugs, ("-version",)),
    "roslyn": Adapter("roslyn", "dotnet", _run_roslyn),
    "clang": Adapter("clang", "clang", _run_clang),
}


def analyzer_versions(roster: Roster) -> dict[str, str]:
    versions = {}
    for tools in roster.values():
        for name in tools:
            adapter = ADAPTERS[name]
            if adapter.available():
                versions[name] = adapter.version() or "unknown"
    return versions


def run_analyzers(
    tree: Path,
    language: Language,
    roster: Optional[Roster] = None,
    pins: Optional[dict[str, str]] = None,
) -> list[Diagnostic]:
    """Union of all configured analyzers' findings on the tree, sorted for
    determinism. Raises AnalyzerUnavailable for a missing binary or a
    version that violates a pin."""
    tools = (roster or DEFAULT_ROSTER).get(language, ())
    findings: list[Diagnostic] = []
    for name in tools:
        adapter = ADAPTERS.get(name)
        if adapter is None:
            raise AnalyzerUnavailable(f"no adapter for analyzer {name!r}")
        if not adapter.available():
            raise AnalyzerUnavailable(f"analyzer binary missing: {adapter.binary}")
        if pins and name in pins:
            actual = adapter.version()
            if actual != pins[name]:
                raise AnalyzerUnavailable(
                    f"{name} version {actual} does not match pinned {pins[name]}"
                )
        findings.extend(adapter.run(tree))
    findings.sort(key=lambda d: (d.file_path, d.line, d.rule_id, d.message))
    return findings
