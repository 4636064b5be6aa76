"""Repository acquisition, eligibility filters, build recipes, baselines.

Every recipe command runs inside the cached working copy, never the
original checkout; pristine trees can be hashed before/after a run to
assert the sandbox held. Subprocesses are killed as a process group a
grace period after their recipe timeout.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shlex
import shutil
import signal
import subprocess
import tempfile
import threading
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from .analyzers import Roster, run_analyzers
from .core import Diagnostic, Language
from .errors import BuildFailure, ProbeFailure, RecipeNotFound

TIMEOUT_GRACE = 5.0
DEFAULT_TIMEOUT = 600.0
MIN_REPO_BYTES = 1 * 1024 * 1024
MAX_REPO_BYTES = 100 * 1024 * 1024


class RecipeKind(str, Enum):
    NODE_NPM = "node_npm"
    MAVEN_JDK8 = "maven_jdk8"
    PYTHON_VENV = "python_venv"
    DOTNET = "dotnet"
    CPP_MANUAL = "cpp_manual"


class TestStatus(str, Enum):
    __test__ = False  # not a pytest collection target

    PASS = "pass"
    FAIL = "fail"
    SKIP = "skip"


@dataclass(frozen=True)
class BuildRecipe:
    kind: RecipeKind
    install_cmds: tuple[tuple[str, ...], ...]
    test_cmd: tuple[str, ...]
    timeout: float = DEFAULT_TIMEOUT

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "install_cmds": [list(c) for c in self.install_cmds],
            "test_cmd": list(self.test_cmd),
            "timeout": self.timeout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BuildRecipe":
        return cls(
            kind=RecipeKind(d["kind"]),
            install_cmds=tuple(tuple(c) for c in d["install_cmds"]),
            test_cmd=tuple(d["test_cmd"]),
            timeout=float(d["timeout"]),
        )


@dataclass
class TestSuiteResult:
    tests: dict[str, TestStatus]
    duration: float
    exit_ok: bool

    def passing(self) -> set[str]:
        return {t for t, s in self.tests.items() if s is TestStatus.PASS}

    def to_dict(self) -> dict:
        # Durations are wall-clock noise; baselines must serialize
        # byte-identically across repeated runs.
        return {
            "tests": {k: v.value for k, v in sorted(self.tests.items())},
            "exit_ok": self.exit_ok,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestSuiteResult":
        return cls(
            tests={k: TestStatus(v) for k, v in d["tests"].items()},
            duration=0.0,
            exit_ok=bool(d["exit_ok"]),
        )


@dataclass
class RepoWorkspace:
    root: Path
    language: Language
    recipe: BuildRecipe
    size_bytes: int
    commit: str
    repo_ref: str
    baseline_diagnostics: tuple[Diagnostic, ...] = ()
    baseline_tests: TestSuiteResult = field(
        default_factory=lambda: TestSuiteResult({}, 0.0, True)
    )
    venv_python: Optional[str] = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def baseline_multiset(self) -> dict[tuple[str, str], int]:
        counts: dict[tuple[str, str], int] = {}
        for d in self.baseline_diagnostics:
            counts[d.key()] = counts.get(d.key(), 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "language": self.language.value,
            "recipe": self.recipe.to_dict(),
            "size_bytes": self.size_bytes,
            "commit": self.commit,
            "repo_ref": self.repo_ref,
            "baseline_diagnostics": [d.to_dict() for d in self.baseline_diagnostics],
            "baseline_tests": self.baseline_tests.to_dict(),
            "venv_python": self.venv_python,
        }

    @classmethod
    def from_dict(cls, d: dict, root: Path) -> "RepoWorkspace":
        return cls(
            root=root,
            language=Language(d["language"]),
            recipe=BuildRecipe.from_dict(d["recipe"]),
            size_bytes=int(d["size_bytes"]),
            commit=d["commit"],
            repo_ref=d["repo_ref"],
            baseline_diagnostics=tuple(
                Diagnostic.from_dict(x) for x in d["baseline_diagnostics"]
            ),
            baseline_tests=TestSuiteResult.from_dict(d["baseline_tests"]),
            venv_python=d.get("venv_python"),
        )


# ---------------------------------------------------------------- helpers
def tree_size(root: Path) -> int:
    total = 0
    for p in root.rglob("*"):
        if ".git" in p.parts:
            continue
        if p.is_file():
            total += p.stat().st_size
    return total


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if ".git" in p.parts or not p.is_file():
            continue
        h.update(str(p.relative_to(root)).encode())
        h.update(b"\0")
        h.update(p.read_bytes())
        h.update(b"\0")
    return h.hexdigest()


def repo_hash(repo_ref: str) -> str:
    return hashlib.sha256(repo_ref.encode()).hexdigest()[:16]


def run_command(
    cmd: tuple[str, ...] | list[str],
    cwd: Path,
    timeout: float,
    env: Optional[dict[str, str]] = None,
) -> subprocess.CompletedProcess:
    """Run one recipe command in its own process group; on timeout the
    whole group is killed within TIMEOUT_GRACE seconds."""
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    proc = subprocess.Popen(
        list(cmd),
        cwd=str(cwd),
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        env=full_env,
        start_new_session=True,
    )
    try:
        out, err = proc.communicate(timeout=timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()
        try:
            out, err = proc.communicate(timeout=TIMEOUT_GRACE)
        except subprocess.TimeoutExpired:
            out, err = "", ""
        raise subprocess.TimeoutExpired(list(cmd), timeout, output=out, stderr=err)
    return subprocess.CompletedProcess(list(cmd), proc.returncode, out, err)


# ---------------------------------------------------------------- recipes
def load_cpp_manifest(path: Path) -> dict[str, tuple[str, str]]:
    """Curated C/C++ list: `<url> <commit> <build_cmd>` per line."""
    entries: dict[str, tuple[str, str]] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) != 3:
            continue
        url, commit, build_cmd = parts
        entries[url] = (commit, build_cmd)
    return entries


def detect_recipe(
    root: Path,
    language: Language,
    timeout: float = DEFAULT_TIMEOUT,
    cpp_manifest_entry: Optional[str] = None,
) -> BuildRecipe:
    if language in (Language.JAVASCRIPT, Language.TYPESCRIPT):
        if (root / "package.json").exists():
            return BuildRecipe(
                kind=RecipeKind.NODE_NPM,
                install_cmds=(("npm", "install", "--no-audit", "--no-fund",
                               "--silent"),),
                test_cmd=("npm", "test", "--silent"),
                timeout=timeout,
            )
        raise RecipeNotFound("no package.json at repository root")
    if language is Language.JAVA:
        if (root / "pom.xml").exists():
            return BuildRecipe(
                kind=RecipeKind.MAVEN_JDK8,
                install_cmds=(),
                test_cmd=("mvn", "-q", "-B", "test"),
                timeout=timeout,
            )
        raise RecipeNotFound("no pom.xml at repository root (Maven required)")
    if language is Language.PYTHON:
        has_py = any(root.rglob("*.py"))
        if has_py:
            installs: list[tuple[str, ...]] = []
            if (root / "requirements.txt").exists():
                installs.append(
                    ("{venv_python}", "-m", "pip", "install", "-q",
                     "-r", "requirements.txt")
                )
            return BuildRecipe(
                kind=RecipeKind.PYTHON_VENV,
                install_cmds=tuple(installs),
                test_cmd=("{venv_python}", "-m", "pytest", "-q",
                          "--junit-xml", "{junit_xml}"),
                timeout=timeout,
            )
        raise RecipeNotFound("no Python sources found")
    if language is Language.CSHARP:
        projects = list(root.glob("*.sln")) + list(root.rglob("*.csproj"))
        for proj in projects:
            if proj.suffix == ".csproj":
                text = proj.read_text(errors="replace")
                if any(t in text for t in ("net6.0", "net7.0", "net8.0")):
                    return BuildRecipe(
                        kind=RecipeKind.DOTNET,
                        install_cmds=(("dotnet", "restore"),),
                        test_cmd=("dotnet", "test", "--nologo"),
                        timeout=timeout,
                    )
        if any(p.suffix == ".sln" for p in projects):
            return BuildRecipe(
                kind=RecipeKind.DOTNET,
                install_cmds=(("dotnet", "restore"),),
                test_cmd=("dotnet", "test", "--nologo"),
                timeout=timeout,
            )
        raise RecipeNotFound("no .NET 6/7/8 project or solution found")
    if language is Language.CPP:
        if cpp_manifest_entry:
            return BuildRecipe(
                kind=RecipeKind.CPP_MANUAL,
                install_cmds=(),
                test_cmd=tuple(shlex.split(cpp_manifest_entry)),
                timeout=timeout,
            )
        raise RecipeNotFound("C/C++ repositories require a curated manifest entry")
    raise RecipeNotFound(f"unsupported language {language}")


@dataclass
class BaselineProbe:
    wall_time: float
    build_ok: bool
    method_count: int
    error: str = ""


def filter_repo(
    root: Path,
    recipe: BuildRecipe,
    probe: BaselineProbe,
    min_size: int = MIN_REPO_BYTES,
    max_size: int = MAX_REPO_BYTES,
) -> tuple[str, Optional[str]]:
    """('accept', None) or ('reject', reason). Raises ProbeFailure when the
    build itself errored (distinct from a timeout)."""
    size = tree_size(root)
    if size < min_size:
        return ("reject", "too_small")
    if size > max_size:
        return ("reject", "too_large")
    if probe.wall_time > recipe.timeout:
        return ("reject", "timeout")
    if not probe.build_ok:
        raise ProbeFailure(probe.error or "build failed")
    if probe.method_count == 0:
        return ("reject", "no_methods")
    return ("accept", None)


# ---------------------------------------------------------------- suites
def _materialize(cmd: tuple[str, ...], subs: dict[str, str]) -> list[str]:
    return [part.format_map(_SafeDict(subs)) for part in cmd]


class _SafeDict(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


def ensure_venv(venv_dir: Path) -> str:
    """Create (or reuse) an isolated environment; returns its python."""
    python = venv_dir / "bin" / "python"
    if not python.exists():
        subprocess.run(
            ["python3", "-m", "venv", "--system-site-packages", str(venv_dir)],
            check=True,
            capture_output=True,
            timeout=300,
        )
    return str(python)


def run_install(
    recipe: BuildRecipe, tree: Path, venv_python: Optional[str]
) -> None:
    subs = {"venv_python": venv_python or "python3"}
    for cmd in recipe.install_cmds:
        proc = run_command(_materialize(cmd, subs), tree, recipe.timeout)
        if proc.returncode != 0:
            raise BuildFailure(
                f"install command {cmd} failed: {proc.stderr[-800:]}"
            )


def run_suite(
    recipe: BuildRecipe,
    tree: Path,
    venv_python: Optional[str] = None,
    timeout: Optional[float] = None,
) -> TestSuiteResult:
    """Execute the recipe's test command and parse per-test results."""
    limit = timeout if timeout is not None else recipe.timeout
    junit_fd, junit_path = tempfile.mkstemp(suffix=".xml", prefix="codeval-junit-")
    os.close(junit_fd)
    subs = {"venv_python": venv_python or "python3", "junit_xml": junit_path}
    started = time.monotonic()
    try:
        proc = run_command(_materialize(recipe.test_cmd, subs), tree, limit)
    except subprocess.TimeoutExpired:
        os.unlink(junit_path)
        return TestSuiteResult({}, time.monotonic() - started, exit_ok=False)
    duration = time.monotonic() - started

    try:
        if recipe.kind is RecipeKind.PYTHON_VENV:
            tests = _parse_junit(Path(junit_path))
            # pytest: 0 ok, 1 test failures, 5 no tests collected
            exit_ok = proc.returncode in (0, 1, 5)
        elif recipe.kind is RecipeKind.NODE_NPM:
            tests = _parse_tap(proc.stdout)
            exit_ok = proc.returncode == 0 or bool(tests)
        else:
            tests = {}
            exit_ok = proc.returncode == 0
        if not tests:
            ok = proc.returncode == 0 or (
                recipe.kind is RecipeKind.PYTHON_VENV and proc.returncode == 5
            )
            tests = {"suite": TestStatus.PASS if ok else TestStatus.FAIL}
        return TestSuiteResult(tests, duration, exit_ok)
    finally:
        if os.path.exists(junit_path):
            os.unlink(junit_path)


def _parse_junit(path: Path) -> dict[str, TestStatus]:
    if not path.exists() or path.stat().st_size == 0:
        return {}
    try:
        root = ET.parse(str(path)).getroot()
    except ET.ParseError:
        return {}
    tests: dict[str, TestStatus] = {}
    for case in root.iter("testcase"):
        tid = f"{case.get('classname', '')}::{case.get('name', '')}"
        status = TestStatus.PASS
        for child in case:
            if child.tag in ("failure", "error"):
                status = TestStatus.FAIL
            elif child.tag == "skipped":
                status = TestStatus.SKIP
        tests[tid] = status
    return tests


_TAP_OK = re.compile(r"^(not )?ok \d+ - (.+?)(?: # (SKIP|TODO).*)?$")


def _parse_tap(stdout: str) -> dict[str, TestStatus]:
    tests: dict[str, TestStatus] = {}
    for raw in stdout.splitlines():
        m = _TAP_OK.match(raw.strip())
        if m is None:
            continue
        name = m.group(2).strip()
        if m.group(3) == "SKIP":
            tests[name] = TestStatus.SKIP
        elif m.group(1):
            tests[name] = TestStatus.FAIL
        else:
            tests[name] = TestStatus.PASS
    return tests


# ---------------------------------------------------------------- baseline
def establish_baseline(
    tree: Path,
    language: Language,
    recipe: BuildRecipe,
    repo_ref: str,
    commit: str,
    roster: Optional[Roster] = None,
    pins: Optional[dict[str, str]] = None,
    venv_dir: Optional[Path] = None,
) -> RepoWorkspace:
    """Install, test, and analyze the cached tree; returns the populated
    workspace. Raises BuildFailure / AnalyzerUnavailable."""
    venv_python = None
    if recipe.kind is RecipeKind.PYTHON_VENV:
        venv_python = ensure_venv(venv_dir or tree.parent / "venv")
    run_install(recipe, tree, venv_python)
    suite = run_suite(recipe, tree, venv_python)
    if not suite.exit_ok:
        raise BuildFailure("baseline test suite did not execute cleanly")
    diagnostics = tuple(run_analyzers(tree, language, roster, pins))
    return RepoWorkspace(
        root=tree,
        language=language,
        recipe=recipe,
        size_bytes=tree_size(tree),
        commit=commit,
        repo_ref=repo_ref,
        baseline_diagnostics=diagnostics,
        baseline_tests=suite,
        venv_python=venv_python,
    )


def save_workspace(ws: RepoWorkspace, baseline_path: Path) -> None:
    baseline_path.write_text(
        json.dumps(ws.to_dict(), sort_keys=True, indent=1) + "\n"
    )


def load_workspace(baseline_path: Path) -> RepoWorkspace:
    data = json.loads(baseline_path.read_text())
    return RepoWorkspace.from_dict(data, baseline_path.parent / "tree")


# ---------------------------------------------------------------- checkout
def checkout(repo_ref: str, commit: str, dest: Path) -> str:
    """Materialize `repo_ref` at `commit` into dest/; returns the resolved
    commit identity. Local non-git paths get a content-hash identity."""
    src = Path(repo_ref)
    if src.exists():
        if (src / ".git").exists() and commit not in ("", "-", "WORKTREE"):
            subprocess.run(
                ["git", "clone", "--quiet", str(src), str(dest)],
                check=True, capture_output=True, timeout=600,
            )
            subprocess.run(
                ["git", "-C", str(dest), "checkout", "--quiet", commit],
                check=True, capture_output=True, timeout=120,
            )
            return commit
        shutil.copytree(src, dest, ignore=shutil.ignore_patterns(".git"))
        return commit if commit not in ("", "-") else "worktree-" + tree_hash(dest)[:12]
    subprocess.run(
        ["git", "clone", "--quiet", repo_ref, str(dest)],
        check=True, capture_output=True, timeout=600,
    )
    if commit not in ("", "-"):
        subprocess.run(
            ["git", "-C", str(dest), "checkout", "--quiet", commit],
            check=True, capture_output=True, timeout=120,
        )
    shutil.rmtree(dest / ".git", ignore_errors=True)
    return commit
