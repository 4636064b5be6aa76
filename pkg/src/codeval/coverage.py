"""Coverage adapters: which baseline tests execute which methods.

The external interface is a JSON map test_id -> covered method keys, where
a method key is `<file_path>::<name>@<span_start>`. Adapters differ in
granularity by recipe: the Python adapter traces executed lines per test;
the Node adapter records V8 function ranges per test file (every test in
the file shares the file's coverage).
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .core import Language, MethodInfo
from .errors import CoverageUnavailable
from .ingest import RecipeKind, RepoWorkspace, run_command
from .parsing import ParsedFile, ParsedMethod


def method_key(file_path: str, name: str, span_start: int) -> str:
    return f"{file_path}::{name}@{span_start}"


def key_of(method: ParsedMethod | MethodInfo) -> str:
    if isinstance(method, MethodInfo):
        return method_key(method.file_path, method.name, method.body_span[0])
    return method_key(method.file_path, method.name, method.span[0])


@dataclass
class CoverageMap:
    by_test: dict[str, set[str]] = field(default_factory=dict)

    def covering_tests(self, method: ParsedMethod | MethodInfo) -> set[str]:
        key = key_of(method)
        return {t for t, methods in self.by_test.items() if key in methods}

    def to_json(self) -> str:
        return json.dumps(
            {t: sorted(m) for t, m in sorted(self.by_test.items())},
            indent=1,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "CoverageMap":
        raw = json.loads(text)
        return cls(by_test={t: set(m) for t, m in raw.items()})


_PYTEST_PLUGIN = '''\
"""Per-test line tracer; writes {nodeid: [[path, line], ...]} JSON."""
import json
import os
import sys

_ROOT = os.environ["CODEVAL_COV_ROOT"]
_OUT = os.environ["CODEVAL_COV_OUT"]
_COVERAGE = {}


class _Tracer:
    __slots__ = ("lines",)

    def __init__(self):
        self.lines = set()

    def __call__(self, frame, event, arg):
        if event in ("call", "line"):
            fn = frame.f_code.co_filename
            if fn.startswith(_ROOT):
                self.lines.add((fn, frame.f_lineno))
        return self


def pytest_runtest_call(item):
    tracer = _Tracer()
    old = sys.gettrace()
    sys.settrace(tracer)
    try:
        item.runtest()
    finally:
        sys.settrace(old)
        _COVERAGE[item.nodeid] = sorted(tracer.lines)
    return True


def pytest_sessionfinish(session, exitstatus):
    with open(_OUT, "w") as fh:
        json.dump({k: list(v) for k, v in _COVERAGE.items()}, fh)
'''


def _nodeid_to_junit_id(nodeid: str) -> str:
    """tests/test_x.py::TestY::test_z -> tests.test_x.TestY::test_z,
    matching the junit-derived baseline test ids."""
    parts = nodeid.split("::")
    if len(parts) < 2:
        return nodeid
    module = parts[0]
    if module.endswith(".py"):
        module = module[:-3]
    module = module.replace("/", ".").replace("\\", ".")
    classname = ".".join([module] + parts[1:-1])
    name = parts[-1]
    return f"{classname}::{name}"


def _python_coverage(
    ws: RepoWorkspace, files: dict[str, ParsedFile]
) -> CoverageMap:
    if ws.venv_python is None:
        raise CoverageUnavailable("python workspace has no environment")
    with tempfile.TemporaryDirectory(prefix="codeval-cov-") as tmp:
        plugin_dir = Path(tmp)
        (plugin_dir / "_codeval_cov_plugin.py").write_text(_PYTEST_PLUGIN)
        out_path = plugin_dir / "coverage.json"
        env = {
            "CODEVAL_COV_ROOT": str(ws.root.resolve()),
            "CODEVAL_COV_OUT": str(out_path),
            "PYTHONPATH": str(plugin_dir)
            + os.pathsep
            + os.environ.get("PYTHONPATH", ""),
        }
        try:
            run_command(
                (ws.venv_python, "-m", "pytest", "-q",
                 "-p", "_codeval_cov_plugin"),
                ws.root,
                ws.recipe.timeout,
                env=env,
            )
        except subprocess.TimeoutExpired as exc:
            raise CoverageUnavailable(f"coverage run timed out: {exc}") from exc
        if not out_path.exists():
            raise CoverageUnavailable("coverage plugin produced no output")
        raw = json.loads(out_path.read_text())

    # executed (path, line) pairs -> methods whose line range intersects
    root = ws.root.resolve()
    line_ranges = _method_line_ranges(files)
    cov = CoverageMap()
    for nodeid, pairs in raw.items():
        tid = _nodeid_to_junit_id(nodeid)
        hit: set[str] = set()
        for fn, line in pairs:
            try:
                rel = str(Path(fn).resolve().relative_to(root))
            except ValueError:
                continue
            for key, (lo, hi) in line_ranges.get(rel, {}).items():
                if lo <= line <= hi:
                    hit.add(key)
        cov.by_test[tid] = hit
    return cov


def _method_line_ranges(
    files: dict[str, ParsedFile]
) -> dict[str, dict[str, tuple[int, int]]]:
    ranges: dict[str, dict[str, tuple[int, int]]] = {}
    for rel, pf in files.items():
        per: dict[str, tuple[int, int]] = {}
        for m in pf.methods:
            start_line = pf.source_bytes.count(b"\n", 0, m.span[0]) + 1
            end_line = pf.source_bytes.count(b"\n", 0, m.span[1]) + 1
            per[key_of(m)] = (start_line, end_line)
        ranges[rel] = per
    return ranges


_NODE_TEST_GLOBS = (
    "**/*.test.js", "**/*.test.mjs", "**/*.test.cjs",
    "test/**/*.js", "tests/**/*.js",
)


def _node_coverage(ws: RepoWorkspace, files: dict[str, ParsedFile]) -> CoverageMap:
    test_files: set[Path] = set()
    for pattern in _NODE_TEST_GLOBS:
        for p in ws.root.glob(pattern):
            if "node_modules" not in p.parts and p.is_file():
                test_files.add(p)
    if not test_files:
        raise CoverageUnavailable("no node test files found")

    cov = CoverageMap()
    root = ws.root.resolve()
    from .ingest import _parse_tap  # shared TAP parser

    for tf in sorted(test_files):
        with tempfile.TemporaryDirectory(prefix="codeval-v8cov-") as tmp:
            try:
                proc = run_command(
                    ("node", "--test", str(tf.relative_to(ws.root))),
                    ws.root,
                    ws.recipe.timeout,
                    env={"NODE_V8_COVERAGE": tmp},
                )
            except subprocess.TimeoutExpired as exc:
                raise CoverageUnavailable(f"coverage run timed out: {exc}") from exc
            tests = _parse_tap(proc.stdout)
            covered = _v8_covered_methods(Path(tmp), root, files)
        for tid in tests:
            cov.by_test[tid] = set(covered)
    return cov


def _v8_covered_methods(
    cov_dir: Path, root: Path, files: dict[str, ParsedFile]
) -> set[str]:
    """Map V8 function-coverage ranges with count>0 onto method spans.
    V8 offsets are UTF-16 code units; identical to byte offsets for the
    ASCII sources this adapter targets."""
    covered: set[str] = set()
    for report in cov_dir.glob("coverage-*.json"):
        try:
            data = json.loads(report.read_text())
        except json.JSONDecodeError:
            continue
        for entry in data.get("result", []):
            url = entry.get("url", "")
            if not url.startswith("file://"):
                continue
            try:
                rel = str(Path(url[7:]).resolve().relative_to(root))
            except ValueError:
                continue
            pf = files.get(rel)
            if pf is None:
                continue
            for fn in entry.get("functions", []):
                ranges = fn.get("ranges", [])
                if not ranges or ranges[0].get("count", 0) <= 0:
                    continue
                lo = ranges[0].get("startOffset", 0)
                hi = ranges[0].get("endOffset", 0)
                for m in pf.methods:
                    if lo <= m.span[0] and m.span[1] <= hi + 1:
                        covered.add(key_of(m))
                    elif m.span[0] <= lo and hi <= m.span[1] + 1:
                        covered.add(key_of(m))
    return covered


def collect_coverage(
    ws: RepoWorkspace, files: dict[str, ParsedFile]
) -> CoverageMap:
    if ws.recipe.kind is RecipeKind.PYTHON_VENV:
        return _python_coverage(ws, files)
    if ws.recipe.kind is RecipeKind.NODE_NPM:
        return _node_coverage(ws, files)
    raise CoverageUnavailable(
        f"no coverage adapter for recipe {ws.recipe.kind.value}"
    )
