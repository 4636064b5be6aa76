"""Insert model output into a working copy: docstrings, method bodies,
fixes, and generated tests.

Every splice touches exactly one contiguous byte range; bytes outside the
edited span are preserved verbatim (the locality invariant), and restoring
the original range undoes the splice (reversibility). The harness never
repairs model output — no bracket balancing, no import injection beyond
test-framework import dedup on append.
"""

from __future__ import annotations

import re
import textwrap
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .core import Language, MethodInfo
from .errors import AnchorNotFound
from .parsing import ParsedFile, ParsedMethod, parse_source


class SpliceKind(str, Enum):
    DOC_INSERT = "doc_insert"
    BODY_REPLACE = "body_replace"
    FIX_APPLY = "fix_apply"
    TEST_APPEND = "test_append"


@dataclass(frozen=True)
class SpliceResult:
    new_file_contents: bytes
    edited_span: tuple[int, int]  # replaced range in ORIGINAL file coordinates
    kind: SpliceKind
    target_path: Optional[str] = None  # only for sibling-file test placement


def _replace(
    original: bytes, span: tuple[int, int], replacement: bytes, kind: SpliceKind
) -> SpliceResult:
    lo, hi = span
    if lo < 0 or hi > len(original) or lo > hi:
        raise AnchorNotFound(f"span {span} outside file of {len(original)} bytes")
    return SpliceResult(
        new_file_contents=original[:lo] + replacement + original[hi:],
        edited_span=span,
        kind=kind,
    )


def _anchor_method(
    file_bytes: bytes, method: MethodInfo, language: Language
) -> ParsedMethod:
    """Re-locate the focal method in the current file bytes; the recorded
    span must still parse to the same method name."""
    pf = parse_source(file_bytes, language, method.file_path)
    for m in pf.methods:
        if m.span == tuple(method.body_span) and m.name == method.name:
            return m
    # span drifted: fall back to unique name match
    named = [m for m in pf.methods if m.name == method.name]
    if len(named) == 1:
        return named[0]
    raise AnchorNotFound(
        f"method {method.name!r} no longer anchors in {method.file_path}"
    )


def _base_indent(file_bytes: bytes, offset: int) -> str:
    line_start = file_bytes.rfind(b"\n", 0, offset) + 1
    m = re.match(rb"[ \t]*", file_bytes[line_start:])
    return m.group(0).decode("ascii", errors="replace")


def reindent(code: str, base_indent: str) -> str:
    """Strip the block's own common indentation, then apply base_indent to
    every non-blank line."""
    dedented = textwrap.dedent(code)
    lines = dedented.splitlines()
    out = [base_indent + ln if ln.strip() else ln for ln in lines]
    return "\n".join(out)


# ---------------------------------------------------------------- doc
def splice_doc(
    file_bytes: bytes, method: MethodInfo, code: str, language: Language
) -> SpliceResult:
    """Insert generated documentation. A response that echoes the focal
    function replaces the whole method region; a bare comment/docstring is
    inserted at the language-conventional position."""
    target = _anchor_method(file_bytes, method, language)
    echoed = parse_source(code.encode("utf-8"), language)
    if echoed.method_named(method.name) is not None:
        base = _base_indent(file_bytes, target.span[0])
        replacement = reindent(code.strip("\n"), base)
        if replacement.startswith(base):
            replacement = replacement[len(base):]  # span starts mid-line
        return _replace(
            file_bytes,
            target.span,
            replacement.encode("utf-8"),
            SpliceKind.DOC_INSERT,
        )

    doc = code.strip("\n").strip()
    if language is Language.PYTHON:
        indent = _base_indent(file_bytes, target.interior[0])
        block = reindent(doc, indent)
        insert_at = target.interior[0]
        line_start = file_bytes.rfind(b"\n", 0, insert_at) + 1
        if file_bytes[line_start:insert_at].strip():
            # single-line def `def f(): return 1` - insert before statement
            payload = doc + "\n" + indent
        else:
            block = block[len(indent):] if block.startswith(indent) else block
            payload = block + "\n" + indent
        return _replace(
            file_bytes, (insert_at, insert_at), payload.encode("utf-8"),
            SpliceKind.DOC_INSERT,
        )

    indent = _base_indent(file_bytes, target.span[0])
    block = reindent(doc, indent)
    if block.startswith(indent):
        block = block[len(indent):]
    payload = block + "\n" + indent
    at = target.span[0]
    return _replace(
        file_bytes, (at, at), payload.encode("utf-8"), SpliceKind.DOC_INSERT
    )


# ---------------------------------------------------------------- body
def splice_body(
    file_bytes: bytes, method: MethodInfo, body: str, language: Language
) -> SpliceResult:
    """Replace exactly the method body interior; indentation of the new
    body is re-based to the original body's leading indentation. An empty
    body is spliced verbatim (no silent `pass`)."""
    target = _anchor_method(file_bytes, method, language)
    lo, hi = target.interior
    original_interior = file_bytes[lo:hi].decode("utf-8", errors="replace")
    if body == original_interior:
        # identity splice: the file must come back byte-identical
        return _replace(file_bytes, (lo, hi), file_bytes[lo:hi],
                        SpliceKind.BODY_REPLACE)
    if body.strip() == "":
        return _replace(file_bytes, (lo, hi), body.encode("utf-8"),
                        SpliceKind.BODY_REPLACE)
    if language is Language.PYTHON:
        base = _base_indent(file_bytes, lo)
        new_body = reindent(body.strip("\n"), base)
        line_start = file_bytes.rfind(b"\n", 0, lo) + 1
        if file_bytes[line_start:lo].strip():
            # one-liner def: keep the body on the same line
            new_body = body.strip()
        elif new_body.startswith(base):
            new_body = new_body[len(base):]
    else:
        base = _interior_base_indent(original_interior, file_bytes, target)
        new_body = (
            "\n"
            + reindent(body.strip("\n"), base)
            + "\n"
            + _base_indent(file_bytes, target.span[0])
        )
    return _replace(
        file_bytes, (lo, hi), new_body.encode("utf-8"), SpliceKind.BODY_REPLACE
    )


def _interior_base_indent(interior: str, file_bytes: bytes, target) -> str:
    for ln in interior.splitlines():
        if ln.strip():
            return ln[: len(ln) - len(ln.lstrip())]
    return _base_indent(file_bytes, target.span[0]) + "    "


# ---------------------------------------------------------------- fix
WHOLE_FILE_OVERLAP = 0.9


def _line_overlap(candidate: str, original: str) -> float:
    orig_lines = {ln.strip() for ln in original.splitlines() if ln.strip()}
    if not orig_lines:
        return 0.0
    cand_lines = {ln.strip() for ln in candidate.splitlines() if ln.strip()}
    return len(orig_lines & cand_lines) / len(orig_lines)


def splice_fix(
    file_bytes: bytes, snippet_span: tuple[int, int], fixed_code: str,
    language: Language,
) -> SpliceResult:
    """Replace the snippet shown to the model with its fix; a response that
    overlaps >90% of the original file's lines replaces the whole file."""
    if not fixed_code.strip():
        raise AnchorNotFound("empty fix payload")
    lo, hi = snippet_span
    if lo < 0 or hi > len(file_bytes) or lo >= hi:
        raise AnchorNotFound(f"snippet span {snippet_span} does not anchor")
    original_text = file_bytes.decode("utf-8", errors="replace")
    if _line_overlap(fixed_code, original_text) > WHOLE_FILE_OVERLAP:
        return _replace(
            file_bytes,
            (0, len(file_bytes)),
            fixed_code.encode("utf-8"),
            SpliceKind.FIX_APPLY,
        )
    base = _base_indent(file_bytes, lo)
    replacement = reindent(fixed_code.strip("\n"), base)
    if replacement.startswith(base):
        replacement = replacement[len(base):]
    return _replace(
        file_bytes, (lo, hi), replacement.encode("utf-8"), SpliceKind.FIX_APPLY
    )


# ---------------------------------------------------------------- test
_JS_IMPORT = re.compile(
    r"^\s*(?:import\b[^;]*?from\s*['\"](?P<mod_i>[^'\"]+)['\"]"
    r"|(?:const|let|var)\s+.*?=\s*require\(\s*['\"](?P<mod_r>[^'\"]+)['\"]\s*\))",
)

GENERATED_TEST_SUFFIX = {
    Language.PYTHON: "_generated_test.py",
    Language.JAVA: "GeneratedTest.java",
    Language.CSHARP: "GeneratedTest.cs",
    Language.CPP: "_generated_test.cpp",
}


def append_test(
    focal_file_bytes: bytes,
    focal_rel_path: str,
    test_code: str,
    language: Language,
) -> SpliceResult:
    """JS/TS: append the generated test to the focal file (import errors are
    the dominant failure mode otherwise), deduplicating imports the file
    already has. Other languages: write a sibling test file per recipe
    convention."""
    if language in (Language.JAVASCRIPT, Language.TYPESCRIPT):
        existing = {
            m.group("mod_i") or m.group("mod_r")
            for m in (
                _JS_IMPORT.match(ln)
                for ln in focal_file_bytes.decode("utf-8", "replace").splitlines()
            )
            if m
        }
        kept: list[str] = []
        for ln in test_code.strip("\n").splitlines():
            m = _JS_IMPORT.match(ln)
            if m and (m.group("mod_i") or m.group("mod_r")) in existing:
                continue
            kept.append(ln)
        block = "\n".join(kept)
        at = len(focal_file_bytes)
        payload = (b"" if focal_file_bytes.endswith(b"\n") else b"\n")
        payload += b"\n" + block.encode("utf-8") + b"\n"
        return SpliceResult(
            new_file_contents=focal_file_bytes + payload,
            edited_span=(at, at),
            kind=SpliceKind.TEST_APPEND,
        )

    stem = Path(focal_rel_path).stem
    if language is Language.JAVA:
        parts = list(Path(focal_rel_path).parts)
        try:
            i = parts.index("main")
            parts[i] = "test"
            target = str(Path(*parts).with_name(f"{stem}GeneratedTest.java"))
        except ValueError:
            target = str(
                Path(focal_rel_path).with_name(f"{stem}GeneratedTest.java")
            )
    elif language is Language.PYTHON:
        target = str(
            Path(focal_rel_path).with_name(f"test_{stem}_generated.py")
        )
    else:
        suffix = GENERATED_TEST_SUFFIX[language]
        target = str(Path(focal_rel_path).with_name(f"{stem}{suffix}"))
    return SpliceResult(
        new_file_contents=(test_code.strip("\n") + "\n").encode("utf-8"),
        edited_span=(0, 0),
        kind=SpliceKind.TEST_APPEND,
        target_path=target,
    )


TRIVIAL_TEST = {
    Language.JAVASCRIPT: (
        "\n;(function () {\n"
        "  if (true !== true) { throw new Error('trivial assertion failed'); }\n"
        "})();\n"
    ),
    Language.TYPESCRIPT: (
        "\n;(function () {\n"
        "  if ((true as boolean) !== true) { throw new Error('trivial assertion failed'); }\n"
        "})();\n"
    ),
}


def append_trivial_test(focal_file_bytes: bytes, language: Language) -> bytes:
    """The reliability-gate probe: a test that just asserts true, appended
    to the focal file."""
    block = TRIVIAL_TEST[language]
    return focal_file_bytes + block.encode("utf-8")
