"""Per-language source parsing: method enumeration, spans, syntax checks.

Python files go through the stdlib ast module; JS/TS/Java/C#/C++ go through
the lexer + scope scanner in this package. parse_ok holds exactly when the
scanner recorded zero error nodes.
"""

from __future__ import annotations

import io
import textwrap
import tokenize
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..core import Language, MethodInfo
from ..errors import UnsupportedLanguage
from .clike import ClikeScanner, Param, RawMethod
from .lexer import LexResult, Token, Trivia
from .python import scan_python

__all__ = [
    "ParsedFile",
    "ParsedMethod",
    "parse_file",
    "parse_source",
    "check_syntax",
    "compare_tokens",
    "line_byte_span",
    "Param",
]


@dataclass
class ParsedMethod:
    """One method definition with every span the harness needs.

    ``span`` covers the whole definition (signature through body end);
    ``interior`` is the body region used for body replacement; ``sig_end``
    marks where the body delimiter starts.
    """

    file_path: str
    name: str
    span: tuple[int, int]
    sig_end: int
    interior: tuple[int, int]
    params: list[Param]
    class_name: Optional[str]
    returns_value: bool
    is_ctor: bool
    nested: bool
    decl_line: int
    docstring_text: Optional[str] = None
    doc_span: Optional[tuple[int, int]] = None
    _source: bytes = b""

    def text(self) -> str:
        return self._source[self.span[0] : self.span[1]].decode(
            "utf-8", errors="replace"
        )

    def signature_text(self) -> str:
        return (
            self._source[self.span[0] : self.sig_end]
            .decode("utf-8", errors="replace")
            .strip()
        )

    def interior_text(self) -> str:
        return self._source[self.interior[0] : self.interior[1]].decode(
            "utf-8", errors="replace"
        )

    def line_count(self) -> int:
        chunk = self._source[self.span[0] : self.span[1]]
        if not chunk:
            return 0
        return chunk.count(b"\n") + (0 if chunk.endswith(b"\n") else 1)

    def to_info(self) -> MethodInfo:
        return MethodInfo(
            file_path=self.file_path,
            name=self.name,
            signature_text=self.signature_text(),
            body_span=self.span,
            line_count=self.line_count(),
            docstring_text=self.docstring_text,
        )


@dataclass
class ParsedFile:
    path: str
    language: Language
    source_bytes: bytes
    methods: list[ParsedMethod] = field(default_factory=list)
    parse_ok: bool = True
    error_node_count: int = 0
    errors: list[str] = field(default_factory=list)

    @property
    def method_list(self) -> list[MethodInfo]:
        return [m.to_info() for m in self.methods]

    def method_named(self, name: str) -> Optional[ParsedMethod]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def smallest_method_containing(self, offset: int) -> Optional[ParsedMethod]:
        best = None
        for m in self.methods:
            if m.span[0] <= offset < m.span[1]:
                if best is None or (m.span[1] - m.span[0]) < (
                    best.span[1] - best.span[0]
                ):
                    best = m
        return best


def parse_source(
    source: bytes, language: Language, path: str = "<memory>"
) -> ParsedFile:
    if language is Language.PYTHON:
        raws, errors = scan_python(source)
        trivia: list[Trivia] = []
    elif language.value in ("javascript", "typescript", "java", "csharp", "cpp"):
        scanner = ClikeScanner(language.value)
        raws, errors, lexed = scanner.scan(source)
        trivia = lexed.trivia
        _attach_doc_comments(raws, trivia, source)
    else:  # pragma: no cover - Language enum is closed
        raise UnsupportedLanguage(language)

    methods = [
        ParsedMethod(
            file_path=path,
            name=r.name,
            span=(r.start, r.end),
            sig_end=r.sig_end,
            interior=r.interior,
            params=r.params,
            class_name=r.class_name,
            returns_value=bool(r.returns_value),
            is_ctor=r.is_ctor,
            nested=r.nested,
            decl_line=r.decl_line,
            docstring_text=r.docstring,
            doc_span=r.doc_span,
            _source=source,
        )
        for r in raws
    ]
    return ParsedFile(
        path=path,
        language=language,
        source_bytes=source,
        methods=methods,
        parse_ok=not errors,
        error_node_count=len(errors),
        errors=errors,
    )


def parse_file(path: str | Path, language: Language, rel_path: str | None = None) -> ParsedFile:
    data = Path(path).read_bytes()
    return parse_source(data, language, rel_path or str(path))


def check_syntax(source: bytes, language: Language) -> bool:
    return parse_source(source, language).parse_ok


def _attach_doc_comments(
    raws: list[RawMethod], trivia: list[Trivia], source: bytes
) -> None:
    """Attach the block comment (or contiguous /// run) immediately
    preceding each method signature."""
    if not trivia:
        return
    for m in raws:
        best: Optional[tuple[int, int, str]] = None
        run: list[Trivia] = []
        for tv in trivia:
            if tv.end > m.start:
                break
            gap = source[tv.end : m.start]
            if tv.kind == "block":
                if _only_layout(gap):
                    best = (tv.start, tv.end, tv.text)
                run = []
            elif tv.kind == "line" and (
                tv.text.startswith("///") or tv.text.startswith("//!")
            ):
                if run and not _only_layout(source[run[-1].end : tv.start]):
                    run = []
                run.append(tv)
                if _only_layout(gap):
                    best = (run[0].start, tv.end,
                            "\n".join(t.text for t in run))
            else:
                run = []
        if best is not None:
            m.doc_span = (best[0], best[1])
            m.docstring = best[2]


def _only_layout(gap: bytes) -> bool:
    """True when the byte gap holds only whitespace and decorator-ish lines
    (bare annotations/attributes between a doc comment and the signature)."""
    text = gap.decode("utf-8", errors="replace")
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("@") and "(" not in stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            continue
        return False
    return True


def line_byte_span(source: bytes, line: int) -> tuple[int, int]:
    """Half-open byte span of a 1-based line number."""
    start = 0
    current = 1
    for i, b in enumerate(source):
        if current == line:
            start = i if i == 0 or source[i - 1] == 0x0A else start
            break
        if b == 0x0A:
            current += 1
            start = i + 1
    else:
        if current < line:
            return (len(source), len(source))
    end = source.find(b"\n", start)
    if end < 0:
        end = len(source)
    return (start, end)


_PY_DROP = frozenset(
    (
        tokenize.COMMENT,
        tokenize.NL,
        tokenize.NEWLINE,
        tokenize.INDENT,
        tokenize.DEDENT,
        tokenize.ENCODING,
        tokenize.ENDMARKER,
    )
)


def compare_tokens(snippet: str, language: Language) -> Optional[list[str]]:
    """Token stream of a code snippet for change detection: comments and
    pure layout dropped. None when the snippet cannot be tokenized."""
    snippet = textwrap.dedent(snippet)
    if language is Language.PYTHON:
        try:
            toks = list(tokenize.generate_tokens(io.StringIO(snippet).readline))
        except (tokenize.TokenError, IndentationError, SyntaxError):
            return None
        return [t.string for t in toks if t.type not in _PY_DROP and t.string]
    scanner = ClikeScanner(language.value)
    _, _, lexed = scanner.scan(snippet.encode("utf-8"))
    return [t.text for t in lexed.tokens]
