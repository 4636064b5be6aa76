"""Byte-oriented lexer for the brace-delimited languages.

Operates directly on the raw file bytes so token offsets are byte offsets
(all syntax characters are ASCII; multibyte UTF-8 sequences only ever occur
inside identifiers, strings, and comments). Comments are collected as
trivia, everything else as significant tokens. Lexical damage — an
unterminated string, comment, or raw literal — is recorded as an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

IDENT_START = frozenset(
    b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_$"
)
IDENT_CONT = frozenset(
    b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_$"
)
DIGITS = frozenset(b"0123456789")

# Multi-byte operators the scanner matches on; everything else lexes as
# single-character punctuation.
COMPOUND_OPS = (b"=>", b"::", b"->")

# After these token texts a '/' starts a regex literal rather than division.
_REGEX_PRECEDERS = {
    "return", "typeof", "case", "in", "of", "instanceof", "new", "delete",
    "void", "do", "else", "yield", "await", "throw",
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | str | tstr | char | regex | punct | preproc
    text: str
    start: int
    end: int
    line: int


@dataclass(frozen=True)
class Trivia:
    kind: str  # line | block
    text: str
    start: int
    end: int
    line: int


@dataclass
class LexResult:
    tokens: list[Token] = field(default_factory=list)
    trivia: list[Trivia] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


def _decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


class Lexer:
    def __init__(
        self,
        *,
        template_literals: bool = False,
        regex_literals: bool = False,
        verbatim_strings: bool = False,
        raw_strings: bool = False,
        preprocessor: bool = False,
        char_literals: bool = True,
    ) -> None:
        self.template_literals = template_literals
        self.regex_literals = regex_literals
        self.verbatim_strings = verbatim_strings
        self.raw_strings = raw_strings
        self.preprocessor = preprocessor
        self.char_literals = char_literals

    def lex(self, src: bytes) -> LexResult:
        out = LexResult()
        i = 0
        n = len(src)
        line = 1
        at_line_start = True

        def emit(kind: str, start: int, end: int, tok_line: int) -> None:
            out.tokens.append(
                Token(kind, _decode(src[start:end]), start, end, tok_line)
            )

        while i < n:
            c = src[i]
            if c == 0x0A:  # \n
                line += 1
                at_line_start = True
                i += 1
                continue
            if c in b" \t\r\f\v":
                i += 1
                continue

            # Preprocessor directive: '#' first on a line, with continuations.
            if self.preprocessor and c == 0x23 and at_line_start:
                start, start_line = i, line
                while i < n:
                    if src[i] == 0x0A:
                        if i > start and src[i - 1] == 0x5C:  # backslash
                            line += 1
                            i += 1
                            continue
                        break
                    i += 1
                emit("preproc", start, i, start_line)
                at_line_start = False
                continue
            at_line_start = False

            # Comments.
            if c == 0x2F and i + 1 < n:  # '/'
                nxt = src[i + 1]
                if nxt == 0x2F:  # //
                    start, start_line = i, line
                    while i < n and src[i] != 0x0A:
                        i += 1
                    out.trivia.append(
                        Trivia("line", _decode(src[start:i]), start, i, start_line)
                    )
                    continue
                if nxt == 0x2A:  # /*
                    start, start_line = i, line
                    i += 2
                    closed = False
                    while i < n:
                        if src[i] == 0x0A:
                            line += 1
                        elif src[i] == 0x2A and i + 1 < n and src[i + 1] == 0x2F:
                            i += 2
                            closed = True
                            break
                        i += 1
                    if not closed:
                        out.errors.append(f"unterminated block comment at line {start_line}")
                    out.trivia.append(
                        Trivia("block", _decode(src[start:i]), start, i, start_line)
                    )
                    continue
                if self.regex_literals and self._regex_can_start(out.tokens):
                    end, newline_count = self._scan_regex(src, i)
                    if end > 0:
                        emit("regex", i, end, line)
                        line += newline_count
                        i = end
                        continue

            # C++ raw string R"delim( ... )delim".
            if (
                self.raw_strings
                and c == 0x52  # 'R'
                and i + 1 < n
                and src[i + 1] == 0x22
                and (i == 0 or src[i - 1] not in IDENT_CONT)
            ):
                start, start_line = i, line
                j = i + 2
                while j < n and src[j] not in b"(\n" and j - i < 20:
                    j += 1
                if j < n and src[j] == 0x28:
                    delim = src[i + 2 : j]
                    closer = b")" + delim + b'"'
                    k = src.find(closer, j + 1)
                    if k < 0:
                        out.errors.append(f"unterminated raw string at line {start_line}")
                        i = n
                        emit("str", start, i, start_line)
                        continue
                    end = k + len(closer)
                    line += src.count(b"\n", start, end)
                    emit("str", start, end, start_line)
                    i = end
                    continue

            # C# verbatim / interpolated strings: @"...", $"...", $@"...".
            if self.verbatim_strings and c in b"@$" and i + 1 < n:
                j = i
                saw_at = saw_dollar = False
                while j < n and src[j] in b"@$":
                    saw_at = saw_at or src[j] == 0x40
                    saw_dollar = saw_dollar or src[j] == 0x24
                    j += 1
                if j < n and src[j] == 0x22:
                    start, start_line = i, line
                    end, nl, err = self._scan_cs_string(src, j, saw_at, saw_dollar)
                    if err:
                        out.errors.append(f"unterminated string at line {start_line}")
                    emit("str", start, end, start_line)
                    line += nl
                    i = end
                    continue

            # Template literal.
            if self.template_literals and c == 0x60:  # backtick
                start, start_line = i, line
                end, nl, err = self._scan_template(src, i)
                if err:
                    out.errors.append(f"unterminated template literal at line {start_line}")
                emit("tstr", start, end, start_line)
                line += nl
                i = end
                continue

            # Plain strings and char literals.
            if c == 0x22 or (c == 0x27 and (self.char_literals or True)):
                quote = c
                start, start_line = i, line
                i += 1
                terminated = False
                while i < n:
                    b = src[i]
                    if b == 0x5C and i + 1 < n:  # backslash escape
                        i += 2
                        continue
                    if b == quote:
                        i += 1
                        terminated = True
                        break
                    if b == 0x0A:
                        break
                    i += 1
                if not terminated:
                    out.errors.append(f"unterminated string at line {start_line}")
                emit("char" if quote == 0x27 and self.char_literals else "str",
                     start, i, start_line)
                continue

            # Numbers.
            if c in DIGITS or (c == 0x2E and i + 1 < n and src[i + 1] in DIGITS):
                start = i
                i += 1
                while i < n and (
                    src[i] in IDENT_CONT
                    or src[i] in b"."
                    or (src[i] in b"+-" and src[i - 1] in b"eEpP")
                    or src[i] == 0x27  # C++14 digit separator
                ):
                    i += 1
                emit("num", start, i, line)
                continue

            # Identifiers (any non-ASCII byte counts as an identifier byte).
            if c in IDENT_START or c >= 0x80:
                start = i
                i += 1
                while i < n and (src[i] in IDENT_CONT or src[i] >= 0x80):
                    i += 1
                emit("ident", start, i, line)
                continue

            # Punctuation, compound operators first.
            matched = False
            for op in COMPOUND_OPS:
                if src.startswith(op, i):
                    emit("punct", i, i + len(op), line)
                    i += len(op)
                    matched = True
                    break
            if not matched:
                emit("punct", i, i + 1, line)
                i += 1

        return out

    def _regex_can_start(self, tokens: list[Token]) -> bool:
        if not tokens:
            return True
        prev = tokens[-1]
        if prev.kind == "ident":
            return prev.text in _REGEX_PRECEDERS
        if prev.kind == "punct":
            return prev.text not in (")", "]")
        return False  # num, str, tstr, regex -> division

    def _scan_regex(self, src: bytes, start: int) -> tuple[int, int]:
        """Return (end, newlines) for a regex literal, or (-1, 0) if the
        slash cannot be a regex (hits a newline first)."""
        i = start + 1
        n = len(src)
        in_class = False
        while i < n:
            b = src[i]
            if b == 0x5C and i + 1 < n:
                i += 2
                continue
            if b == 0x0A:
                return (-1, 0)
            if b == 0x5B:  # [
                in_class = True
            elif b == 0x5D:  # ]
                in_class = False
            elif b == 0x2F and not in_class:  # closing /
                i += 1
                while i < n and src[i] in IDENT_CONT:
                    i += 1
                return (i, 0)
            i += 1
        return (-1, 0)

    def _scan_template(self, src: bytes, start: int) -> tuple[int, int, bool]:
        i = start + 1
        n = len(src)
        nl = 0
        while i < n:
            b = src[i]
            if b == 0x5C and i + 1 < n:
                i += 2
                continue
            if b == 0x0A:
                nl += 1
            elif b == 0x60:
                return (i + 1, nl, False)
            elif b == 0x24 and i + 1 < n and src[i + 1] == 0x7B:  # ${
                depth = 1
                i += 2
                while i < n and depth:
                    if src[i] == 0x0A:
                        nl += 1
                    elif src[i] == 0x7B:
                        depth += 1
                    elif src[i] == 0x7D:
                        depth -= 1
                    elif src[i] == 0x60:  # nested template
                        end, sub_nl, err = self._scan_template(src, i)
                        nl += sub_nl
                        if err:
                            return (end, nl, True)
                        i = end
                        continue
                    i += 1
                continue
            i += 1
        return (n, nl, True)

    def _scan_cs_string(
        self, src: bytes, quote_pos: int, verbatim: bool, interpolated: bool
    ) -> tuple[int, int, bool]:
        i = quote_pos + 1
        n = len(src)
        nl = 0
        while i < n:
            b = src[i]
            if b == 0x22:
                if verbatim and i + 1 < n and src[i + 1] == 0x22:
                    i += 2
                    continue
                return (i + 1, nl, False)
            if b == 0x5C and not verbatim and i + 1 < n:
                i += 2
                continue
            if b == 0x0A:
                if not verbatim:
                    return (i, nl, True)
                nl += 1
            if interpolated and b == 0x7B:
                if i + 1 < n and src[i + 1] == 0x7B:
                    i += 2
                    continue
                depth = 1
                i += 1
                while i < n and depth:
                    if src[i] == 0x7B:
                        depth += 1
                    elif src[i] == 0x7D:
                        depth -= 1
                    elif src[i] == 0x0A:
                        nl += 1
                    i += 1
                continue
            i += 1
        return (n, nl, True)


LEXERS: dict[str, Lexer] = {
    "javascript": Lexer(template_literals=True, regex_literals=True, char_literals=False),
    "typescript": Lexer(template_literals=True, regex_literals=True, char_literals=False),
    "java": Lexer(),
    "csharp": Lexer(verbatim_strings=True),
    "cpp": Lexer(raw_strings=True, preprocessor=True),
}
