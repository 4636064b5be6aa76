"""Method extraction for the brace-delimited languages.

A single pass over the token stream tracks bracket balance and a scope
stack (class body, function body, object literal, plain block) and records
every named function/method definition with byte spans. The scanner favors
precision: anonymous callbacks and exotic declarator forms are skipped
rather than misattributed.

Known gaps, accepted deliberately: C++ constructor member-init lists using
brace initializers, methods of Java anonymous classes assigned through
complex expressions, and TS object-type literals in return position can
hide a definition from the scanner. None of these affect syntax checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .lexer import LEXERS, LexResult, Token

CONTROL_KEYWORDS = {
    "if", "for", "while", "switch", "catch", "synchronized", "using",
    "lock", "foreach", "do", "else", "try", "finally", "return", "with",
}

CLASS_DECL_KEYWORDS = {"class", "struct", "interface", "enum", "record", "union"}

JSTS_METHOD_MODIFIERS = {
    "get", "set", "static", "async", "*", "public", "private", "protected",
    "readonly", "abstract", "override", "accessor",
}

CPP_TRAILING_SPECIFIERS = {"const", "noexcept", "override", "final", "mutable", "&", "&&"}

PRIMITIVE_TYPES = {
    "void", "int", "long", "short", "byte", "char", "boolean", "bool",
    "float", "double", "string", "object", "var", "auto", "decimal",
    "uint", "ulong", "ushort", "sbyte", "size_t", "unsigned", "signed",
}

_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {v: k for k, v in _OPEN.items()}


@dataclass
class Param:
    text: str
    name: Optional[str]
    annotated: bool
    type_text: str = ""


@dataclass
class RawMethod:
    name: str
    start: int
    end: int
    sig_end: int
    interior: tuple[int, int]
    params: list[Param] = field(default_factory=list)
    class_name: Optional[str] = None
    returns_value: Optional[bool] = None
    is_ctor: bool = False
    nested: bool = False
    decl_line: int = 1
    token_range: tuple[int, int] = (0, 0)
    docstring: Optional[str] = None
    doc_span: Optional[tuple[int, int]] = None


@dataclass
class _Scope:
    kind: str  # class | object | function | namespace | block
    open_idx: int
    name: Optional[str] = None
    method: Optional[RawMethod] = None


class ClikeScanner:
    def __init__(self, language: str):
        self.language = language
        self.jsts = language in ("javascript", "typescript")
        # models frequently emit TS-annotated headers in .js responses;
        # the method finder tolerates them for both dialects
        self.ts = self.jsts
        self.java = language == "java"
        self.cs = language == "csharp"
        self.cpp = language == "cpp"

    # ------------------------------------------------------------------
    def scan(self, src: bytes) -> tuple[list[RawMethod], list[str], LexResult]:
        lexed = LEXERS[self.language].lex(src)
        errors = list(lexed.errors)
        toks = lexed.tokens
        self.toks = toks
        self.match = self._match_brackets(toks, errors)
        if self.jsts:
            self._check_import_clauses(toks, errors)

        methods: list[RawMethod] = []
        scopes: list[_Scope] = []
        pending_arrow: Optional[RawMethod] = None

        i = 0
        n = len(toks)
        while i < n:
            tok = toks[i]
            if tok.kind == "punct" and tok.text == "=>" and (self.jsts or self.cs):
                builder = self._arrow_header(i, scopes)
                if builder is not None:
                    if i + 1 < n and toks[i + 1].text == "{":
                        pending_arrow = builder
                    else:
                        end_idx = self._scan_expr_end(i + 1)
                        builder.end = toks[end_idx].end if end_idx < n else tok.end
                        builder.interior = (tok.end, builder.end)
                        builder.token_range = (builder.token_range[0], end_idx)
                        methods.append(builder)
                i += 1
                continue

            if tok.kind == "punct" and tok.text == "{":
                scope = self._classify_open(i, scopes, pending_arrow)
                pending_arrow = None
                scopes.append(scope)
                i += 1
                continue

            if tok.kind == "punct" and tok.text == "}":
                if scopes:
                    scope = scopes.pop()
                    if scope.method is not None:
                        m = scope.method
                        m.end = tok.end
                        m.interior = (toks[scope.open_idx].end, tok.start)
                        m.token_range = (m.token_range[0], i)
                        methods.append(m)
                i += 1
                continue

            i += 1

        methods.sort(key=lambda m: (m.start, m.end))
        self._mark_nested(methods)
        self._fill_returns(methods, toks)
        return methods, errors, lexed

    # ------------------------------------------------------------------
    def _match_brackets(
        self, toks: list[Token], errors: list[str]
    ) -> dict[int, int]:
        match: dict[int, int] = {}
        stack: list[tuple[str, int]] = []
        for i, tok in enumerate(toks):
            if tok.kind != "punct":
                continue
            if tok.text in _OPEN:
                stack.append((tok.text, i))
            elif tok.text in _CLOSE:
                if not stack:
                    errors.append(f"unmatched '{tok.text}' at line {tok.line}")
                    continue
                opener, oidx = stack.pop()
                if _OPEN[opener] != tok.text:
                    errors.append(
                        f"mismatched '{opener}' closed by '{tok.text}' at line {tok.line}"
                    )
                else:
                    match[i] = oidx
        for opener, oidx in stack:
            errors.append(f"unclosed '{opener}' at line {toks[oidx].line}")
        return match

    def _check_import_clauses(self, toks: list[Token], errors: list[str]) -> None:
        """JS/TS import/export specifier lists admit only identifiers and
        commas; a stray statement inside one (the classic broken multi-line
        import) is a syntax error a bracket counter cannot see."""
        n = len(toks)
        for i, tok in enumerate(toks):
            if tok.kind != "ident" or tok.text not in ("import", "export"):
                continue
            prev = toks[i - 1] if i > 0 else None
            if prev is not None and not (
                prev.kind == "punct" and prev.text in (";", "}", "{")
                or prev.kind == "ident" and prev.text == "export"
            ):
                continue
            j = i + 1
            if j < n and toks[j].kind == "ident" and toks[j].text == "type":
                j += 1
            if j >= n or toks[j].text != "{":
                continue
            j += 1
            while j < n:
                t = toks[j]
                if t.kind == "punct" and t.text == "}":
                    break
                if t.kind == "punct" and t.text == ",":
                    j += 1
                    continue
                if t.kind == "ident" and t.text != "import":
                    j += 1
                    continue
                errors.append(
                    f"malformed import clause at line {t.line}"
                )
                break

    # ------------------------------------------------------------------
    def _classify_open(
        self,
        idx: int,
        scopes: list[_Scope],
        pending_arrow: Optional[RawMethod],
    ) -> _Scope:
        toks = self.toks
        prev = toks[idx - 1] if idx > 0 else None

        if prev is not None and prev.text == "=>" and pending_arrow is not None:
            pending_arrow.token_range = (pending_arrow.token_range[0], idx)
            return _Scope("function", idx, pending_arrow.name, pending_arrow)

        class_decl = self._class_decl_lookback(idx)
        if class_decl is not None:
            kind, name = class_decl
            return _Scope(kind, idx, name)

        header = self._function_header(idx, scopes)
        if header is not None:
            return _Scope("function", idx, header.name if header.name else None,
                          header if header.name else None)

        if prev is None:
            return _Scope("block", idx)
        top = scopes[-1].kind if scopes else "top"
        if prev.kind == "punct" and prev.text in ("=", "(", ",", "[", ":", "=>", "?"):
            return _Scope("object", idx)
        if prev.kind == "ident" and prev.text in ("return", "in", "of", "typeof"):
            return _Scope("object", idx)
        if self.cpp and prev.kind in ("ident", "num", "str"):
            return _Scope("object", idx)  # uniform initialization
        return _Scope("block", idx)

    def _class_decl_lookback(self, idx: int) -> Optional[tuple[str, str]]:
        """Recognize `class X ... {`, `namespace N {`, `new X(...) {` etc."""
        toks = self.toks
        j = idx - 1
        steps = 0
        name: Optional[str] = None
        while j >= 0 and steps < 60:
            t = toks[j]
            if t.kind == "punct":
                if t.text in (";", "{", "}"):
                    return None
                if t.text == ")":
                    # java anonymous class: new X(...) {
                    p = self.match.get(j)
                    if self.java and p is not None and p >= 2:
                        nm = toks[p - 1]
                        if nm.kind == "ident" and self._preceded_by_new(p - 1):
                            return ("class", nm.text)
                    return None
                if t.text not in ("<", ">", ",", ".", ":", "::", "&", "[", "]", "?", "|"):
                    return None
            elif t.kind == "ident":
                if t.text in CLASS_DECL_KEYWORDS:
                    if t.text == "record" and not (self.java or self.cs):
                        return None
                    nm = toks[j + 1].text if j + 1 < len(toks) and toks[j + 1].kind == "ident" else ""
                    return ("class", nm)
                if t.text in ("namespace", "module") and (self.cpp or self.cs or self.ts):
                    nm = toks[j + 1].text if j + 1 < len(toks) and toks[j + 1].kind == "ident" else ""
                    return ("namespace", nm)
            elif t.kind in ("str", "num", "preproc"):
                return None
            j -= 1
            steps += 1
        return None

    def _preceded_by_new(self, name_idx: int) -> bool:
        j = name_idx - 1
        toks = self.toks
        while j >= 0 and toks[j].kind == "punct" and toks[j].text == ".":
            j -= 2
        return j >= 0 and toks[j].kind == "ident" and toks[j].text == "new"

    # ------------------------------------------------------------------
    def _function_header(
        self, brace_idx: int, scopes: list[_Scope]
    ) -> Optional[RawMethod]:
        """Try to read tokens before `{` as a function/method header ending
        in a parameter list."""
        toks = self.toks
        r = self._find_params_close(brace_idx)
        if r is None:
            return None
        p = self.match.get(r)
        if p is None or p == 0:
            return None

        top = scopes[-1].kind if scopes else "top"
        class_name = None
        for s in reversed(scopes):
            if s.kind == "class":
                class_name = s.name
                break

        name_idx = self._name_index_before(p)
        if name_idx is None:
            # anonymous function expression or lambda
            if self.jsts and toks[p - 1].text in ("function", "*"):
                return self._jsts_function_keyword(brace_idx, p, r)
            if self.cpp and toks[p - 1].text == "]":
                return self._cpp_lambda(brace_idx, p, r)
            return None
        name_tok = toks[name_idx]
        if name_tok.text in CONTROL_KEYWORDS:
            return None

        if self.jsts:
            before = toks[name_idx - 1] if name_idx > 0 else None
            if before is not None and before.text in ("function", "*"):
                return self._jsts_function_keyword(brace_idx, p, r)
            in_class = scopes and scopes[-1].kind in ("class", "object")
            if not in_class:
                return None
            if before is not None and before.kind == "punct" and before.text == ".":
                return None
            decl_start = self._walk_modifiers_jsts(name_idx)
            m = self._build(name_tok.text, decl_start, brace_idx, p, r)
            m.class_name = class_name if scopes[-1].kind == "class" else None
            m.is_ctor = name_tok.text == "constructor"
            m.returns_value = self._ts_return_annotation(r, brace_idx)
            return m

        if self.java or self.cs:
            if top not in ("class", "top") and not (
                self.cs and top == "function"
            ):
                return None
            before = toks[name_idx - 1] if name_idx > 0 else None
            if before is not None and before.kind == "punct" and before.text == ".":
                return None
            if self._preceded_by_new(name_idx):
                return None
            if top == "top" or (self.cs and top == "function"):
                # fragments / local functions require a leading type token
                if before is None or not (
                    before.kind == "ident" or before.text in (">", "]")
                ):
                    return None
            decl_idx = self._walk_declaration_back(name_idx)
            m = self._build(name_tok.text, decl_idx, brace_idx, p, r)
            m.class_name = class_name
            m.is_ctor = class_name is not None and name_tok.text == class_name
            m.returns_value = self._declared_returns(decl_idx, name_idx, m.is_ctor)
            return m

        if self.cpp:
            if top not in ("top", "namespace", "class"):
                return None
            name, head_idx, is_ctor = self._cpp_name(name_idx, class_name)
            if name is None:
                return None
            decl_idx = self._walk_declaration_back(head_idx)
            m = self._build(name, decl_idx, brace_idx, p, r)
            m.class_name = class_name
            m.is_ctor = is_ctor
            m.returns_value = self._declared_returns(decl_idx, head_idx, is_ctor)
            return m
        return None

    def _find_params_close(self, brace_idx: int) -> Optional[int]:
        """Find the `)` of the parameter list, skipping return annotations,
        throws clauses, C++ trailing specifiers, and member-init lists."""
        toks = self.toks
        j = brace_idx - 1
        if j < 0:
            return None
        if self.cpp:
            return self._cpp_params_close(brace_idx)
        if toks[j].text == ")":
            return j
        if self.ts:
            # `): Type {` return annotation
            k, steps = j, 0
            while k >= 0 and steps < 40:
                t = toks[k]
                if t.text == ")":
                    if k + 1 < len(toks) and toks[k + 1].text == ":":
                        return k
                    return None
                if t.text in (";", "{", "}"):
                    return None
                if t.kind == "punct" and t.text not in (
                    "<", ">", ",", ".", "[", "]", "|", "&", ":", "?", "=>",
                ):
                    return None
                k -= 1
                steps += 1
            return None
        if self.java:
            # `) throws A, B {`
            k, steps, saw_throws = j, 0, False
            while k >= 0 and steps < 30:
                t = toks[k]
                if t.text == ")":
                    return k if saw_throws else None
                if t.kind == "ident":
                    saw_throws = saw_throws or t.text == "throws"
                elif t.text not in (",", "."):
                    return None
                k -= 1
                steps += 1
            return None
        if self.cs:
            # `) where T : IFoo {` generic constraints
            k, steps, saw_where = j, 0, False
            while k >= 0 and steps < 40:
                t = toks[k]
                if t.text == ")":
                    return k if saw_where else None
                if t.kind == "ident":
                    saw_where = saw_where or t.text == "where"
                elif t.text not in (",", ":", ".", "<", ">"):
                    return None
                k -= 1
                steps += 1
            return None
        return None

    def _cpp_params_close(self, brace_idx: int) -> Optional[int]:
        toks = self.toks
        j = brace_idx - 1
        steps = 0
        while j >= 0 and steps < 20 and (
            (toks[j].kind == "ident" and toks[j].text in CPP_TRAILING_SPECIFIERS)
            or toks[j].text in ("&", "&&")
        ):
            j -= 1
            steps += 1
        if j < 0:
            return None
        if toks[j].text == ")":
            r = j
            p = self.match.get(r)
            if p is None:
                return None
            # A `)` right before the body may close a member-init argument
            # (`Foo() : x_(x) {`) rather than the parameter list.
            ni = self._name_index_before(p)
            if ni is not None:
                head = ni
                k = head - 1
                while k >= 1 and toks[k].text == "::" and toks[k - 1].kind == "ident":
                    head = k - 1
                    k = head - 1
                before = toks[head - 1] if head > 0 else None
                if before is not None and before.text in (",", ":"):
                    is_access = (
                        before.text == ":"
                        and head >= 2
                        and toks[head - 2].text in ("public", "private", "protected")
                    )
                    if not is_access:
                        return self._cpp_rescan_init_list(r)
            return r
        # trailing return type: `) -> T {`
        k, steps = j, 0
        while k >= 0 and steps < 30:
            t = toks[k]
            if t.text == "->":
                k2 = k - 1
                while k2 >= 0 and (
                    (toks[k2].kind == "ident" and toks[k2].text in CPP_TRAILING_SPECIFIERS)
                    or toks[k2].text in ("&", "&&")
                ):
                    k2 -= 1
                if k2 >= 0 and toks[k2].text == ")":
                    return k2
                return None
            if t.text in (";", "{", "}"):
                return None
            if t.kind == "punct" and t.text not in (
                "<", ">", ",", ".", "::", "*", "&", "[", "]",
            ):
                return None
            k -= 1
            steps += 1
        return None

    def _cpp_rescan_init_list(self, r0: int) -> Optional[int]:
        """Scan back across a constructor member-init list to the params
        `)` that precedes the `:`."""
        toks = self.toks
        depth = 0
        k = r0
        steps = 0
        while k >= 0 and steps < 200:
            t = toks[k]
            if t.text == ")":
                depth += 1
            elif t.text == "(":
                depth -= 1
            elif t.text == ":" and depth == 0:
                if k >= 1 and toks[k - 1].text in ("public", "private", "protected"):
                    return None
                k2 = k - 1
                while k2 >= 0 and (
                    (toks[k2].kind == "ident" and toks[k2].text in CPP_TRAILING_SPECIFIERS)
                    or toks[k2].text in ("&", "&&")
                ):
                    k2 -= 1
                if k2 >= 0 and toks[k2].text == ")":
                    return k2
                return None
            elif t.text in (";", "{", "}"):
                return None
            k -= 1
            steps += 1
        return None

    def _name_index_before(self, paren_idx: int) -> Optional[int]:
        toks = self.toks
        j = paren_idx - 1
        if j < 0:
            return None
        if toks[j].text == ">":
            depth = 1
            j -= 1
            while j >= 0 and depth:
                if toks[j].text == ">":
                    depth += 1
                elif toks[j].text == "<":
                    depth -= 1
                j -= 1
        if j >= 0 and toks[j].kind == "ident":
            return j
        return None

    def _jsts_function_keyword(
        self, brace_idx: int, p: int, r: int
    ) -> Optional[RawMethod]:
        toks = self.toks
        j = p - 1
        name = None
        name_idx = None
        if toks[j].kind == "ident" and toks[j].text != "function":
            name = toks[j].text
            name_idx = j
            j -= 1
        if j >= 0 and toks[j].text == "*":
            j -= 1
        if j < 0 or toks[j].text != "function":
            return None
        fn_idx = j
        if j > 0 and toks[j - 1].text == "async":
            fn_idx = j - 1
        if name is None:
            # function expression: look for `name =` / `name:` before it
            name, fn_idx2 = self._assignment_name(fn_idx)
            if fn_idx2 is not None:
                fn_idx = fn_idx2
        if name is None:
            return None
        m = self._build(name, fn_idx, brace_idx, p, r)
        m.returns_value = self._ts_return_annotation(r, brace_idx)
        return m

    def _cpp_lambda(self, brace_idx: int, p: int, r: int) -> Optional[RawMethod]:
        toks = self.toks
        close_bracket = p - 1
        open_bracket = self.match.get(close_bracket)
        if open_bracket is None:
            return None
        name, decl_idx = self._assignment_name(open_bracket)
        if name is None:
            return None
        m = self._build(name, decl_idx, brace_idx, p, r)
        return m

    def _assignment_name(self, idx: int) -> tuple[Optional[str], Optional[int]]:
        """Resolve `const NAME [: Type] = <here>` / `NAME = <here>` /
        `NAME : <here>` (object property)."""
        toks = self.toks
        j = idx - 1
        if j < 0:
            return (None, None)
        if toks[j].text == "=":
            k = j - 1
            depth = 0
            steps = 0
            while k >= 0 and steps < 40:
                t = toks[k]
                if t.kind == "ident" and depth == 0:
                    nxt = toks[k + 1].text
                    if nxt in ("=", ":"):
                        start = k
                        if k > 0 and toks[k - 1].kind == "ident" and toks[
                            k - 1
                        ].text in ("const", "let", "var", "auto", "final"):
                            start = k - 1
                            if start > 0 and toks[start - 1].text == "export":
                                start = start - 1
                        return (t.text, start)
                if t.text in (";", "{", "}", "(", ","):
                    break
                if t.text == ">":
                    depth += 1
                elif t.text == "<":
                    depth -= 1
                k -= 1
                steps += 1
            return (None, None)
        if toks[j].text == ":" and j > 0 and toks[j - 1].kind == "ident":
            return (toks[j - 1].text, j - 1)
        return (None, None)

    def _walk_modifiers_jsts(self, name_idx: int) -> int:
        toks = self.toks
        j = name_idx - 1
        while j >= 0 and (
            (toks[j].kind == "ident" and toks[j].text in JSTS_METHOD_MODIFIERS)
            or toks[j].text == "*"
        ):
            j -= 1
        return j + 1

    def _walk_declaration_back(self, name_idx: int) -> int:
        toks = self.toks
        j = name_idx - 1
        angle = 0
        steps = 0
        while j >= 0 and steps < 60:
            t = toks[j]
            if t.kind == "preproc":
                break
            if t.kind == "punct":
                if t.text in (";", "{", "}", ")", "=", "=>"):
                    break
                if t.text == ":":
                    if self.cpp and j > 0 and toks[j - 1].text in (
                        "public", "private", "protected",
                    ):
                        break
                    if not self.cpp:
                        break
                if t.text == ",":
                    if angle <= 0:
                        break
                if t.text == ">":
                    angle += 1
                elif t.text == "<":
                    angle -= 1
                if t.text not in ("<", ">", ",", ".", "::", "*", "&", "[", "]", "@", "?", ":"):
                    break
            j -= 1
            steps += 1
        return j + 1

    def _cpp_name(
        self, name_idx: int, class_name: Optional[str]
    ) -> tuple[Optional[str], int, bool]:
        """Resolve C++ declarator names: plain, qualified (A::B::name),
        destructors, `operator<sym>`."""
        toks = self.toks
        name_tok = toks[name_idx]
        head = name_idx
        name = name_tok.text
        is_ctor = False
        if name == "operator":
            return (None, name_idx, False)
        if name_idx > 0 and toks[name_idx - 1].text == "operator":
            return ("operator" + name, name_idx - 1, False)
        if name_idx > 0 and toks[name_idx - 1].text == "~":
            name = "~" + name
            head = name_idx - 1
            is_ctor = True  # destructor: no return type
        # walk back over qualification chain to find the head token
        j = head - 1
        qualifier = None
        while j >= 1 and toks[j].text == "::" and toks[j - 1].kind == "ident":
            qualifier = toks[j - 1].text
            head = j - 1
            j = head - 1
        owner = qualifier if qualifier is not None else class_name
        if owner is not None and (name == owner or name == "~" + owner):
            is_ctor = True
        return (name, head, is_ctor)

    def _declared_returns(
        self, decl_idx: int, name_head_idx: int, is_ctor: bool
    ) -> Optional[bool]:
        if is_ctor:
            return False
        toks = self.toks
        type_tokens = [
            t.text
            for t in toks[decl_idx:name_head_idx]
            if not (
                t.kind == "ident"
                and t.text
                in (
                    "public", "private", "protected", "internal", "static",
                    "final", "abstract", "synchronized", "native", "default",
                    "virtual", "inline", "constexpr", "extern", "friend",
                    "explicit", "async", "override", "sealed", "partial",
                    "readonly", "unsafe", "new",
                )
            )
            and t.text != "@"
        ]
        if not type_tokens:
            return None
        if type_tokens == ["void"] or (
            len(type_tokens) == 2 and type_tokens[0] == "void" and type_tokens[1] != "*"
        ):
            return False
        if "void" in type_tokens and "*" not in type_tokens and "<" not in type_tokens:
            return False
        return True

    def _ts_return_annotation(self, r: int, brace_idx: int) -> Optional[bool]:
        toks = self.toks
        if r + 1 < len(toks) and toks[r + 1].text == ":":
            ann = [t.text for t in toks[r + 2 : brace_idx]]
            if not ann:
                return None
            if ann[0] in ("void", "undefined") and len(ann) == 1:
                return False
            return True
        return None

    # ------------------------------------------------------------------
    def _build(
        self, name: str, decl_idx: int, brace_idx: int, p: int, r: int
    ) -> RawMethod:
        toks = self.toks
        start_tok = toks[decl_idx]
        return RawMethod(
            name=name,
            start=start_tok.start,
            end=toks[brace_idx].end,  # finalized when the brace closes
            sig_end=toks[brace_idx].start,
            interior=(toks[brace_idx].end, toks[brace_idx].end),
            params=self._parse_params(p, r),
            decl_line=start_tok.line,
            token_range=(decl_idx, brace_idx),
        )

    def _arrow_header(self, arrow_idx: int, scopes: list[_Scope]) -> Optional[RawMethod]:
        toks = self.toks
        if self.cs:
            # expression-bodied member: `RetType Name(...) => expr;`
            top = scopes[-1].kind if scopes else "top"
            if top != "class" or toks[arrow_idx - 1].text != ")":
                return None
            r = arrow_idx - 1
            p = self.match.get(r)
            if p is None:
                return None
            name_idx = self._name_index_before(p)
            if name_idx is None or toks[name_idx].text in CONTROL_KEYWORDS:
                return None
            before = toks[name_idx - 1] if name_idx > 0 else None
            if before is None or before.kind != "ident":
                return None  # property/indexer expression bodies are skipped
            decl_idx = self._walk_declaration_back(name_idx)
            class_name = next(
                (s.name for s in reversed(scopes) if s.kind == "class"), None
            )
            m = self._build(toks[name_idx].text, decl_idx, arrow_idx, p, r)
            m.sig_end = toks[arrow_idx].start
            m.class_name = class_name
            m.is_ctor = False
            m.returns_value = self._declared_returns(decl_idx, name_idx, False)
            return m

        # JS/TS arrow
        j = arrow_idx - 1
        if j < 0:
            return None
        p = r = None
        if toks[j].text == ")":
            r = j
            p = self.match.get(r)
        elif (
            toks[j].kind == "ident"
            and (j == 0 or toks[j - 1].text not in (":", ".", "|", "&", "<", ">"))
        ):
            # single-parameter arrow: x => ...
            p = r = j
        else:
            # return annotation `): T =>`
            k = j
            steps = 0
            while k >= 0 and steps < 30:
                if toks[k].text == ")" and k + 1 < len(toks) and toks[k + 1].text == ":":
                    r = k
                    p = self.match.get(r)
                    break
                if toks[k].text in (";", "{", "}", "=>"):
                    return None
                k -= 1
                steps += 1
        if p is None or r is None:
            return None
        header_start = p
        if p > 0 and toks[p - 1].text == "async":
            header_start = p - 1
        name, decl_idx = self._assignment_name(header_start)
        if name is None:
            return None
        if p == r:
            params = [Param(text=toks[p].text, name=toks[p].text, annotated=False)]
        else:
            params = self._parse_params(p, r)
        start_tok = toks[decl_idx]
        m = RawMethod(
            name=name,
            start=start_tok.start,
            end=toks[arrow_idx].end,
            sig_end=toks[arrow_idx].start,
            interior=(toks[arrow_idx].end, toks[arrow_idx].end),
            params=params,
            decl_line=start_tok.line,
            token_range=(decl_idx, arrow_idx),
        )
        if toks[j].text != ")" and p != r:
            m.returns_value = None
        else:
            m.returns_value = self._ts_return_annotation(r, arrow_idx)
        return m

    def _scan_expr_end(self, start_idx: int) -> int:
        toks = self.toks
        depth = 0
        j = start_idx
        last = start_idx
        while j < len(toks):
            t = toks[j]
            if t.kind == "punct":
                if t.text in ("(", "[", "{"):
                    depth += 1
                elif t.text in (")", "]", "}"):
                    if depth == 0:
                        return last
                    depth -= 1
                elif t.text in (",", ";") and depth == 0:
                    return last
            last = j
            j += 1
        return last

    def _parse_params(self, p: int, r: int) -> list[Param]:
        toks = self.toks
        if r <= p + 1:
            return []
        groups: list[list[Token]] = [[]]
        depth = 0
        angle = 0
        for t in toks[p + 1 : r]:
            if t.kind == "punct":
                if t.text in ("(", "[", "{"):
                    depth += 1
                elif t.text in (")", "]", "}"):
                    depth -= 1
                elif t.text == "<":
                    angle += 1
                elif t.text == ">":
                    angle = max(0, angle - 1)
                elif t.text == "," and depth == 0 and angle == 0:
                    groups.append([])
                    continue
            groups[-1].append(t)
        params: list[Param] = []
        for g in groups:
            if not g:
                continue
            text = " ".join(t.text for t in g)
            if self.cpp and len(g) == 1 and g[0].text == "void":
                continue
            if self.jsts:
                if g[0].text == "this":
                    continue
                # name [?] [: type] [= default]
                name = g[0].text if g[0].kind == "ident" else None
                if g[0].text == "...":
                    name = g[1].text if len(g) > 1 and g[1].kind == "ident" else None
                if g[0].text in ("{", "["):
                    name = None
                annotated = any(
                    t.text == ":" for t in g
                ) if self.ts else False
                type_text = ""
                if annotated:
                    ci = next(i for i, t in enumerate(g) if t.text == ":")
                    type_text = " ".join(t.text for t in g[ci + 1 :])
                params.append(Param(text=text, name=name, annotated=annotated,
                                    type_text=type_text))
            else:
                # statically typed: last identifier before '=' is the name
                eq = next((i for i, t in enumerate(g) if t.text == "="), len(g))
                name = None
                for t in reversed(g[:eq]):
                    if t.kind == "ident" and t.text not in ("const", "final",
                                                            "params", "ref",
                                                            "out", "in"):
                        name = t.text
                        break
                if self.cs and g[0].text == "this":
                    continue
                params.append(Param(text=text, name=name, annotated=True,
                                    type_text=text))
        return params

    # ------------------------------------------------------------------
    def _mark_nested(self, methods: list[RawMethod]) -> None:
        for i, m in enumerate(methods):
            for other in methods:
                if other is m:
                    continue
                if other.start < m.start and m.end <= other.end:
                    m.nested = True
                    break

    def _fill_returns(self, methods: list[RawMethod], toks: list[Token]) -> None:
        for m in methods:
            if m.returns_value is not None:
                continue
            inner_spans = [
                (o.start, o.end)
                for o in methods
                if o is not m and m.start < o.start and o.end <= m.end
            ]
            returns = False
            for i, t in enumerate(toks):
                if t.start < m.interior[0] or t.end > m.interior[1]:
                    continue
                if any(s <= t.start < e for s, e in inner_spans):
                    continue
                if t.kind == "ident" and t.text == "return":
                    nxt = toks[i + 1] if i + 1 < len(toks) else None
                    if nxt is not None and not (
                        nxt.kind == "punct" and nxt.text in (";", "}")
                    ):
                        returns = True
                        break
            m.returns_value = returns
