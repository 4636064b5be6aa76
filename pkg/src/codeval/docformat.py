"""Docstring/doc-comment format recognizers.

One analyzer per dominant convention family: tag style (JSDoc, Javadoc,
Doxygen), XML doc comments (C#), and the Python section styles (reST,
Google, NumPy). The result records which parameters are documented (and
whether a type accompanies them), whether a return is documented, and the
word tokens available for focal-name matching.
"""

from __future__ import annotations

import re
import textwrap
from dataclasses import dataclass, field

from .core import Language

_WORD = re.compile(r"\w+")

_TAG_PARAM = re.compile(
    r"[@\\](?:param|arg|argument|tparam)\s*(?:\{(?P<type>[^}]*)\}\s*)?"
    r"(?:\[(?:in|out|in,out)\]\s*)?(?P<name>[\w$.]+)"
)
_TAG_RETURN = re.compile(r"[@\\](?:returns?|retval)\b(?:\s*\{(?P<type>[^}]*)\})?")
_XML_PARAM = re.compile(r"<param\s+name\s*=\s*[\"'](?P<name>[^\"']+)[\"']")
_XML_RETURNS = re.compile(r"<returns\s*/?>")
_XML_SUMMARY = re.compile(r"<summary\s*/?>(?P<body>.*?)(?:</summary>|$)", re.DOTALL)

_REST_PARAM = re.compile(
    r":param\s+(?:(?P<type>[\w\[\], .|]+)\s+)?(?P<name>\w+)\s*:"
)
_REST_TYPE = re.compile(r":type\s+(?P<name>\w+)\s*:")
_REST_RETURN = re.compile(r":returns?\s*:|:rtype\s*:")

_GOOGLE_SECTION = re.compile(
    r"^\s*(Args|Arguments|Parameters)\s*:\s*$", re.MULTILINE
)
_GOOGLE_RETURN_SECTION = re.compile(
    r"^\s*(Returns|Yields)\s*:\s*$", re.MULTILINE
)
_GOOGLE_ENTRY = re.compile(
    r"^\s+(?P<name>[*\w]+)\s*(?:\((?P<type>[^)]*)\))?\s*:", re.MULTILINE
)

_NUMPY_PARAMS_HEADER = re.compile(
    r"^\s*Parameters\s*\n\s*-{3,}\s*$", re.MULTILINE
)
_NUMPY_RETURNS_HEADER = re.compile(
    r"^\s*(Returns|Yields)\s*\n\s*-{3,}\s*$", re.MULTILINE
)
_NUMPY_ENTRY = re.compile(r"^\s*(?P<name>\w+)\s*:\s*(?P<type>.+)?$", re.MULTILINE)


@dataclass
class DocAnalysis:
    has_description: bool = False
    documented_params: dict[str, bool] = field(default_factory=dict)  # name -> typed
    returns_documented: bool = False
    tokens: list[str] = field(default_factory=list)
    style: str = "plain"


def strip_comment_markers(text: str) -> str:
    """Reduce a doc comment or string literal to its prose."""
    t = text.strip()
    if t.startswith(("r", "b", "u", "f", "R", "B", "U", "F")) and len(t) > 1 and t[1] in "\"'":
        t = t[1:]
    for q in ('"""', "'''", '"', "'"):
        if t.startswith(q) and t.endswith(q) and len(t) >= 2 * len(q):
            t = t[len(q) : -len(q)]
            break
    if t.startswith("/*"):
        t = t[2:]
        t = t.lstrip("*!")
        if t.endswith("*/"):
            t = t[:-2]
    lines = []
    for raw in t.splitlines():
        stripped = raw.lstrip()
        if stripped.startswith(("///", "//!")):
            ln = stripped[3:]
            ln = ln[1:] if ln.startswith(" ") else ln
        elif stripped.startswith("//"):
            ln = stripped[2:]
            ln = ln[1:] if ln.startswith(" ") else ln
        elif stripped.startswith("*"):
            ln = stripped[1:]
            ln = ln[1:] if ln.startswith(" ") else ln
        else:
            # plain line: keep indentation, the Python section styles
            # (Google/NumPy) are whitespace-sensitive
            ln = raw
        lines.append(ln.rstrip())
    return textwrap.dedent("\n".join(lines)).strip("\n")


def analyze(raw_doc: str, language: Language) -> DocAnalysis:
    text = strip_comment_markers(raw_doc)
    out = DocAnalysis(tokens=_WORD.findall(text))

    if language is Language.CSHARP or "<summary" in text:
        _analyze_xml(text, out)
        if out.style == "xml":
            return out
    if language is Language.PYTHON:
        _analyze_python(text, out)
        return out
    _analyze_tags(text, out)
    return out


def _analyze_tags(text: str, out: DocAnalysis) -> None:
    out.style = "tags"
    for m in _TAG_PARAM.finditer(text):
        name = m.group("name").lstrip("$")
        typed = bool(m.group("type"))
        out.documented_params[name] = out.documented_params.get(name, False) or typed
    if _TAG_RETURN.search(text):
        out.returns_documented = True
    first_tag = len(text)
    tag_match = re.search(r"[@\\](?:param|arg|returns?|retval|brief|tparam)", text)
    if tag_match:
        first_tag = tag_match.start()
    description = text[:first_tag].strip()
    brief = re.search(r"[@\\]brief\s+(\S.*)", text)
    out.has_description = bool(description) or bool(brief)


def _analyze_xml(text: str, out: DocAnalysis) -> None:
    if not (_XML_SUMMARY.search(text) or _XML_PARAM.search(text)
            or _XML_RETURNS.search(text)):
        return
    out.style = "xml"
    summary = _XML_SUMMARY.search(text)
    out.has_description = bool(summary and summary.group("body").strip())
    for m in _XML_PARAM.finditer(text):
        out.documented_params[m.group("name")] = True  # XML docs carry no types
    out.returns_documented = bool(_XML_RETURNS.search(text))


def _analyze_python(text: str, out: DocAnalysis) -> None:
    rest_params = list(_REST_PARAM.finditer(text))
    google_args = _GOOGLE_SECTION.search(text)
    numpy_params = _NUMPY_PARAMS_HEADER.search(text)

    if rest_params or _REST_RETURN.search(text):
        out.style = "rest"
        typed_names = {m.group("name") for m in _REST_TYPE.finditer(text)}
        for m in rest_params:
            name = m.group("name")
            out.documented_params[name] = bool(m.group("type")) or name in typed_names
        out.returns_documented = bool(_REST_RETURN.search(text))
        first = rest_params[0].start() if rest_params else len(text)
        out.has_description = bool(text[:first].strip())
        return

    if numpy_params or _NUMPY_RETURNS_HEADER.search(text):
        out.style = "numpy"
        if numpy_params:
            section = _numpy_section(text, numpy_params.end())
            for m in _NUMPY_ENTRY.finditer(section):
                out.documented_params[m.group("name")] = bool(m.group("type"))
        out.returns_documented = bool(_NUMPY_RETURNS_HEADER.search(text))
        head = text[: numpy_params.start()] if numpy_params else text
        out.has_description = bool(head.strip())
        return

    if google_args or _GOOGLE_RETURN_SECTION.search(text):
        out.style = "google"
        if google_args:
            section = _google_section(text, google_args.end())
            for m in _GOOGLE_ENTRY.finditer(section):
                name = m.group("name").lstrip("*")
                out.documented_params[name] = bool(m.group("type"))
        out.returns_documented = bool(_GOOGLE_RETURN_SECTION.search(text))
        head = text[: google_args.start()] if google_args else text
        out.has_description = bool(head.strip())
        return

    _analyze_tags(text, out)
    if not out.documented_params and not out.returns_documented:
        out.style = "plain"
        out.has_description = bool(text.strip())


def _google_section(text: str, start: int) -> str:
    """Body of a Google-style section: indented lines until the next
    section header or dedent."""
    lines = text[start:].splitlines()
    kept = []
    for ln in lines:
        if not ln.strip():
            kept.append(ln)
            continue
        if re.match(r"^\s*(Returns|Yields|Raises|Examples?|Notes?|Attributes)\s*:\s*$", ln):
            break
        if not ln.startswith((" ", "\t")):
            break
        kept.append(ln)
    return "\n".join(kept)


def _numpy_section(text: str, start: int) -> str:
    lines = text[start:].splitlines()
    kept = []
    for i, ln in enumerate(lines):
        if re.match(r"^\s*-{3,}\s*$", ln) and kept:
            kept.pop()  # previous line was the next section's header
            break
        kept.append(ln)
    return "\n".join(kept)


def _ident_words(name: str) -> list[str]:
    """mergeCounts -> [merge, counts]; sum_window -> [sum, window]."""
    spaced = re.sub(r"([a-z0-9])([A-Z])", r"\1 \2", name.strip("_~"))
    return [w.lower() for w in re.split(r"[\s_]+", spaced) if w]


def _prefix_match(token: str, word: str) -> bool:
    if token == word:
        return True
    if len(word) >= 3 and token.startswith(word):
        return True
    if len(token) >= 3 and word.startswith(token):
        return True
    return False


def mentions_name(tokens: list[str], name: str) -> bool:
    """Prefix-tolerant, case-insensitive name mention. The full identifier
    counts ('dump' matches 'dumps'); so does prose naming the identifier's
    leading camel/snake words ('Merge two count maps' names mergeCounts).
    Short fragments require exact matches."""
    needle = name.lower().lstrip("_~")
    if not needle:
        return False
    lowered = [t.lower() for t in tokens]
    for t in lowered:
        if t == needle:
            return True
        if len(needle) >= 3 and t.startswith(needle):
            return True
    words = _ident_words(name)
    if not words:
        return False
    required = words[:2]
    return all(
        any(_prefix_match(t, w) for t in lowered) for w in required
    )
