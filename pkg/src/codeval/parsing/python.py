"""Python method extraction via the stdlib ast module.

ast column offsets are UTF-8 byte offsets within a line, so byte spans are
recovered exactly from the raw file bytes without re-encoding tricks.
"""

from __future__ import annotations

import ast
from typing import Optional

from .clike import Param, RawMethod


def line_starts(src: bytes) -> list[int]:
    starts = [0]
    for i, b in enumerate(src):
        if b == 0x0A:
            starts.append(i + 1)
    return starts


def _byte_off(starts: list[int], lineno: int, col: int) -> int:
    return starts[lineno - 1] + col


def scan_python(src: bytes) -> tuple[list[RawMethod], list[str]]:
    try:
        tree = ast.parse(src)
    except (SyntaxError, ValueError) as exc:
        return [], [f"syntax error: {exc}"]

    starts = line_starts(src)
    methods: list[RawMethod] = []

    def visit(node: ast.AST, class_name: Optional[str], depth: int) -> None:
        for child in ast.iter_child_nodes(node):
            if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
                methods.append(_method(child, starts, src, class_name, depth > 0))
                visit(child, None, depth + 1)
            elif isinstance(child, ast.ClassDef):
                visit(child, child.name, depth)
            else:
                visit(child, class_name, depth)

    visit(tree, None, 0)
    methods.sort(key=lambda m: (m.start, m.end))
    return methods, []


def _method(
    node: ast.FunctionDef | ast.AsyncFunctionDef,
    starts: list[int],
    src: bytes,
    class_name: Optional[str],
    nested: bool,
) -> RawMethod:
    start = _byte_off(starts, node.lineno, node.col_offset)
    end = _byte_off(starts, node.end_lineno or node.lineno,
                    node.end_col_offset or 0)
    first_stmt = node.body[0]
    body_start = _byte_off(starts, first_stmt.lineno, first_stmt.col_offset)

    m = RawMethod(
        name=node.name,
        start=start,
        end=end,
        sig_end=body_start,
        interior=(body_start, end),
        params=_params(node, class_name),
        class_name=class_name,
        returns_value=_returns_value(node),
        is_ctor=node.name == "__init__",
        nested=nested,
        decl_line=node.lineno,
    )
    m.docstring = ast.get_docstring(node, clean=False)  # type: ignore[attr-defined]
    return m


def _params(
    node: ast.FunctionDef | ast.AsyncFunctionDef, class_name: Optional[str]
) -> list[Param]:
    a = node.args
    ordered: list[ast.arg] = list(a.posonlyargs) + list(a.args)
    decorators = {
        d.id for d in node.decorator_list if isinstance(d, ast.Name)
    }
    drop_first = (
        class_name is not None
        and "staticmethod" not in decorators
        and ordered
        and ordered[0].arg in ("self", "cls")
    )
    if drop_first:
        ordered = ordered[1:]
    params: list[Param] = []
    for arg in ordered + list(a.kwonlyargs):
        params.append(
            Param(
                text=arg.arg,
                name=arg.arg,
                annotated=arg.annotation is not None,
                type_text=ast.unparse(arg.annotation) if arg.annotation else "",
            )
        )
    if a.vararg is not None:
        params.append(Param(text="*" + a.vararg.arg, name=a.vararg.arg,
                            annotated=a.vararg.annotation is not None))
    if a.kwarg is not None:
        params.append(Param(text="**" + a.kwarg.arg, name=a.kwarg.arg,
                            annotated=a.kwarg.annotation is not None))
    return params


def _returns_value(node: ast.FunctionDef | ast.AsyncFunctionDef) -> bool:
    if node.returns is not None:
        ann = node.returns
        if isinstance(ann, ast.Constant) and ann.value is None:
            return False
        if isinstance(ann, ast.Name) and ann.id == "None":
            return False
        return True

    class Finder(ast.NodeVisitor):
        found = False

        def visit_Return(self, r: ast.Return) -> None:
            if r.value is not None and not (
                isinstance(r.value, ast.Constant) and r.value.value is None
            ):
                Finder.found = True

        def visit_FunctionDef(self, _: ast.FunctionDef) -> None:
            return  # do not descend into nested defs

        def visit_AsyncFunctionDef(self, _: ast.AsyncFunctionDef) -> None:
            return

        def visit_Lambda(self, _: ast.Lambda) -> None:
            return

    f = Finder()
    Finder.found = False
    for stmt in node.body:
        f.visit(stmt)
    return Finder.found
