"""Template parsing and desugaring.

Template files start with ``tag: <name>``; every following non-blank line
carries a margin character: ``"`` for content (literal text plus ``${path}``
interpolations, each line contributing a trailing newline) or ``:`` for
statement fragments (``for x of path {``, ``if path {``, ``} else {``,
``}``) which must form balanced blocks.

Desugaring turns the tree into an append program: a reducible control-flow
graph of fixed and unsafe appends with a single entry and a single exit at
the Collected node. Loop and branch nodes carry their bodies, so the loop
header/back-edge and branch/join structure is implicit and unique.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import Diagnostic, Position, Severity, error

PATH_RE = re.compile(r"[A-Za-z_]\w*(?:\.[A-Za-z_]\w*)*")

_FOR_RE = re.compile(r"for\s+([A-Za-z_]\w*)\s+of\s+(\S+)\s*\{$")
_IF_RE = re.compile(r"if\s+(\S+)\s*\{$")
_ELSE_RE = re.compile(r"\}\s*else\s*\{$")
_END_RE = re.compile(r"\}$")


# -- template IR -------------------------------------------------------------

@dataclass(eq=False)
class Literal:
    text: str
    pos: Position


@dataclass(eq=False)
class Interp:
    path: str
    pos: Position


@dataclass(eq=False)
class For:
    var: str
    path: str
    body: list
    pos: Position


@dataclass(eq=False)
class If:
    path: str
    then: list
    els: list
    pos: Position


@dataclass
class TemplateIR:
    tag: str
    body: list
    filename: str = "<template>"


# -- append program ----------------------------------------------------------

@dataclass(eq=False)
class AppendFixed:
    text: str
    pos: Position


@dataclass(eq=False)
class AppendUnsafe:
    path: str
    pos: Position


@dataclass(eq=False)
class LoopBlock:
    var: str
    path: str
    body: list
    pos: Position


@dataclass(eq=False)
class BranchBlock:
    path: str
    then: list
    els: list
    pos: Position


@dataclass(eq=False)
class Collected:
    pos: Position


@dataclass
class AppendProgram:
    tag: str
    body: list  # ends with Collected


def _content_nodes(text: str, pos: Position, diags: list[Diagnostic]) -> list:
    """Split one content line into Literal and Interp nodes. ``$${`` is the
    escape for a literal ``${``; the line's trailing newline is folded into
    the final literal."""
    nodes: list = []
    buf: list[str] = []
    buf_start = 0
    i = 0

    def flush_literal(end: int, extra: str = ""):
        if buf or extra:
            nodes.append(Literal("".join(buf) + extra,
                                 Position(pos.file, pos.line, pos.col + buf_start)))
        buf.clear()

    while i < len(text):
        if text.startswith("$${", i):
            buf.append("${")
            i += 3
            continue
        if text.startswith("${", i):
            end = text.find("}", i + 2)
            if end < 0:
                diags.append(error("malformed interpolation: missing '}'",
                                   Position(pos.file, pos.line, pos.col + i)))
                return nodes
            expr = text[i + 2:end].strip()
            if not PATH_RE.fullmatch(expr):
                if "(" in expr:
                    msg = f"method calls are not supported in interpolations: {expr!r}"
                else:
                    msg = f"invalid interpolation path: {expr!r}"
                diags.append(error(msg, Position(pos.file, pos.line, pos.col + i)))
                return nodes
            flush_literal(i)
            nodes.append(Interp(expr, Position(pos.file, pos.line, pos.col + i)))
            i = end + 1
            buf_start = i
            continue
        buf.append(text[i])
        i += 1
    flush_literal(len(text), extra="\n")
    return nodes


def parse_template(source: str, filename: str = "<template>"):
    """Parse template text. Returns (TemplateIR | None, diagnostics)."""
    diags: list[Diagnostic] = []
    lines = source.splitlines()
    if not lines:
        diags.append(error("empty template: expected 'tag: <name>' on line 1",
                           Position(filename, 1, 1)))
        return None, diags
    m = re.fullmatch(r"tag:\s*([A-Za-z_]\w*)\s*", lines[0])
    if not m:
        diags.append(error("first line must be 'tag: <name>'", Position(filename, 1, 1)))
        return None, diags
    tag = m.group(1)

    root: list = []
    # stack of (node, active_body, opener_pos, kind)
    stack: list[tuple] = []

    def current_body() -> list:
        return stack[-1][1] if stack else root

    for lineno, raw in enumerate(lines[1:], start=2):
        stripped = raw.lstrip(" \t")
        if not stripped:
            continue
        indent = len(raw) - len(stripped)
        margin_pos = Position(filename, lineno, indent + 1)
        margin, rest = stripped[0], stripped[1:]
        if margin == '"':
            content_pos = Position(filename, lineno, indent + 2)
            current_body().extend(_content_nodes(rest, content_pos, diags))
        elif margin == ":":
            stmt = rest.strip()
            if m := _FOR_RE.fullmatch(stmt):
                var, path = m.group(1), m.group(2)
                if not PATH_RE.fullmatch(path):
                    diags.append(error(f"invalid loop path: {path!r}", margin_pos))
                    continue
                node = For(var, path, [], margin_pos)
                current_body().append(node)
                stack.append((node, node.body, margin_pos, "for"))
            elif m := _IF_RE.fullmatch(stmt):
                path = m.group(1)
                if not PATH_RE.fullmatch(path):
                    diags.append(error(f"invalid condition path: {path!r}", margin_pos))
                    continue
                node = If(path, [], [], margin_pos)
                current_body().append(node)
                stack.append((node, node.then, margin_pos, "if"))
            elif _ELSE_RE.fullmatch(stmt):
                if not stack or stack[-1][3] != "if":
                    diags.append(error("'} else {' without a matching 'if'", margin_pos))
                    continue
                node, _, opos, _ = stack.pop()
                stack.append((node, node.els, opos, "else"))
            elif _END_RE.fullmatch(stmt):
                if not stack:
                    diags.append(error("unbalanced statement block: '}' without an opener",
                                       margin_pos))
                    continue
                stack.pop()
            else:
                diags.append(error(f"unknown statement: {stmt!r}", margin_pos))
        else:
            diags.append(error(f"unknown margin character {margin!r} "
                               "(expected '\"' or ':')", margin_pos))

    for _, _, opos, kind in stack:
        diags.append(error(f"unbalanced statement block: this '{kind}' is never closed", opos))

    if any(d.severity is Severity.ERROR for d in diags):
        return None, diags
    return TemplateIR(tag, root, filename), diags


def _desugar_body(nodes: list) -> list:
    out: list = []
    for node in nodes:
        if isinstance(node, Literal):
            out.append(AppendFixed(node.text, node.pos))
        elif isinstance(node, Interp):
            out.append(AppendUnsafe(node.path, node.pos))
        elif isinstance(node, For):
            out.append(LoopBlock(node.var, node.path, _desugar_body(node.body), node.pos))
        elif isinstance(node, If):
            out.append(BranchBlock(node.path, _desugar_body(node.then),
                                   _desugar_body(node.els), node.pos))
        else:  # pragma: no cover
            raise TypeError(f"unexpected IR node {node!r}")
    return out


def desugar(ir: TemplateIR) -> AppendProgram:
    """Mechanical translation: literals feed appendFixed, interpolations feed
    appendUnsafe, control flow keeps its shape; the program ends at
    Collected."""
    body = _desugar_body(ir.body)
    last_line = max((n.pos.line for n in walk(body)), default=1)
    body.append(Collected(Position(ir.filename, last_line + 1, 1)))
    return AppendProgram(ir.tag, body)


def walk(nodes):
    """All program nodes in source order, recursing into blocks."""
    for node in nodes:
        yield node
        if isinstance(node, LoopBlock):
            yield from walk(node.body)
        elif isinstance(node, BranchBlock):
            yield from walk(node.then)
            yield from walk(node.els)
