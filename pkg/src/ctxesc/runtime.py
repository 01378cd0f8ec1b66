"""Dynamic rendering: the accumulator that interleaves fixed and unsafe
appends, tracking parse context as it goes. This is the reference semantics
the static compiler is checked against."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import machine as machine_mod
from .diagnostics import Diagnostic, Position, RenderError, Severity, has_errors, warning
from .escapers import apply_chain
from .frontend import (
    AppendFixed,
    AppendProgram,
    AppendUnsafe,
    BranchBlock,
    Collected,
    LoopBlock,
)
from .marks import EXPR_END, EXPR_START, MSG_END, MSG_START, Mark
from .values import EscapeError, SafeContent, truthy


class Collector:
    """Output buffer plus the mark list that indexes into it."""

    def __init__(self):
        self._parts: list[str] = []
        self.length = 0
        self.marks: list[Mark] = []
        self.open_messages = 0

    def append_text(self, text: str) -> None:
        if text:
            self._parts.append(text)
            self.length += len(text)

    def add_mark(self, kind: str, ident: str | None = None) -> None:
        self.marks.append(Mark(kind, self.length, ident))
        if kind == MSG_START:
            self.open_messages += 1
        elif kind == MSG_END:
            self.open_messages = max(0, self.open_messages - 1)

    def extend_marks(self, new_marks, base: int) -> None:
        for mark in new_marks:
            self.marks.append(mark.shifted(base))
            if mark.kind == MSG_START:
                self.open_messages += 1
            elif mark.kind == MSG_END:
                self.open_messages = max(0, self.open_messages - 1)

    def text(self) -> str:
        return "".join(self._parts)


@dataclass
class Bindings:
    """Named values available to interpolation paths."""

    values: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, text: str) -> "Bindings":
        from .values import bindings_from_json

        return cls(bindings_from_json(text))


def resolve_segs(segs, bindings: Bindings, frames: list[dict],
                 pos: Position, strict: bool = True):
    """Dotted path lookup on pre-split segments: loop frames shadow the root
    bindings. With strict=False an absent path yields None (condition
    semantics) instead of a render error."""
    head = segs[0]
    scope = None
    for frame in reversed(frames):
        if head in frame:
            scope = frame
            break
    if scope is None:
        if head in bindings.values:
            scope = bindings.values
        elif strict:
            raise RenderError(f"unbound path {'.'.join(segs)!r}", pos)
        else:
            return None
    cur = scope[head]
    for seg in segs[1:]:
        if isinstance(cur, dict) and seg in cur:
            cur = cur[seg]
        elif strict:
            raise RenderError(
                f"unbound path {'.'.join(segs)!r} (no field {seg!r})", pos)
        else:
            return None
    return cur


def resolve_path(path: str, bindings: Bindings, frames: list[dict],
                 pos: Position, strict: bool = True):
    return resolve_segs(path.split("."), bindings, frames, pos, strict)


class Accumulator:
    """Owns a machine state and a collector; the state is always the fold of
    every append so far."""

    def __init__(self, machine: machine_mod.Machine):
        self.machine = machine
        self.state = machine.zero_state()
        self.collector = Collector()
        self.diagnostics: list[Diagnostic] = []

    @property
    def errored(self) -> bool:
        return self.state.error is not None

    def _absorb(self, result) -> list[Diagnostic]:
        base = self.collector.length
        self.collector.append_text(result.emitted)
        self.collector.extend_marks(result.marks, base)
        self.diagnostics.extend(result.diagnostics)
        self.state = result.state
        return result.diagnostics

    def append_fixed(self, text: str, pos: Position) -> list[Diagnostic]:
        return self._absorb(machine_mod.step_fixed(self.machine, self.state, text, pos))

    def flush_boundary(self, pos: Position) -> list[Diagnostic]:
        """Force held-back text through; used at control-flow edges where
        fixed text on different paths must not be joined for matching."""
        return self._absorb(machine_mod.finish(self.machine, self.state, pos))

    def append_unsafe(self, value, pos: Position) -> list[Diagnostic]:
        r = machine_mod.step_interp(self.machine, self.state, pos)
        base = self.collector.length
        self.collector.append_text(r.emitted)
        self.collector.extend_marks(r.marks, base)
        self.diagnostics.extend(r.diagnostics)
        self.state = r.state
        if r.error:
            return r.diagnostics
        self.collector.append_text(r.pre)
        in_message = self.collector.open_messages > 0
        if in_message:
            self.collector.add_mark(EXPR_START)
        try:
            self.collector.append_text(apply_chain(r.escapers, value))
        except EscapeError as exc:
            diag = Diagnostic(Severity.ERROR, str(exc), pos)
            self.diagnostics.append(diag)
            self.state = machine_mod.MachineState(
                context=self.state.context, error=str(exc))
            return [diag]
        if in_message:
            self.collector.add_mark(EXPR_END)
        self.collector.append_text(r.post)
        return r.diagnostics

    def collected(self, pos: Position | None = None):
        """Finish composition. Returns (SafeContent | None, diagnostics);
        a non-terminal end context is a warning, not an error."""
        if pos is None:
            pos = Position("<template>", 0, 1)
        if not self.errored:
            self._absorb(machine_mod.finish(self.machine, self.state, pos))
        if self.errored:
            return None, self.diagnostics
        ok, message = machine_mod.is_valid_end(self.machine, self.state)
        if not ok:
            self.diagnostics.append(warning(message, pos))
        return SafeContent(self.machine.language, self.collector.text()), self.diagnostics


def new_accumulator(machine: machine_mod.Machine) -> Accumulator:
    return Accumulator(machine)


def render_full(program: AppendProgram, bindings: Bindings,
                machine: machine_mod.Machine):
    """Interpret an append program against bindings.

    Returns (SafeContent, marks, diagnostics). Any error is fail-stop for
    the whole template: RenderError is raised and no partial output escapes.
    """
    acc = Accumulator(machine)

    def run(nodes, frames):
        for node in nodes:
            if acc.errored:
                break
            if isinstance(node, AppendFixed):
                acc.append_fixed(node.text, node.pos)
            elif isinstance(node, AppendUnsafe):
                value = resolve_path(node.path, bindings, frames, node.pos)
                acc.append_unsafe(value, node.pos)
            elif isinstance(node, LoopBlock):
                acc.flush_boundary(node.pos)
                seq = resolve_path(node.path, bindings, frames, node.pos)
                if not isinstance(seq, list):
                    raise RenderError(
                        f"loop over non-list value at path {node.path!r}", node.pos)
                for item in seq:
                    run(node.body, frames + [{node.var: item}])
                    acc.flush_boundary(node.pos)
            elif isinstance(node, BranchBlock):
                acc.flush_boundary(node.pos)
                value = resolve_path(node.path, bindings, frames, node.pos, strict=False)
                run(node.then if truthy(value) else node.els, frames)
                acc.flush_boundary(node.pos)
            elif isinstance(node, Collected):
                pass  # handled below so diagnostics keep their position
            else:  # pragma: no cover
                raise TypeError(f"unexpected program node {node!r}")

    run(program.body, [])
    end_pos = program.body[-1].pos if program.body else None
    value, diags = acc.collected(end_pos)
    if value is None or has_errors(diags):
        first = next(d for d in diags if d.severity is Severity.ERROR)
        raise RenderError(first.message, first.position)
    return value, tuple(acc.collector.marks), diags


def render(program: AppendProgram, bindings: Bindings,
           machine: machine_mod.Machine):
    """render_full without the marks: (SafeContent, diagnostics)."""
    value, _, diags = render_full(program, bindings, machine)
    return value, diags
