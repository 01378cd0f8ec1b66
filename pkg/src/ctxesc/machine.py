"""The left-to-right context machine.

A machine is a root transition table plus the subsidiary tables and codecs it
can spin up (URL inside an HTML attribute, CSS inside a style element).
Machine states are immutable values; stepping produces a new state. Between
steps a machine may hold back a bounded amount of unconsumed text so regex
matching is independent of how fixed text is chunked.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Position, Severity, TableError
from .marks import Mark
from .tables import (
    Action,
    Rule,
    TransitionTable,
    context_str,
)

_op_count = 0


def _bump() -> None:
    global _op_count
    _op_count += 1


def transition_op_count() -> int:
    """Monotone counter of transition-table operations (rule applications,
    default copies, escaper-map lookups). Used to prove that compiled plans
    never touch the machine."""
    return _op_count


class Codec:
    """Paired decode/encode bridging a nesting and a nested content language.

    decode_unit consumes one unit (a character or one full escape sequence)
    from the head of the text; encode re-applies the outer language's
    encoding to text emitted by the nested machine.
    """

    name = "codec"

    def decode_unit(self, text: str) -> tuple[int, str, str | None]:
        raise NotImplementedError

    def encode(self, text: str) -> str:
        raise NotImplementedError

    def decode(self, text: str) -> str:
        out = []
        i = 0
        while i < len(text):
            n, piece, _ = self.decode_unit(text[i:])
            out.append(piece)
            i += max(1, n)
        return "".join(out)


class IdentityCodec(Codec):
    name = "identityCodec"

    def decode_unit(self, text):
        return 1, text[0], None

    def encode(self, text):
        return text


class HtmlEntityCodec(Codec):
    """Decodes the named entities for ``& < > "`` plus numeric references;
    encodes those four characters back to entities."""

    name = "htmlCodec"

    _ENTITY = re.compile(r"&(?:(amp|lt|gt|quot)|#(?:([0-9]{1,7})|[xX]([0-9a-fA-F]{1,6})));")
    _NAMED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"'}
    _ENCODE = {ord("&"): "&amp;", ord("<"): "&lt;", ord(">"): "&gt;", ord('"'): "&quot;"}

    def decode_unit(self, text):
        ch = text[0]
        if ch != "&":
            return 1, ch, None
        m = self._ENTITY.match(text)
        if m:
            if m.group(1):
                return m.end(), self._NAMED[m.group(1)], None
            cp = int(m.group(2)) if m.group(2) else int(m.group(3), 16)
            if 0 < cp <= 0x10FFFF and not (0xD800 <= cp <= 0xDFFF):
                return m.end(), chr(cp), None
            return 1, ch, "malformed numeric character reference copied verbatim"
        if text.startswith("&#"):
            return 1, ch, "malformed numeric character reference copied verbatim"
        return 1, ch, None

    def encode(self, text):
        return text.translate(self._ENCODE)


BUILTIN_CODECS: dict[str, Codec] = {
    "identityCodec": IdentityCodec(),
    "htmlCodec": HtmlEntityCodec(),
}


@dataclass(frozen=True)
class Frame:
    """One active subsidiary machine: its name, the codec bridging it to the
    enclosing machine, its context, and its own held-back text."""

    machine: str
    codec: str
    context: tuple[str, ...]
    pending: str


@dataclass(frozen=True)
class MachineState:
    context: tuple[str, ...]
    pending: str = ""
    frames: tuple[Frame, ...] = ()
    error: str | None = None
    pending_pos: Position | None = field(default=None, compare=False)


@dataclass
class StepResult:
    state: MachineState
    emitted: str
    marks: tuple[Mark, ...]
    diagnostics: list[Diagnostic]


@dataclass
class InterpResult:
    """Everything the caller needs to splice one untrusted value: the flush
    output that precedes it, the escaper chain (innermost first), inserted
    delimiter text, and the successor state."""

    state: MachineState
    site: MachineState
    emitted: str
    marks: tuple[Mark, ...]
    escapers: tuple[str, ...]
    pre: str
    post: str
    diagnostics: list[Diagnostic]
    error: bool


class Machine:
    def __init__(self, root_table: TransitionTable, subs: dict[str, TransitionTable],
                 codecs: dict[str, Codec]):
        self.root_table = root_table
        self.subs = subs
        self.codecs = codecs

    @property
    def language(self) -> str:
        return self.root_table.name

    def zero_state(self) -> MachineState:
        return MachineState(context=self.root_table.start)


def build_machine(root: TransitionTable, subs: dict[str, TransitionTable] | None = None,
                  codecs: dict[str, Codec] | None = None) -> Machine:
    """Link a root table with its subsidiary tables and codecs, checking the
    references a single-table validation cannot see."""
    subs = dict(subs or {})
    codecs = dict(codecs) if codecs is not None else dict(BUILTIN_CODECS)
    problems = []
    for tname, table in [(root.name, root)] + list(subs.items()):
        for rule in table.rules:
            if rule.action and rule.action.kind == "start":
                if rule.action.machine not in subs:
                    problems.append(f"{table.filename}:{rule.line}: unknown subsidiary machine {rule.action.machine!r}")
                if rule.action.codec not in codecs:
                    problems.append(f"{table.filename}:{rule.line}: unknown codec {rule.action.codec!r}")
            if rule.events and table is not root:
                problems.append(f"{table.filename}:{rule.line}: subsidiary machines may not emit marks")
    if problems:
        raise TableError("; ".join(problems))
    return Machine(root, subs, codecs)


class _Level:
    __slots__ = ("table", "machine_name", "codec_name", "codec", "context", "pending")

    def __init__(self, table, machine_name, codec_name, codec, context, pending):
        self.table = table
        self.machine_name = machine_name
        self.codec_name = codec_name
        self.codec = codec
        self.context = context
        self.pending = pending


class _Run:
    """Mutable working form of a MachineState for one step call."""

    def __init__(self, machine: Machine, state: MachineState, pos: Position | None):
        self.machine = machine
        root = machine.root_table
        self._levels = [_Level(root, root.name, None, None, state.context, state.pending)]
        for fr in state.frames:
            self._levels.append(_Level(
                machine.subs[fr.machine], fr.machine, fr.codec,
                machine.codecs[fr.codec], fr.context, fr.pending))
        self.error: str | None = state.error
        self.out: list[str] = []
        self.out_len = 0
        self.marks: list[Mark] = []
        self.diags: list[Diagnostic] = []
        self._pos = state.pending_pos if state.pending else pos
        if self._pos is None:
            self._pos = pos or Position("<input>", 1, 1)

    # -- output ------------------------------------------------------------

    def _encode_text(self, i: int, text: str) -> str:
        for j in range(i, 0, -1):
            text = self._levels[j].codec.encode(text)
        return text

    def _emit_from(self, i: int, text: str) -> None:
        text = self._encode_text(i, text)
        if text:
            self.out.append(text)
            self.out_len += len(text)

    def _diag(self, severity: Severity, message: str) -> None:
        self.diags.append(Diagnostic(severity, message, self._pos))
        if severity is Severity.ERROR and self.error is None:
            self.error = message

    def _internal_error(self, message: str) -> None:
        self._diag(Severity.ERROR, message)

    def _record_events(self, rule: Rule, m, i: int) -> None:
        if i != 0:
            self._internal_error("events from subsidiary machine rules are not supported")
            return
        for ev in rule.events:
            ident = m.group(ev.group) if (ev.group is not None and m is not None) else ev.ident
            self.marks.append(Mark(ev.kind, self.out_len, ident))

    # -- stepping ----------------------------------------------------------

    def feed(self, chunk: str, pos: Position | None) -> None:
        lvl = self._levels[0]
        if not lvl.pending and pos is not None:
            self._pos = pos
        lvl.pending += chunk

    def drain(self, flushing: bool, min_level: int = 0) -> None:
        eps_streak = 0
        while self.error is None:
            if len(self._levels) - 1 >= min_level and self._fire_epsilon():
                eps_streak += 1
                if eps_streak > len(self._levels[-1].table.rules) + 4:
                    self._internal_error("epsilon rules never reached a consuming step (table bug)")
                    return
                continue
            eps_streak = 0
            progressed = False
            for i in range(min_level, len(self._levels)):
                if self._consume_at(i, flushing):
                    progressed = True
                    break
            if not progressed:
                return

    def _fire_epsilon(self) -> bool:
        lvl = self._levels[-1]
        rule = lvl.table.first_epsilon(lvl.context)
        if rule is None:
            return False
        _bump()
        if rule.severity is Severity.ERROR:
            self._diag(Severity.ERROR, rule.message)
            return True
        new_ctx = rule.successor.apply_to(lvl.context)
        if new_ctx == lvl.context and rule.action is None:
            self._internal_error(
                f"epsilon rule at {lvl.table.filename}:{rule.line} does not change the context")
            return True
        if rule.events:
            self._record_events(rule, None, len(self._levels) - 1)
        if rule.substitution is not None:
            self._emit_from(len(self._levels) - 1, rule.substitution)
        if rule.severity is Severity.WARNING:
            self._diag(Severity.WARNING, rule.message)
        lvl.context = new_ctx
        if rule.action is not None:
            self._apply_action(len(self._levels) - 1, rule.action)
        return True

    def _apply_action(self, i: int, action: Action) -> None:
        if action.kind == "start":
            if i != len(self._levels) - 1:
                self._internal_error("subsidiary started while another is active (table bug)")
                return
            table = self.machine.subs[action.machine]
            codec = self.machine.codecs[action.codec]
            self._levels.append(_Level(table, action.machine, action.codec, codec, table.start, ""))
        else:
            self._pop_below(i)

    def _pop_below(self, i: int) -> None:
        while len(self._levels) - 1 > i:
            lvl = self._levels.pop()
            if not lvl.table.terminal.matches(lvl.context):
                self._diag(Severity.WARNING,
                           f"nested {lvl.table.name} content ended prematurely: "
                           f"{lvl.table.end_message(lvl.context)}")

    def _consume_at(self, i: int, flushing: bool) -> bool:
        lvl = self._levels[i]
        if not lvl.pending:
            return False
        if not flushing and len(lvl.pending) < lvl.table.lookahead:
            return False
        rule, m = lvl.table.first_regex_match(lvl.context, lvl.pending)
        if rule is not None:
            _bump()
            if i < len(self._levels) - 1:
                self.drain(flushing=True, min_level=i + 1)
                if self.error is not None:
                    return True
            if rule.action is not None and rule.action.kind == "end":
                self._pop_below(i)
            if rule.severity is Severity.ERROR:
                self._diag(Severity.ERROR, rule.message)
                return True
            matched = m.group(0)
            if rule.events:
                self._record_events(rule, m, i)
            self._emit_from(i, rule.substitution if rule.substitution is not None else matched)
            if rule.severity is Severity.WARNING:
                self._diag(Severity.WARNING, rule.message)
            lvl.pending = lvl.pending[m.end():]
            if i == 0:
                self._pos = self._pos.advance(matched)
            lvl.context = rule.successor.apply_to(lvl.context)
            if rule.action is not None and rule.action.kind == "start":
                self._apply_action(i, rule.action)
            return True
        if i < len(self._levels) - 1:
            codec = self._levels[i + 1].codec
            n, out, warn = codec.decode_unit(lvl.pending)
            if n == 0:
                return False
            if warn:
                self._diag(Severity.WARNING, warn)
            self._levels[i + 1].pending += out
            raw = lvl.pending[:n]
            lvl.pending = lvl.pending[n:]
            if i == 0:
                self._pos = self._pos.advance(raw)
            return True
        # Implicit default: copy one character, keep the context.
        _bump()
        ch = lvl.pending[0]
        self._emit_from(i, ch)
        lvl.pending = lvl.pending[1:]
        if i == 0:
            self._pos = self._pos.advance(ch)
        return True

    def freeze(self) -> MachineState:
        root = self._levels[0]
        if self.error is not None:
            return MachineState(context=tuple(root.context), pending="", frames=(),
                                error=self.error, pending_pos=None)
        frames = tuple(
            Frame(lvl.machine_name, lvl.codec_name, tuple(lvl.context), lvl.pending)
            for lvl in self._levels[1:])
        pending = root.pending
        return MachineState(context=tuple(root.context), pending=pending, frames=frames,
                            error=None, pending_pos=self._pos if pending else None)


def step_fixed(machine: Machine, state: MachineState, chunk: str,
               pos: Position | None = None) -> StepResult:
    """Consume a fixed chunk. An errored state absorbs input and emits
    nothing."""
    if state.error is not None:
        return StepResult(state, "", (), [])
    run = _Run(machine, state, pos)
    run.feed(chunk, pos)
    run.drain(flushing=False)
    return StepResult(run.freeze(), "".join(run.out), tuple(run.marks), run.diags)


def finish(machine: Machine, state: MachineState, pos: Position | None = None) -> StepResult:
    """Flush all held-back text. Called at interpolation sites, control-flow
    boundaries, and before the end-context check."""
    if state.error is not None:
        return StepResult(state, "", (), [])
    run = _Run(machine, state, pos)
    run.drain(flushing=True)
    return StepResult(run.freeze(), "".join(run.out), tuple(run.marks), run.diags)


def step_interp(machine: Machine, state: MachineState,
                pos: Position | None = None) -> InterpResult:
    """Resolve an interpolation boundary: flush, fire any interp-trigger
    rules and epsilon transitions, then assemble the escaper chain from the
    innermost machine outward."""
    if state.error is not None:
        return InterpResult(state, state, "", (), (), "", "", [], error=True)
    run = _Run(machine, state, pos)
    run.drain(flushing=True)

    pre_parts: list[str] = []
    fired = 0
    while run.error is None:
        lvl = run._levels[-1]
        rule = lvl.table.first_interp_rule(lvl.context)
        if rule is None:
            break
        _bump()
        fired += 1
        if fired > len(lvl.table.rules) + 1:
            run._internal_error("interpolation rules never settled (table bug)")
            break
        if rule.severity is Severity.ERROR:
            run._diag(Severity.ERROR, rule.message)
            break
        if rule.substitution is not None:
            pre_parts.append(run._encode_text(len(run._levels) - 1, rule.substitution))
        if rule.severity is Severity.WARNING:
            run._diag(Severity.WARNING, rule.message)
        lvl.context = rule.successor.apply_to(lvl.context)
        if rule.action is not None:
            run._apply_action(len(run._levels) - 1, rule.action)
        run.drain(flushing=True)

    site = run.freeze()
    emitted = "".join(run.out)
    emitted_marks = tuple(run.marks)
    if run.error is not None:
        return InterpResult(site, site, emitted, emitted_marks, (), "", "",
                            run.diags, error=True)

    chain: list[str] = []
    map_pres: list[tuple[int, str]] = []
    map_posts: list[tuple[int, str]] = []
    for li in range(len(run._levels) - 1, -1, -1):
        lvl = run._levels[li]
        row = lvl.table.escape_rule_for(lvl.context)
        if row is None:
            if li == len(run._levels) - 1:
                msg = f"interpolation not allowed in this context: ({context_str(lvl.context)})"
            else:
                msg = (f"no escaper mapping for enclosing {lvl.table.name} context "
                       f"({context_str(lvl.context)})")
            run._diag(Severity.ERROR, msg)
            bad = run.freeze()
            return InterpResult(bad, site, emitted, emitted_marks, (), "", "",
                                run.diags, error=True)
        _bump()
        chain.extend(row.escapers)
        if row.pre:
            map_pres.append((li, row.pre))
        if row.post:
            map_posts.append((li, row.post))
        lvl.context = row.successor.apply_to(lvl.context)

    map_pres.sort(key=lambda t: t[0])  # outer delimiters wrap inner ones
    pre = "".join(pre_parts) + "".join(run._encode_text(li, t) for li, t in map_pres)
    post = "".join(run._encode_text(li, t) for li, t in map_posts)
    return InterpResult(run.freeze(), site, emitted, emitted_marks, tuple(chain),
                        pre, post, run.diags, error=False)


def merge(a: MachineState, b: MachineState,
          table: TransitionTable | None = None) -> MachineState:
    """Conservative join of two states at a control-flow merge point.

    Equal states merge to themselves; an errored input is absorbing; any
    disagreement fail-stops with a message naming the conflicting fields.
    """
    if a.error is not None:
        return a
    if b.error is not None:
        return b
    if a == b:
        return a
    conflicts: list[str] = []
    if a.context != b.context:
        names = table.fields if table is not None else None
        for k, (x, y) in enumerate(zip(a.context, b.context)):
            if x != y:
                fname = names[k] if names else f"field {k}"
                conflicts.append(f"{fname}: {x} vs {y}")
    if a.pending != b.pending:
        conflicts.append(f"pending text: {a.pending!r} vs {b.pending!r}")
    if len(a.frames) != len(b.frames):
        conflicts.append(f"subsidiary stack depth: {len(a.frames)} vs {len(b.frames)}")
    else:
        for fa, fb in zip(a.frames, b.frames):
            if fa != fb:
                conflicts.append(
                    f"subsidiary {fa.machine}: ({context_str(fa.context)}) "
                    f"vs {fb.machine}: ({context_str(fb.context)})")
    msg = "context conflict at join: " + "; ".join(conflicts)
    return MachineState(context=a.context, pending="", frames=(), error=msg)


def is_valid_end(machine: Machine, state: MachineState) -> tuple[bool, str | None]:
    """Whether composed content may validly end in this state."""
    if state.error is not None:
        return False, state.error
    if state.pending or any(fr.pending for fr in state.frames):
        return False, "unprocessed trailing text (state was not flushed)"
    table = machine.root_table
    if not table.terminal.matches(state.context):
        return False, table.end_message(state.context)
    if state.frames:
        return False, f"content ends inside nested {state.frames[-1].machine} content"
    return True, None


def state_str(state: MachineState) -> str:
    """Render a state the way annotations print it: ``(Pcdata, _, _, _)``."""
    if state.error is not None:
        return f"<error: {state.error}>"
    out = f"({context_str(state.context)})"
    for fr in state.frames:
        out += f" / {fr.machine}({context_str(fr.context)})"
    return out
