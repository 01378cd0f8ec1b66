"""Transition table model, file format parser, and static validation.

Tables are pipe-delimited: each rule row is

    | pattern | trigger | substitution | successor[; subsidiary-action] | [severity: message] |

where the trigger is a backtick-quoted regex anchored at the cursor, the
keyword ``interp`` (an interpolated value is arriving), or empty (an epsilon
transition). A preamble declares the context fields and their vocabularies,
regex macros, the start and terminal contexts, and the escaper map. Rule
order is significant: the first matching rule wins, always.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from . import marks
from .diagnostics import Diagnostic, Position, Severity, error, warning

WILDCARD = "_"

TRIGGER_REGEX = "regex"
TRIGGER_INTERP = "interp"
TRIGGER_EPSILON = "epsilon"

DEFAULT_LOOKAHEAD = 16

_BACKREF_RE = re.compile(r"\\[1-9]|\(\?P=")


@dataclass(frozen=True)
class Pattern:
    """One slot per context field; a slot is a vocabulary value or ``_``."""

    slots: tuple[str, ...]

    def matches(self, context: tuple[str, ...]) -> bool:
        return all(s == WILDCARD or s == c for s, c in zip(self.slots, context))

    def apply_to(self, context: tuple[str, ...]) -> tuple[str, ...]:
        """As a successor: wildcard slots keep the current field."""
        return tuple(c if s == WILDCARD else s for s, c in zip(self.slots, context))

    def __str__(self) -> str:
        return ", ".join(self.slots)


@dataclass(frozen=True)
class Event:
    kind: str
    ident: str | None = None
    group: int | None = None


@dataclass(frozen=True)
class Action:
    kind: str  # "start" | "end"
    machine: str | None = None
    codec: str | None = None


@dataclass(frozen=True)
class Rule:
    line: int
    pattern: Pattern
    trigger: str
    regex_src: str | None
    regex: "re.Pattern | None"
    substitution: str | None
    events: tuple[Event, ...]
    successor: Pattern
    action: Action | None
    severity: Severity | None
    message: str | None


@dataclass(frozen=True)
class EscapeRule:
    """Escaper map row: what to do when an interpolation arrives in a
    matching context (pre/post text wraps the escaped value)."""

    line: int
    pattern: Pattern
    pre: str
    escapers: tuple[str, ...]
    post: str
    successor: Pattern


@dataclass
class TransitionTable:
    name: str
    filename: str
    fields: tuple[str, ...]
    vocab: dict[str, tuple[str, ...]]
    start: tuple[str, ...]
    terminal: Pattern
    lookahead: int
    macros: dict[str, str]
    uses: tuple[str, ...]
    endmsgs: dict[str, str]
    rules: tuple[Rule, ...]
    escapes: tuple[EscapeRule, ...]
    regex_rules: tuple[Rule, ...] = field(default=())
    epsilon_rules: tuple[Rule, ...] = field(default=())
    interp_rules: tuple[Rule, ...] = field(default=())

    def __post_init__(self):
        self.regex_rules = tuple(r for r in self.rules if r.trigger == TRIGGER_REGEX)
        self.epsilon_rules = tuple(r for r in self.rules if r.trigger == TRIGGER_EPSILON)
        self.interp_rules = tuple(r for r in self.rules if r.trigger == TRIGGER_INTERP)

    def first_regex_match(self, context, text):
        for rule in self.regex_rules:
            if not rule.pattern.matches(context):
                continue
            m = rule.regex.match(text)
            if m and m.end() > 0:
                return rule, m
        return None, None

    def first_epsilon(self, context):
        for rule in self.epsilon_rules:
            if rule.pattern.matches(context):
                return rule
        return None

    def first_interp_rule(self, context):
        for rule in self.interp_rules:
            if rule.pattern.matches(context):
                return rule
        return None

    def escape_rule_for(self, context):
        for row in self.escapes:
            if row.pattern.matches(context):
                return row
        return None

    def end_message(self, context) -> str:
        state = context[0]
        if state in self.endmsgs:
            return self.endmsgs[state]
        return f"content may not end in context ({context_str(context)})"

    def all_contexts(self):
        return itertools.product(*(self.vocab[f] for f in self.fields))


def context_str(context: tuple[str, ...]) -> str:
    return ", ".join(WILDCARD if v == "None" else v for v in context)


def _split_row(line: str) -> list[str] | None:
    """Split a ``|``-delimited row, ignoring pipes inside backticks."""
    stripped = line.strip()
    if not stripped.startswith("|"):
        return None
    cells, cur, ticked = [], [], False
    for ch in stripped:
        if ch == "`":
            ticked = not ticked
            cur.append(ch)
        elif ch == "|" and not ticked:
            cells.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    cells.append("".join(cur).strip())
    # drop the empty cells produced by the leading and trailing pipes
    if cells and cells[0] == "":
        cells = cells[1:]
    if cells and cells[-1] == "":
        cells = cells[:-1]
    return cells


_EVENT_RE = re.compile(r"!([A-Za-z]+)(?:\(([^()]*)\))?")


class _Parser:
    def __init__(self, text: str, filename: str, escaper_names):
        self.lines = text.splitlines()
        self.filename = filename
        self.escaper_names = escaper_names
        self.diags: list[Diagnostic] = []
        self.name = None
        self.fields: tuple[str, ...] | None = None
        self.vocab: dict[str, tuple[str, ...]] = {}
        self.start = None
        self.terminal = None
        self.lookahead = DEFAULT_LOOKAHEAD
        self.macros: dict[str, str] = {}
        self.uses: list[str] = []
        self.endmsgs: dict[str, str] = {}
        self.rules: list[Rule] = []
        self.escapes: list[EscapeRule] = []

    def err(self, lineno: int, msg: str):
        self.diags.append(error(msg, Position(self.filename, lineno, 1)))

    def parse(self) -> TransitionTable | None:
        section = None
        for idx, raw in enumerate(self.lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "[rules]":
                section = "rules"
                continue
            if line == "[escapers]":
                section = "escapers"
                continue
            if line.startswith("|"):
                cells = _split_row(raw)
                if section == "rules":
                    self._parse_rule(idx, cells)
                elif section == "escapers":
                    self._parse_escape(idx, cells)
                else:
                    self.err(idx, "table row outside of a [rules] or [escapers] section")
                continue
            self._parse_directive(idx, line)

        if self.name is None:
            self.err(0, "missing 'machine' directive")
        if self.fields is None:
            self.err(0, "missing 'fields' directive")
        if self.start is None:
            self.err(0, "missing 'start' directive")
        if any(d.severity is Severity.ERROR for d in self.diags):
            return None
        if self.terminal is None:
            self.terminal = Pattern((WILDCARD,) * len(self.fields))
        return TransitionTable(
            name=self.name,
            filename=self.filename,
            fields=self.fields,
            vocab=self.vocab,
            start=self.start,
            terminal=self.terminal,
            lookahead=self.lookahead,
            macros=dict(self.macros),
            uses=tuple(self.uses),
            endmsgs=dict(self.endmsgs),
            rules=tuple(self.rules),
            escapes=tuple(self.escapes),
        )

    def _parse_directive(self, idx: int, line: str):
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "machine":
            self.name = rest
        elif word == "fields":
            self.fields = tuple(rest.split())
        elif word == "values":
            fname, _, vals = rest.partition(":")
            fname = fname.strip()
            if self.fields is None or fname not in self.fields:
                self.err(idx, f"values for undeclared field {fname!r}")
                return
            self.vocab[fname] = tuple(vals.split())
        elif word == "start":
            ctx = tuple(s.strip() for s in rest.split(","))
            pat = self._parse_pattern(idx, rest, allow_wildcard=False)
            if pat is not None:
                self.start = ctx
        elif word == "terminal":
            self.terminal = self._parse_pattern(idx, rest)
        elif word == "lookahead":
            try:
                self.lookahead = int(rest)
            except ValueError:
                self.err(idx, f"bad lookahead value {rest!r}")
        elif word == "macro":
            mname, _, body = rest.partition("=")
            self.macros[mname.strip()] = body.strip()
        elif word == "uses":
            self.uses.extend(rest.split())
        elif word == "endmsg":
            state, _, msg = rest.partition(":")
            self.endmsgs[state.strip()] = msg.strip()
        else:
            self.err(idx, f"unknown directive {word!r}")

    def _parse_pattern(self, idx: int, text: str, allow_wildcard=True) -> Pattern | None:
        slots = tuple(s.strip() for s in text.split(","))
        if self.fields is None:
            self.err(idx, "pattern before 'fields' directive")
            return None
        if len(slots) != len(self.fields):
            self.err(idx, f"pattern {text!r} has {len(slots)} slots; table declares {len(self.fields)} fields")
            return None
        for slot, fname in zip(slots, self.fields):
            if slot == WILDCARD:
                if not allow_wildcard:
                    self.err(idx, f"wildcard not allowed in {text!r}")
                    return None
                continue
            if slot not in self.vocab.get(fname, ()):
                self.err(idx, f"unknown {fname} name {slot!r}")
                return None
        return Pattern(slots)

    def _expand_macros(self, idx: int, src: str) -> str | None:
        def repl(m):
            name = m.group(1)
            if name not in self.macros:
                missing.append(name)
                return ""
            return "(?:" + self.macros[name] + ")"

        missing: list[str] = []
        out = re.sub(r"\{\{(\w+)\}\}", repl, src)
        if missing:
            self.err(idx, f"unknown macro {missing[0]!r}")
            return None
        return out

    def _parse_regex(self, idx: int, src: str) -> "re.Pattern | None":
        expanded = self._expand_macros(idx, src)
        if expanded is None:
            return None
        if _BACKREF_RE.search(expanded):
            self.err(idx, f"backreferences are not supported: {src!r}")
            return None
        try:
            compiled = re.compile(expanded)
        except re.error as exc:
            self.err(idx, f"malformed regex {src!r}: {exc}")
            return None
        if compiled.match(""):
            self.err(idx, f"regex {src!r} may match an empty prefix")
            return None
        return compiled

    def _tick_text(self, cell: str) -> str | None:
        """Unwrap a backtick-quoted cell; None when the cell is empty."""
        if cell == "":
            return None
        if cell.startswith("`") and cell.endswith("`") and len(cell) >= 2:
            return cell[1:-1]
        return cell

    def _parse_substitution(self, idx: int, cell: str):
        """Substitution cell: optional backtick text plus zero or more
        ``!Event`` entries. Events imply erasing the matched text."""
        text: str | None = None
        events: list[Event] = []
        rest = cell.strip()
        if rest.startswith("`"):
            end = rest.find("`", 1)
            if end < 0:
                self.err(idx, "unterminated backtick in substitution")
                return None, ()
            text = rest[1:end]
            rest = rest[end + 1 :].strip()
        while rest:
            m = _EVENT_RE.match(rest)
            if not m:
                self.err(idx, f"bad substitution cell {cell!r}")
                return None, ()
            kind, arg = m.group(1), m.group(2)
            if kind not in marks.MARK_KINDS:
                self.err(idx, f"unknown event kind {kind!r}")
                return None, ()
            if arg and arg.startswith("$"):
                events.append(Event(kind, group=int(arg[1:])))
            else:
                events.append(Event(kind, ident=arg or None))
            rest = rest[m.end() :].strip()
        if events and text is None:
            text = ""
        return text, tuple(events)

    def _parse_successor(self, idx: int, cell: str):
        body, _, action_src = cell.partition(";")
        succ = self._parse_pattern(idx, body.strip())
        action = None
        action_src = action_src.strip()
        if action_src:
            m = re.fullmatch(r"start\(\s*(\w+)\s*,\s*(\w+)\s*\)", action_src)
            if m:
                action = Action("start", machine=m.group(1), codec=m.group(2))
            elif action_src == "end":
                action = Action("end")
            else:
                self.err(idx, f"bad subsidiary action {action_src!r}")
        return succ, action

    def _parse_rule(self, idx: int, cells: list[str]):
        if len(cells) not in (4, 5):
            self.err(idx, f"rule row has {len(cells)} columns; expected 4 or 5")
            return
        pattern = self._parse_pattern(idx, cells[0])
        if pattern is None:
            return
        trig_cell = cells[1]
        regex = regex_src = None
        if trig_cell == "":
            trigger = TRIGGER_EPSILON
        elif trig_cell == "interp":
            trigger = TRIGGER_INTERP
        else:
            trigger = TRIGGER_REGEX
            regex_src = self._tick_text(trig_cell)
            regex = self._parse_regex(idx, regex_src)
            if regex is None:
                return
        substitution, events = self._parse_substitution(idx, cells[2])
        successor, action = self._parse_successor(idx, cells[3])
        if successor is None:
            return
        severity = message = None
        if len(cells) == 5 and cells[4]:
            m = re.fullmatch(r"([WE]):\s*(.*)", cells[4])
            if not m:
                self.err(idx, f"bad diagnostic cell {cells[4]!r}")
                return
            severity = Severity.WARNING if m.group(1) == "W" else Severity.ERROR
            message = m.group(2)
        self.rules.append(
            Rule(idx, pattern, trigger, regex_src, regex, substitution, events,
                 successor, action, severity, message)
        )

    def _parse_escape(self, idx: int, cells: list[str]):
        if len(cells) != 5:
            self.err(idx, f"escaper row has {len(cells)} columns; expected 5")
            return
        pattern = self._parse_pattern(idx, cells[0])
        if pattern is None:
            return
        pre = self._tick_text(cells[1]) or ""
        names = tuple(cells[2].split())
        for name in names:
            if name not in self.escaper_names:
                self.err(idx, f"unknown escaper name {name!r}")
                return
        post = self._tick_text(cells[3]) or ""
        successor = self._parse_pattern(idx, cells[4])
        if successor is None:
            return
        self.escapes.append(EscapeRule(idx, pattern, pre, names, post, successor))


def parse_table(text: str, filename: str = "<table>", escaper_names=None):
    """Parse a transition table. Returns (table, diagnostics); the table is
    None when any diagnostic is an error."""
    if escaper_names is None:
        from . import escapers

        escaper_names = escapers.known_names()
    parser = _Parser(text, filename, escaper_names)
    table = parser.parse()
    return table, parser.diags


_VALIDATE_PRODUCT_CAP = 50_000


def validate_table(table: TransitionTable) -> list[Diagnostic]:
    """Static lint of a parsed table: epsilon cycles, shadowed rules,
    undeclared subsidiary machines."""
    diags: list[Diagnostic] = []
    pos = lambda line: Position(table.filename, line, 1)  # noqa: E731

    for rule in table.rules:
        if rule.action and rule.action.kind == "start":
            if rule.action.machine not in table.uses:
                diags.append(error(
                    f"subsidiary machine {rule.action.machine!r} is not declared in 'uses'",
                    pos(rule.line)))

    seen: dict[tuple, int] = {}
    for rule in table.rules:
        key = (rule.pattern.slots, rule.trigger, rule.regex_src)
        if key in seen:
            diags.append(warning(
                f"rule is shadowed by the identical rule at line {seen[key]}",
                pos(rule.line)))
        else:
            seen[key] = rule.line

    total = 1
    for f in table.fields:
        total *= max(1, len(table.vocab.get(f, ())))
    if table.epsilon_rules and total <= _VALIDATE_PRODUCT_CAP:
        reported: set[tuple] = set()
        for ctx in table.all_contexts():
            cur = ctx
            chain: list[int] = []
            visited = {cur}
            while True:
                rule = table.first_epsilon(cur)
                if rule is None or rule.action is not None:
                    break
                nxt = rule.successor.apply_to(cur)
                chain.append(rule.line)
                if nxt == cur:
                    key = (rule.line,)
                    if key not in reported:
                        reported.add(key)
                        diags.append(error(
                            "epsilon rule produces a successor context identical to the current context",
                            pos(rule.line)))
                    break
                if nxt in visited:
                    key = tuple(sorted(set(chain)))
                    if key not in reported:
                        reported.add(key)
                        lines = ", ".join(str(n) for n in key)
                        diags.append(error(f"epsilon cycle through rules at lines {lines}", pos(chain[0])))
                    break
                visited.add(nxt)
                cur = nxt
                if len(chain) > 100:
                    break
    return diags
