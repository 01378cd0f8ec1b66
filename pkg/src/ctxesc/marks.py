"""Buffer marks delimiting translatable messages and their interpolations."""

from __future__ import annotations

from dataclasses import dataclass

MSG_START = "MsgStart"
MSG_END = "MsgEnd"
EXPR_START = "ExprStart"
EXPR_END = "ExprEnd"

MARK_KINDS = (MSG_START, MSG_END, EXPR_START, EXPR_END)


@dataclass(frozen=True)
class Mark:
    kind: str
    offset: int
    ident: str | None = None

    def shifted(self, base: int) -> "Mark":
        return Mark(self.kind, self.offset + base, self.ident)
