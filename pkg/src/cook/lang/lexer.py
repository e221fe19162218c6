"""Tokenizer for the Carib surface syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SyntaxDiagnostic

KEYWORDS = frozenset(
    {
        "class",
        "interface",
        "extends",
        "implements",
        "method",
        "extern",
        "var",
        "if",
        "then",
        "else",
        "while",
        "do",
        "return",
        "null",
        "bottom",
    }
)

# `ret` names the return slot in summaries; keep it out of user programs.
RESERVED = KEYWORDS | {"ret"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<partref>part\#\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op>:=|::|<=|>=|==|!=|\[\]|[{}()\[\],;:.<>+\-*/%!#])
""",
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ident | int | partref | keyword | op | eof
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise SyntaxDiagnostic(
                f"unexpected character {source[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            col = m.start() - line_start + 1
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1))
    return tokens
