"""Tokenizer for the supported Verilog subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import VerilogSyntaxError

# Longest first so e.g. '===' is not read as '==' '='.
_PUNCTUATION = [
    "===", "!==", "<<<", ">>>",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "?", "~", "!", "&", "|",
    "^", "+", "-", "*", "/", "#", "@", "=", "<", ">", ".",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<directive>`[A-Za-z_][A-Za-z0-9_]*[^\n]*)
  | (?P<sized>\d*\s*'\s*[sS]?[bBdDhHoO]\s*[0-9a-fA-FxXzZ_?]+)
  | (?P<unbased>'[01xXzZ])
  | (?P<number>\d[\d_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>\$?[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<punct>===|!==|<<<|>>>|==|!=|<=|>=|&&|\|\||<<|>>|[()\[\]{},;:?~!&|^+\-*/#@=<>.])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'number' | 'sized' | 'unbased' | 'string' | 'punct' | 'eof'
    text: str
    line: int


def tokenize(source: str, filename: str = "<source>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            snippet = source[pos : pos + 20].splitlines()[0]
            raise VerilogSyntaxError(
                f"{filename}:{line}: unrecognized input near {snippet!r}"
            )
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "line_comment", "block_comment", "directive"):
            tokens.append(Token(kind, text, line))
        line += text.count("\n")
        pos = m.end()
    tokens.append(Token("eof", "", line))
    return tokens
