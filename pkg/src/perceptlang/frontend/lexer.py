"""Tokenizer with synthetic INDENT/DEDENT tokens.

Leading whitespace is measured in columns (a tab advances to the next
multiple of 4). Newlines inside brackets are ignored, as are blank and
comment-only lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from ..errors import LexError

TAB_WIDTH = 4

KEYWORDS = frozenset(
    """
    module ontology agent behaviour cyclic one shot uses for extends with as of
    do on when property procedure send to activate deactivate invoke matches
    and or not true false if else while log concept proposition predicate
    action content sender performative this
    boolean integer float double text string any aid list map
    """.split()
)

OPERATORS = ("<=", ">=", "!=", "(", ")", "[", "]", "{", "}", ",", ":", "=", "<", ">", "+", "-", "*", "/", ".", "≠", "≤", "≥")
_OP_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">="}


class Kind(Enum):
    KEYWORD = "keyword"
    IDENT = "identifier"
    INT = "integer-literal"
    FLOAT = "float-literal"
    TEXT = "text-literal"
    OP = "operator"
    NEWLINE = "newline"
    INDENT = "indent"
    DEDENT = "dedent"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: Kind
    lexeme: str
    line: int
    col: int

    def is_kw(self, *words: str) -> bool:
        return self.kind is Kind.KEYWORD and self.lexeme in words

    def is_op(self, *ops: str) -> bool:
        return self.kind is Kind.OP and self.lexeme in ops

    def __repr__(self) -> str:
        return f"Token({self.kind.value}, {self.lexeme!r}, {self.line}:{self.col})"


_NUMBER = re.compile(r"[0-9]+(\.[0-9]+)?([eE][+-]?[0-9]+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "0": "\0"}


def _indent_width(prefix: str) -> int:
    col = 0
    for ch in prefix:
        if ch == "\t":
            col = (col // TAB_WIDTH + 1) * TAB_WIDTH
        else:
            col += 1
    return col


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    levels = [0]
    depth = 0  # bracket nesting
    lines = source.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    last_line = len(lines)

    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.lstrip(" \t\f")
        if depth == 0:
            if not stripped or stripped.startswith("#"):
                continue
            width = _indent_width(raw[: len(raw) - len(stripped)])
            if width > levels[-1]:
                levels.append(width)
                tokens.append(Token(Kind.INDENT, "", lineno, 1))
            else:
                while width < levels[-1]:
                    levels.pop()
                    tokens.append(Token(Kind.DEDENT, "", lineno, 1))
                if width != levels[-1]:
                    raise LexError("inconsistent dedent: no matching indentation level", lineno, 1, file)
        pos = len(raw) - len(stripped)
        n = len(raw)
        while pos < n:
            ch = raw[pos]
            col = pos + 1
            if ch in " \t\f":
                pos += 1
                continue
            if ch == "#":
                break
            if ch == '"':
                end = _scan_text(raw, pos, lineno, file)
                tokens.append(Token(Kind.TEXT, raw[pos:end], lineno, col))
                pos = end
                continue
            if "0" <= ch <= "9":
                m = _NUMBER.match(raw, pos)
                lexeme = m.group(0)
                kind = Kind.FLOAT if (m.group(1) or m.group(2)) else Kind.INT
                tokens.append(Token(kind, lexeme, lineno, col))
                pos = m.end()
                continue
            m = _IDENT.match(raw, pos)
            if m:
                word = m.group(0)
                kind = Kind.KEYWORD if word in KEYWORDS else Kind.IDENT
                tokens.append(Token(kind, word, lineno, col))
                pos = m.end()
                continue
            for op in OPERATORS:
                if raw.startswith(op, pos):
                    if op in "([{":
                        depth += 1
                    elif op in ")]}":
                        depth = max(0, depth - 1)
                    tokens.append(Token(Kind.OP, _OP_ALIASES.get(op, op), lineno, col))
                    pos += len(op)
                    break
            else:
                raise LexError(f"unexpected character {ch!r}", lineno, col, file)
        if depth == 0 and tokens and tokens[-1].kind not in (Kind.NEWLINE, Kind.INDENT, Kind.DEDENT):
            tokens.append(Token(Kind.NEWLINE, "\n", lineno, len(raw) + 1))

    if depth > 0:
        raise LexError("unclosed bracket at end of input", last_line, 1, file)
    for _ in levels[1:]:
        tokens.append(Token(Kind.DEDENT, "", last_line + 1, 1))
    tokens.append(Token(Kind.EOF, "", last_line + 1, 1))
    return tokens


def _scan_text(raw: str, pos: int, lineno: int, file: str) -> int:
    """Validate the text literal starting at ``pos``; return the index past its closing quote."""
    start = pos
    pos += 1
    while pos < len(raw):
        ch = raw[pos]
        if ch == '"':
            return pos + 1
        if ch == "\\":
            esc = raw[pos + 1 : pos + 2]
            if esc == "u" and re.fullmatch(r"[0-9a-fA-F]{4}", raw[pos + 2 : pos + 6]):
                pos += 6
                continue
            if esc not in _ESCAPES:
                if not esc:
                    break
                raise LexError(f"invalid escape sequence \\{esc}", lineno, pos + 1, file)
            pos += 2
            continue
        pos += 1
    raise LexError("unterminated text literal", lineno, start + 1, file)


def unquote(lexeme: str) -> str:
    """Decode the body of a text-literal lexeme (quotes included)."""
    body = lexeme[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            esc = body[i + 1]
            if esc == "u":
                out.append(chr(int(body[i + 2 : i + 6], 16)))
                i += 6
                continue
            out.append(_ESCAPES[esc])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def quote(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch == '"' or ch == "\\":
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\0":
            out.append("\\0")
        elif ord(ch) < 0x20 or ch in "\u2028\u2029\x85\x0b\x0c\x1c\x1d\x1e":
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
