"""Tokenizer for module files and commands.

The surface syntax is free-form: identifiers are maximal runs of
non-whitespace characters, except that the special characters
``( ) [ ] { } ,`` always split off as single-character tokens unless
escaped with a backquote inside an identifier.  ``***`` and ``---``
start comments running to end of line.  Double-quoted strings are kept
as single tokens (used by ``print`` attributes).
"""

from __future__ import annotations

from dataclasses import dataclass

SPECIAL_CHARS = set("()[]{},")


class LexError(Exception):
    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} at line {line}, column {column}"
        super().__init__(message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    text: str
    kind: str  # 'identifier' | 'special' | 'string'
    line: int = 0
    column: int = 0

    def __repr__(self):
        return f"Token({self.text!r})"


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, dropping comments."""
    tokens: list[Token] = []
    i, n = 0, len(source)
    line, col = 1, 1

    def advance(k=1):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance()
            continue
        if source.startswith("***", i) or source.startswith("---", i):
            while i < n and source[i] != "\n":
                advance()
            continue
        if c == '"':
            start_line, start_col = line, col
            j = i + 1
            while j < n and source[j] != '"':
                j += 1
            if j >= n:
                raise LexError("unterminated string literal", start_line, start_col)
            text = source[i : j + 1]
            tokens.append(Token(text, "string", start_line, start_col))
            advance(j + 1 - i)
            continue
        if c in SPECIAL_CHARS:
            tokens.append(Token(c, "special", line, col))
            advance()
            continue
        # identifier: run until whitespace or unescaped special char
        start_line, start_col = line, col
        j = i
        chars = []
        while j < n:
            d = source[j]
            if d in " \t\r\n":
                break
            if d == "`":
                if j + 1 >= n:
                    raise LexError("unterminated backquote escape", line, col)
                chars.append(d)
                chars.append(source[j + 1])
                j += 2
                continue
            if d in SPECIAL_CHARS:
                break
            chars.append(d)
            j += 1
        text = "".join(chars)
        tokens.append(Token(text, "identifier", start_line, start_col))
        advance(j - i)
    return tokens


def unescape(text: str) -> str:
    """Remove backquote escapes: ``a`(b`)`` becomes ``a(b)``."""
    out = []
    i = 0
    while i < len(text):
        if text[i] == "`" and i + 1 < len(text):
            out.append(text[i + 1])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def split_mixfix(name: str) -> list[str]:
    """Split an operator name into mixfix pattern pieces.

    Underscores are argument placeholders (returned as ``"_"``);
    backquote-escaped specials become single-character literal pieces;
    other maximal runs stay together.  ``to_from_ack_`` gives
    ``['to', '_', 'from', '_', 'ack', '_']``.
    """
    pieces: list[str] = []
    cur: list[str] = []

    def flush():
        if cur:
            pieces.append("".join(cur))
            cur.clear()

    i = 0
    while i < len(name):
        c = name[i]
        if c == "_":
            flush()
            pieces.append("_")
            i += 1
        elif c == "`" and i + 1 < len(name):
            flush()
            pieces.append(name[i + 1])
            i += 2
        else:
            cur.append(c)
            i += 1
    flush()
    return pieces


def render_tokens(tokens: list[Token]) -> str:
    return " ".join(t.text for t in tokens)
