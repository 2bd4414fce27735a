"""Tokenizer for the detection-pattern language."""

from __future__ import annotations

from typing import NamedTuple

from ..errors import PatternSyntaxError

KEYWORD = "keyword"
IDENT = "identifier"
ACCESSOR = "accessor"
TEXT = "text"
INT = "integer"
OP = "operator"
PUNCT = "punctuation"

KEYWORDS = frozenset({
    "select", "istream", "from", "pattern", "every", "where",
    "and", "or", "sec", "true", "false",
})
NAMESPACED = frozenset({"timer:within", "win:time"})

_TWO_CHAR_OPS = ("->", ">=", "<=", "!=")
_ONE_CHAR_OPS = "><=+-"
_PUNCT = "()[]*,"


class Token(NamedTuple):
    kind: str
    value: object
    line: int
    column: int

    def __repr__(self):
        return f"{self.kind} {self.value!r}@{self.line}:{self.column}"


def _is_ident_start(c: str) -> bool:
    return c.isascii() and (c.isalpha() or c == "_")


def _is_ident_char(c: str) -> bool:
    return c.isascii() and (c.isalnum() or c == "_")


def tokenize(text: str) -> list[Token]:
    """Split pattern source into tokens; comments and whitespace are dropped.

    Keywords are case-insensitive and normalised to lower case.  A ``.``
    directly followed by a name forms a single accessor token.
    """
    tokens: list[Token] = []
    i = 0
    n = len(text)
    line = 1
    line_start = 0

    def err(msg, at):
        raise PatternSyntaxError(msg, line, at - line_start + 1)

    while i < n:
        c = text[i]
        col = i - line_start + 1
        if c == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if c.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if _is_ident_start(c):
            j = i + 1
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            if j < n and text[j] == ":":
                k = j + 1
                while k < n and _is_ident_char(text[k]):
                    k += 1
                qualified = text[i:k].lower()
                if qualified not in NAMESPACED:
                    err(f"unknown namespaced name {text[i:k]!r}", i)
                tokens.append(Token(KEYWORD, qualified, line, col))
                i = k
                continue
            if word.lower() in KEYWORDS:
                tokens.append(Token(KEYWORD, word.lower(), line, col))
            else:
                tokens.append(Token(IDENT, word, line, col))
            i = j
            continue
        if c.isdigit() and c.isascii():
            j = i + 1
            while j < n and text[j].isdigit() and text[j].isascii():
                j += 1
            tokens.append(Token(INT, int(text[i:j]), line, col))
            i = j
            continue
        if c == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n or text[j] == "\n":
                    err("unterminated text literal", i)
                ch = text[j]
                if ch == "\\" and j + 1 < n and text[j + 1] in "'\\":
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if ch == "'":
                    break
                buf.append(ch)
                j += 1
            tokens.append(Token(TEXT, "".join(buf), line, col))
            i = j + 1
            continue
        if c == ".":
            if i + 1 < n and _is_ident_start(text[i + 1]):
                j = i + 2
                while j < n and _is_ident_char(text[j]):
                    j += 1
                tokens.append(Token(ACCESSOR, text[i + 1:j], line, col))
                i = j
                continue
            err("illegal character '.'", i)
        two = text[i:i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token(OP, two, line, col))
            i += 2
            continue
        if c in _ONE_CHAR_OPS:
            tokens.append(Token(OP, c, line, col))
            i += 1
            continue
        if c in _PUNCT:
            tokens.append(Token(PUNCT, c, line, col))
            i += 1
            continue
        err(f"illegal character {c!r}", i)
    return tokens
