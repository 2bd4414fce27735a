"""Recursive-descent parser for detection patterns.

Pattern operators bind, from loosest to tightest: ``or``, ``and``, ``->``.
``every`` applies to the single term that follows it, and
``(...) where timer:within(N sec)`` attaches a completion deadline to the
parenthesised sub-pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import PatternError, PatternSyntaxError
from . import lexer
from .ast import (
    ACCESSORS, AndNode, Arith, BoolLit, BoolOp, Compare, EveryNode, FilterAtom,
    FilterNode, FollowedBy, IntLit, OrNode, PatternAst, Ref, TextLit, WithinNode,
)
from .lexer import Token, tokenize

CMP_OPS = (">", "<", ">=", "<=", "=", "!=")
_ORDERING = (">", "<", ">=", "<=")
_ACCESSOR_TYPES = {"value": "int", "measure": "text", "kind": "bool"}
_EOF = Token("end of input", None, 0, 0)


class _Parser:
    def __init__(self, tokens: list[Token], line_offset: int = 0):
        self.toks = tokens
        self.pos = 0
        self.line_offset = line_offset
        self.bound: dict[str, Token] = {}

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        i = self.pos + k
        if i < len(self.toks):
            return self.toks[i]
        if self.toks:
            last = self.toks[-1]
            return Token(_EOF.kind, None, last.line, last.column + 1)
        return Token(_EOF.kind, None, 1, 1)

    def at(self, kind: str, value=None, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == kind and (value is None or t.value == value)

    def advance(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None, expected=()):
        tok = tok or self.peek()
        line = tok.line + self.line_offset if tok.line else None
        return PatternSyntaxError(message, line, tok.column, expected)

    def unexpected(self, *expected: str):
        t = self.peek()
        found = t.kind if t.value is None else f"{t.value!r}"
        return self.error(f"unexpected {found}", t, expected)

    def expect(self, kind: str, value=None) -> Token:
        if not self.at(kind, value):
            raise self.unexpected(repr(value) if value is not None else kind)
        return self.advance()

    # -- query -------------------------------------------------------------

    def query(self, name: str) -> PatternAst:
        self.expect(lexer.KEYWORD, "select")
        if self.at(lexer.KEYWORD, "istream"):
            self.advance()
        self.expect(lexer.PUNCT, "*")
        self.expect(lexer.KEYWORD, "from")
        self.expect(lexer.KEYWORD, "pattern")
        self.expect(lexer.PUNCT, "[")
        expr = self.pattern_or()
        self.expect(lexer.PUNCT, "]")
        window = None
        if self.at(lexer.KEYWORD, "win:time"):
            self.advance()
            window = self.duration()
        where = None
        if self.at(lexer.KEYWORD, "where"):
            self.advance()
            start = self.peek()
            where, typ = self.bool_or()
            if typ != "bool":
                raise self.error("where clause must be a boolean condition", start)
        if self.pos < len(self.toks):
            raise self.unexpected("'where'", "'win:time'", "end of input")
        return PatternAst(name, expr, window, where)

    def duration(self) -> int:
        self.expect(lexer.PUNCT, "(")
        tok = self.expect(lexer.INT)
        if tok.value <= 0:
            raise self.error("duration must be positive", tok)
        self.expect(lexer.KEYWORD, "sec")
        self.expect(lexer.PUNCT, ")")
        return tok.value * 1000

    # -- pattern expressions -----------------------------------------------

    def pattern_or(self):
        left = self.pattern_and()
        while self.at(lexer.KEYWORD, "or"):
            self.advance()
            left = OrNode(left, self.pattern_and())
        return left

    def pattern_and(self):
        left = self.pattern_seq()
        while self.at(lexer.KEYWORD, "and"):
            self.advance()
            left = AndNode(left, self.pattern_seq())
        return left

    def pattern_seq(self):
        left = self.pattern_unit()
        while self.at(lexer.OP, "->"):
            self.advance()
            left = FollowedBy(left, self.pattern_unit())
        return left

    def pattern_unit(self):
        if self.at(lexer.KEYWORD, "every"):
            self.advance()
            return EveryNode(self.pattern_unit())
        if self.at(lexer.PUNCT, "("):
            self.advance()
            inner = self.pattern_or()
            self.expect(lexer.PUNCT, ")")
            if self.at(lexer.KEYWORD, "where") and self.at(lexer.KEYWORD, "timer:within", 1):
                self.advance()
                self.advance()
                return WithinNode(inner, self.duration())
            return inner
        if self.at(lexer.IDENT):
            return self.binding()
        raise self.unexpected("'every'", "'('", "identifier")

    def binding(self) -> FilterNode:
        var_tok = self.advance()
        var = var_tok.value
        if var in self.bound:
            raise self.error(f"variable {var!r} is bound more than once", var_tok)
        self.bound[var] = var_tok
        self.expect(lexer.OP, "=")
        type_tok = self.expect(lexer.IDENT)
        if type_tok.value != "Event":
            raise self.error(f"unknown event type {type_tok.value!r}", type_tok, ("'Event'",))
        self.expect(lexer.PUNCT, "(")
        atoms = [self.filter_atom(var)]
        while self.at(lexer.KEYWORD, "and"):
            self.advance()
            atoms.append(self.filter_atom(var))
        self.expect(lexer.PUNCT, ")")
        return FilterNode(var, tuple(atoms))

    def filter_atom(self, var: str) -> FilterAtom:
        tok = self.expect(lexer.IDENT)
        if tok.value != var:
            raise self.error(f"filter of {var!r} may only reference {var!r}", tok)
        accessor, arg = self.accessor_call()
        op_tok = self.peek()
        if not (op_tok.kind == lexer.OP and op_tok.value in CMP_OPS):
            raise self.unexpected(*(repr(o) for o in CMP_OPS))
        self.advance()
        lit_tok = self.peek()
        lit, typ = self.literal()
        want = _ACCESSOR_TYPES[accessor]
        if typ != want:
            raise self.error(f"{accessor} compares against {want}, got {typ}", lit_tok)
        if want != "int" and op_tok.value in _ORDERING:
            raise self.error(f"operator {op_tok.value!r} needs integer operands", op_tok)
        return FilterAtom(accessor, arg, op_tok.value, lit)

    def accessor_call(self):
        tok = self.expect(lexer.ACCESSOR)
        if tok.value not in ACCESSORS:
            raise self.error(f"unknown accessor {tok.value!r}", tok, tuple(repr(a) for a in ACCESSORS))
        accessor = ACCESSORS[tok.value]
        self.expect(lexer.PUNCT, "(")
        arg = None
        if self.at(lexer.TEXT):
            arg_tok = self.advance()
            if accessor != "value":
                raise self.error(f"{tok.value}() takes no argument", arg_tok)
            if not arg_tok.value:
                raise self.error("measure qualifier must be non-empty", arg_tok)
            arg = arg_tok.value
        self.expect(lexer.PUNCT, ")")
        return accessor, arg

    def literal(self):
        t = self.peek()
        if t.kind == lexer.INT:
            self.advance()
            return IntLit(t.value), "int"
        if t.kind == lexer.OP and t.value == "-" and self.at(lexer.INT, k=1):
            self.advance()
            return IntLit(-self.advance().value), "int"
        if t.kind == lexer.TEXT:
            self.advance()
            return TextLit(t.value), "text"
        if t.kind == lexer.KEYWORD and t.value in ("true", "false"):
            self.advance()
            return BoolLit(t.value == "true"), "bool"
        raise self.unexpected("integer", "text literal", "'true'", "'false'")

    # -- where clause ------------------------------------------------------

    def bool_or(self):
        left, lt = self.bool_and()
        while self.at(lexer.KEYWORD, "or"):
            op_tok = self.advance()
            right, rt = self.bool_and()
            if lt != "bool" or rt != "bool":
                raise self.error("'or' needs boolean operands", op_tok)
            left = BoolOp("or", left, right)
        return left, lt

    def bool_and(self):
        left, lt = self.comparison()
        while self.at(lexer.KEYWORD, "and"):
            op_tok = self.advance()
            right, rt = self.comparison()
            if lt != "bool" or rt != "bool":
                raise self.error("'and' needs boolean operands", op_tok)
            left = BoolOp("and", left, right)
        return left, lt

    def comparison(self):
        left, lt = self.additive()
        t = self.peek()
        if t.kind == lexer.OP and t.value in CMP_OPS:
            self.advance()
            right, rt = self.additive()
            if t.value in _ORDERING:
                if lt != "int" or rt != "int":
                    raise self.error(f"operator {t.value!r} needs integer operands", t)
            elif lt != rt:
                raise self.error(f"cannot compare {lt} with {rt}", t)
            return Compare(t.value, left, right), "bool"
        return left, lt

    def additive(self):
        left, lt = self.primary()
        while self.peek().kind == lexer.OP and self.peek().value in ("+", "-"):
            op_tok = self.advance()
            right, rt = self.primary()
            if lt != "int" or rt != "int":
                raise self.error(f"operator {op_tok.value!r} needs integer operands", op_tok)
            left = Arith(op_tok.value, left, right)
        return left, lt

    def primary(self):
        t = self.peek()
        if t.kind == lexer.PUNCT and t.value == "(":
            self.advance()
            inner = self.bool_or()
            self.expect(lexer.PUNCT, ")")
            return inner
        if t.kind == lexer.IDENT:
            self.advance()
            if t.value not in self.bound:
                raise self.error(f"variable {t.value!r} is not bound in the pattern", t)
            accessor, arg = self.accessor_call()
            return Ref(t.value, accessor, arg), _ACCESSOR_TYPES[accessor]
        if t.kind in (lexer.INT, lexer.TEXT) or (t.kind == lexer.OP and t.value == "-") \
                or (t.kind == lexer.KEYWORD and t.value in ("true", "false")):
            return self.literal()
        raise self.unexpected("'('", "identifier", "literal")


def parse_pattern(name: str, source: str, line_offset: int = 0) -> PatternAst:
    """Parse one query into a :class:`PatternAst`.

    Raises :class:`PatternSyntaxError` (with line/column and the expected
    token set where applicable) on any malformed input.
    """
    try:
        tokens = tokenize(source)
    except PatternSyntaxError as exc:
        if exc.line is not None and line_offset:
            raise PatternSyntaxError(exc.message, exc.line + line_offset, exc.column) from None
        raise
    parser = _Parser(tokens, line_offset)
    try:
        return parser.query(name)
    except RecursionError:
        raise PatternSyntaxError("pattern nested too deeply") from None


@dataclass(frozen=True)
class PatternSource:
    name: str
    text: str
    line: int  # 1-based line of the "pattern:" header


def split_stanzas(text: str) -> list[PatternSource]:
    """Split a pattern file into ``pattern: <name>`` stanzas."""
    stanzas: list[PatternSource] = []
    header = None
    body: list[str] = []
    header_line = 0

    def flush():
        if header is not None:
            query = "\n".join(body)
            if not query.strip():
                raise PatternSyntaxError(f"pattern {header!r} has no query", header_line, 1)
            stanzas.append(PatternSource(header, query, header_line))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if header is None:
            if not line or line.startswith("--"):
                continue
            if not line.startswith("pattern:"):
                raise PatternSyntaxError("expected 'pattern: <name>' header", lineno, 1)
            header = line[len("pattern:"):].strip()
            if not header:
                raise PatternSyntaxError("pattern name must be non-empty", lineno, 1)
            header_line = lineno
            body = []
        elif not line:
            flush()
            header = None
        else:
            body.append(raw)
    flush()
    return stanzas


def parse_pattern_file(text: str) -> list[PatternAst]:
    asts = []
    seen = set()
    for stanza in split_stanzas(text):
        if stanza.name in seen:
            raise PatternError(f"duplicate pattern name {stanza.name!r}", stanza.line, 1)
        seen.add(stanza.name)
        asts.append(parse_pattern(stanza.name, stanza.text, line_offset=stanza.line))
    return asts


def load_patterns(path) -> list[PatternAst]:
    return parse_pattern_file(Path(path).read_text(encoding="utf-8"))
