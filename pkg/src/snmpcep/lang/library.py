"""Loading validated pattern sets from files, including the bundled default set."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import PatternError, PatternValidationError
from ..events import STANDARD_MEASURES, MeasureKind
from .checker import CheckedPattern, validate
from .parser import parse_pattern, split_stanzas


def default_pattern_path() -> Path:
    return Path(str(resources.files("snmpcep") / "patterns" / "default.epl"))


def _locate(text: str, literal, first_line: int) -> tuple[int, int]:
    """Line and column of ``literal`` (quoted text or identifier) in a stanza body."""
    if literal:
        pattern = re.compile(r"'%s'|\b%s\b" % (re.escape(literal), re.escape(literal)))
        for n, line in enumerate(text.split("\n")):
            m = pattern.search(line)
            if m:
                return first_line + n, m.start() + 1
    return first_line - 1, 1


def load_checked(paths: Iterable, registry: Mapping[str, MeasureKind] = STANDARD_MEASURES) -> list[CheckedPattern]:
    """Parse and validate every pattern in ``paths``; names must be unique across files.

    Errors are re-raised with the file name and the stanza's header line.
    """
    out: list[CheckedPattern] = []
    seen: dict[str, str] = {}
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise PatternError(f"{path}: cannot read pattern file: {exc.strerror}") from None
        try:
            stanzas = split_stanzas(text)
        except PatternError as exc:
            raise type(exc)(f"{path}: {exc.message}", exc.line, exc.column) from None
        for st in stanzas:
            if st.name in seen:
                raise PatternError(f"{path}: duplicate pattern name {st.name!r} (first in {seen[st.name]})",
                                   st.line, 1)
            seen[st.name] = str(path)
            try:
                ast = parse_pattern(st.name, st.text, line_offset=st.line)
            except PatternError as exc:
                raise PatternError(f"{path}: pattern {st.name!r}: {exc.message}", exc.line, exc.column) from None
            try:
                out.append(validate(ast, registry))
            except PatternValidationError as exc:
                line, col = _locate(st.text, exc.literal, st.line + 1)
                raise PatternValidationError(f"{path}: pattern {st.name!r}: {exc.message}",
                                             exc.literal, line, col) from None
    return out


def default_patterns() -> list[CheckedPattern]:
    return load_checked([default_pattern_path()])
