"""Detection-pattern language: tokenizer, parser, checker and formatter."""

from .ast import PatternAst, iter_filters, pattern_vars
from .checker import CheckedPattern, validate
from .formatter import format_pattern, format_pattern_file
from .library import default_pattern_path, default_patterns, load_checked
from .lexer import Token, tokenize
from .parser import load_patterns, parse_pattern, parse_pattern_file

__all__ = [
    "CheckedPattern", "PatternAst", "Token", "format_pattern", "format_pattern_file",
    "default_pattern_path", "default_patterns", "iter_filters", "load_checked", "load_patterns", "parse_pattern", "parse_pattern_file",
    "pattern_vars", "tokenize", "validate",
]
