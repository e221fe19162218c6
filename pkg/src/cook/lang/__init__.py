"""Carib language front end: AST, parser, printer, and static checks."""

from __future__ import annotations

from . import ast
from .check import Symbols, check
from .parser import parse_unit
from .printer import pretty


def parse(source: str, allow_bottom: bool = False) -> ast.Program:
    """Parse and validate a compilation unit.

    Raises `SyntaxDiagnostic` or `CheckDiagnostic` with a source position on
    malformed input.
    """
    program = parse_unit(source, allow_bottom=allow_bottom)
    check(program, allow_bottom=allow_bottom)
    return program


def load(source: str, allow_bottom: bool = False) -> tuple[ast.Program, Symbols]:
    program = parse_unit(source, allow_bottom=allow_bottom)
    symbols = check(program, allow_bottom=allow_bottom)
    return program, symbols


__all__ = ["ast", "parse", "parse_unit", "pretty", "check", "load", "Symbols"]
