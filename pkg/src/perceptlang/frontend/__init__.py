"""Lexing, parsing and pretty-printing of agent programs."""

from pathlib import Path

from . import nodes
from .lexer import Kind, Token, tokenize
from .parser import PERFORMATIVES, parse, parse_source
from .printer import pretty


def load_program(paths) -> nodes.Program:
    """Parse and concatenate several source files into one program."""
    program = nodes.Program(None, [])
    for path in paths:
        path = Path(path)
        program = program.merged(parse_source(path.read_text(encoding="utf-8"), str(path)))
    return program


__all__ = ["Kind", "Token", "tokenize", "parse", "parse_source", "pretty", "load_program", "nodes", "PERFORMATIVES"]
