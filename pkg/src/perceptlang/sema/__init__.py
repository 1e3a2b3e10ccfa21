"""Ontology resolution and static checking."""

from .checker import (
    AgentInfo,
    BehaviourInfo,
    TypedProgram,
    check_pattern,
    check_program,
    collect_diagnostics,
    infer_type,
    resolve_pattern,
)
from .schema import SchemaInfo, SchemaTable, resolve_ontologies
from .types import TypeRepr

__all__ = [
    "AgentInfo",
    "BehaviourInfo",
    "SchemaInfo",
    "SchemaTable",
    "TypeRepr",
    "TypedProgram",
    "check_pattern",
    "check_program",
    "collect_diagnostics",
    "infer_type",
    "resolve_ontologies",
    "resolve_pattern",
]
