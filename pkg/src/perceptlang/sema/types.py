"""Static types and the assignability rules between them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

PRIMITIVES = ("boolean", "integer", "float", "double", "text")
NUMERIC = ("integer", "float", "double")


@dataclass(frozen=True)
class TypeRepr:
    kind: str
    name: Optional[str] = None  # schema / behaviour / agent name
    args: tuple = ()  # element types for list and map

    def __str__(self) -> str:
        if self.kind == "list":
            return f"list of {self.args[0]}"
        if self.kind == "map":
            return f"map of {self.args[0]} to {self.args[1]}"
        if self.kind in ("schema",):
            return self.name
        if self.kind in ("behaviour", "agent"):
            return f"{self.kind} {self.name}"
        if self.kind == "foreignHandle":
            return "any"
        if self.kind == "ontologyValueTop":
            return "ontology value"
        return self.kind


BOOLEAN = TypeRepr("boolean")
INTEGER = TypeRepr("integer")
FLOAT = TypeRepr("float")
DOUBLE = TypeRepr("double")
TEXT = TypeRepr("text")
AID = TypeRepr("aid")
FOREIGN = TypeRepr("foreignHandle")
TOP = TypeRepr("ontologyValueTop")
ERROR = TypeRepr("error")  # placeholder after a reported diagnostic


def list_of(elem: TypeRepr) -> TypeRepr:
    return TypeRepr("list", args=(elem,))


def map_of(key: TypeRepr, value: TypeRepr) -> TypeRepr:
    return TypeRepr("map", args=(key, value))


def schema(name: str) -> TypeRepr:
    return TypeRepr("schema", name)


def is_numeric(t: TypeRepr) -> bool:
    return t.kind in NUMERIC


def numeric_join(a: TypeRepr, b: TypeRepr) -> TypeRepr:
    if a.kind == "double" or b.kind == "double":
        return DOUBLE
    if a.kind == "float" or b.kind == "float":
        return FLOAT
    return INTEGER


def is_subtype(sub: TypeRepr, sup: TypeRepr, table) -> bool:
    """Subtyping: reflexive, schema ``extends`` chains, and every schema below TOP."""
    if sub == sup or sub is ERROR or sup is ERROR or sub.kind == "error" or sup.kind == "error":
        return True
    if sub.kind == "schema":
        if sup.kind == "ontologyValueTop":
            return True
        if sup.kind == "schema":
            return table.extends(sub.name, sup.name)
    return False


def assignable(src: TypeRepr, dst: TypeRepr, table) -> bool:
    """Whether a value of ``src`` may be stored where ``dst`` is expected.

    Adds integer-to-float/double widening on top of subtyping. Collections
    are invariant in their element types.
    """
    if is_subtype(src, dst, table):
        return True
    if src.kind == "integer" and dst.kind in ("float", "double"):
        return True
    return False


def comparable(a: TypeRepr, b: TypeRepr, table) -> bool:
    if is_numeric(a) and is_numeric(b):
        return True
    return is_subtype(a, b, table) or is_subtype(b, a, table)
