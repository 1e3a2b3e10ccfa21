"""Ontology schemas: the registry consulted by the checker and by values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import Diagnostic, SemaError
from ..frontend import nodes as n
from . import types as t

PERCEPT = "percept"
PRELUDE = "Prelude"
DELIVERY_FAILURE = "deliveryFailure"


@dataclass
class SchemaInfo:
    name: str
    kind: str  # concept | proposition | predicate | action
    properties: tuple  # ordered (name, TypeRepr); excludes the percept priority
    base: Optional[str] = None
    ontology: str = PRELUDE
    is_percept: bool = False
    default_priority: Optional[int] = None
    defaults: dict = field(default_factory=dict)

    @property
    def arity(self) -> int:
        return len(self.properties)

    def property_names(self) -> list[str]:
        return [p for p, _ in self.properties]

    def property_type(self, prop: str) -> Optional[t.TypeRepr]:
        for name, ty in self.properties:
            if name == prop:
                return ty
        return None


@dataclass
class OntologyInfo:
    name: str
    base: Optional[str]
    schemas: list


class SchemaTable:
    def __init__(self):
        self.entries: dict[str, SchemaInfo] = {}
        self.ontologies: dict[str, OntologyInfo] = {}
        self._ancestors: dict[str, tuple] = {}
        self._install_prelude()

    def _install_prelude(self) -> None:
        self.entries[PERCEPT] = SchemaInfo(PERCEPT, "predicate", (), None, PRELUDE, True, 0)
        self.entries[DELIVERY_FAILURE] = SchemaInfo(
            DELIVERY_FAILURE, "predicate", (("receiver", t.AID), ("reason", t.TEXT), ("original", t.TOP)), None, PRELUDE
        )
        self.ontologies[PRELUDE] = OntologyInfo(PRELUDE, None, [PERCEPT, DELIVERY_FAILURE])

    # -- queries --------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def get(self, name: str) -> SchemaInfo:
        return self.entries[name]

    def ancestors(self, name: str) -> tuple:
        """``name`` followed by its transitive bases, nearest first."""
        cached = self._ancestors.get(name)
        if cached is not None:
            return cached
        chain = []
        cur = name
        while cur is not None and cur in self.entries and cur not in chain:
            chain.append(cur)
            cur = self.entries[cur].base
        result = tuple(chain)
        self._ancestors[name] = result
        return result

    def extends(self, sub: str, sup: str) -> bool:
        return sup in self.ancestors(sub)

    def is_percept(self, name: str) -> bool:
        info = self.entries.get(name)
        return bool(info and info.is_percept)

    def default_priority(self, name: str) -> int:
        return self.entries[name].default_priority or 0

    def ontology_schemas(self, ontology: str) -> set:
        """Schemas visible through ``ontology``: its own, its bases', and the prelude's."""
        out = set(self.ontologies[PRELUDE].schemas)
        seen = set()
        cur = ontology
        while cur is not None and cur in self.ontologies and cur not in seen:
            seen.add(cur)
            out.update(self.ontologies[cur].schemas)
            cur = self.ontologies[cur].base
        return out

    def user_schemas(self) -> list[str]:
        return [name for name, info in self.entries.items() if info.ontology != PRELUDE]


def _diag(file, node, msg) -> Diagnostic:
    return Diagnostic(file, node.line, node.col, "error", msg)


def resolve_type(texpr, table: SchemaTable, extra_names=()) -> Optional[t.TypeRepr]:
    """Translate a type expression; return None when it names nothing known."""
    if isinstance(texpr, n.ListType):
        elem = resolve_type(texpr.elem, table, extra_names)
        return None if elem is None else t.list_of(elem)
    if isinstance(texpr, n.MapType):
        key = resolve_type(texpr.key, table, extra_names)
        val = resolve_type(texpr.value, table, extra_names)
        return None if key is None or val is None else t.map_of(key, val)
    name = texpr.name
    if name in t.PRIMITIVES:
        return t.TypeRepr(name)
    if name == "string":
        return t.TEXT
    if name == "any":
        return t.FOREIGN
    if name == "aid":
        return t.AID
    if name in table:
        return t.schema(name)
    return None


def resolve_ontologies(program: n.Program, file: str = "<input>", diagnostics: list | None = None) -> SchemaTable:
    """Build the schema table for ``program``.

    Raises SemaError unless a ``diagnostics`` list is supplied, in which case
    problems are appended there and a best-effort table is returned.
    """
    own = diagnostics is None
    diags: list[Diagnostic] = [] if own else diagnostics
    table = SchemaTable()
    decls: dict[str, n.SchemaDecl] = {}
    files = program.file_list(file)
    sfile: dict[str, str] = {}
    ofile: dict[str, str] = {}

    for onto, file in ((d, f) for d, f in zip(program.decls, files) if isinstance(d, n.OntologyDecl)):
        if onto.name in table.ontologies:
            diags.append(_diag(file, onto, f"duplicate ontology name '{onto.name}'"))
            continue
        info = OntologyInfo(onto.name, onto.extends, [])
        table.ontologies[onto.name] = info
        ofile[onto.name] = file
        for sd in onto.schemas:
            if sd.name in decls or sd.name in table.entries:
                diags.append(_diag(file, sd, f"duplicate schema name '{sd.name}'"))
                continue
            if sd.kind == "proposition" and sd.params:
                diags.append(_diag(file, sd, f"proposition '{sd.name}' cannot declare properties"))
            decls[sd.name] = sd
            sfile[sd.name] = file
            info.schemas.append(sd.name)
            table.entries[sd.name] = SchemaInfo(sd.name, sd.kind, (), sd.extends, onto.name)

    for onto in table.ontologies.values():
        if onto.base is not None and onto.base not in table.ontologies:
            node = next(d for d in program.decls if isinstance(d, n.OntologyDecl) and d.name == onto.name)
            diags.append(_diag(ofile[onto.name], node, f"unknown base ontology '{onto.base}'"))
            onto.base = None

    # extends links: unknown bases and cycles
    for name, sd in decls.items():
        file = sfile[name]
        if sd.extends is not None and sd.extends not in table.entries:
            diags.append(_diag(file, sd, f"unknown base schema '{sd.extends}' for '{name}'"))
            table.entries[name].base = None
    for name, sd in decls.items():
        file = sfile[name]
        seen = [name]
        cur = table.entries[name].base
        while cur is not None:
            if cur in seen:
                diags.append(_diag(file, sd, f"cyclic extends involving '{name}'"))
                table.entries[name].base = None
                break
            seen.append(cur)
            cur = table.entries[cur].base
    table._ancestors.clear()

    # properties in base-first order so inherited lists are ready
    done: set = set()

    def complete(name: str) -> None:
        if name in done or name not in decls:
            return
        done.add(name)
        info = table.entries[name]
        sd = decls[name]
        file = sfile[name]
        props: list = []
        if info.base is not None:
            complete(info.base)
            base = table.entries[info.base]
            props = list(base.properties)
            info.is_percept = base.is_percept
            info.default_priority = base.default_priority
            if info.kind == "proposition" and base.properties:
                diags.append(_diag(file, sd, f"proposition '{name}' cannot extend '{base.name}', which has properties"))
        for p in sd.params:
            pty = resolve_type(p.type, table)
            if pty is None:
                diags.append(_diag(file, p, f"unknown type '{_type_name(p.type)}' for property '{p.name}'"))
                pty = t.ERROR
            for i, (existing, ety) in enumerate(props):
                if existing == p.name:
                    if not t.is_subtype(pty, ety, table):
                        diags.append(_diag(file, p, f"override of '{p.name}' must narrow or keep type {ety}"))
                    props[i] = (p.name, pty)
                    break
            else:
                if p.name == "priority" and info.is_percept:
                    diags.append(_diag(file, p, "'priority' is already declared by percept"))
                props.append((p.name, pty))
        info.properties = tuple(props)
        for prop, lit in sd.with_clauses:
            if prop == "priority" and info.is_percept:
                if lit.kind != "integer" or lit.value < 0:
                    diags.append(_diag(file, lit, f"priority of '{name}' must be a natural number"))
                else:
                    info.default_priority = lit.value
                continue
            inherited = table.entries[info.base].property_type(prop) if info.base else None
            if inherited is None:
                diags.append(_diag(file, lit, f"with clause names '{prop}', which no base schema of '{name}' declares"))
                continue
            info.defaults[prop] = lit.value

    for name in decls:
        complete(name)
    for name in decls:
        info = table.entries[name]
        if info.is_percept and info.default_priority is None:
            info.default_priority = 0

    if own and diags:
        raise SemaError(sort_diagnostics(diags, files))
    return table


def _type_name(texpr) -> str:
    from ..frontend.printer import format_type

    return format_type(texpr)


def sort_diagnostics(diags: list, files: list) -> list:
    """Order diagnostics by file (in program order), then line and column."""
    rank = {}
    for f in files:
        rank.setdefault(f, len(rank))
    return sorted(diags, key=lambda d: (rank.get(d.file, len(rank)), d.line, d.col))
