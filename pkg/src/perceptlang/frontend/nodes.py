"""AST node classes.

Positions (``line``/``col``) and checker annotations (``ty``, ``ref``,
``resolved``) are excluded from equality so that structurally identical
programs compare equal regardless of layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union


@dataclass(kw_only=True, eq=False)
class Node:
    line: int = field(default=0, compare=False, repr=False)
    col: int = field(default=0, compare=False, repr=False)


def _node(cls):
    return dataclass(kw_only=False)(cls)


# -- type expressions -------------------------------------------------------


@_node
class NamedType(Node):
    name: str


@_node
class ListType(Node):
    elem: "TypeExpr"


@_node
class MapType(Node):
    key: "TypeExpr"
    value: "TypeExpr"


TypeExpr = Union[NamedType, ListType, MapType]


# -- expressions ------------------------------------------------------------


@dataclass(kw_only=True, eq=False)
class Expr(Node):
    ty: Any = field(default=None, compare=False, repr=False)


@_node
class Literal(Expr):
    value: Any
    kind: str  # integer | double | text | boolean


@_node
class Name(Expr):
    name: str
    # local | behaviour | agent, filled in by the checker
    ref: Optional[str] = field(default=None, compare=False, repr=False)


@_node
class SpecialRef(Expr):
    which: str  # content | sender | performative | agent | this


@_node
class OfAccess(Expr):
    prop: str
    target: Expr


@_node
class Call(Expr):
    name: str
    args: list


@_node
class ListLit(Expr):
    items: list
    annotation: Optional[TypeExpr] = None


@_node
class MapLit(Expr):
    entries: list  # list of (key Expr, value Expr)
    annotation: Optional[TypeExpr] = None


@_node
class Index(Expr):
    target: Expr
    index: Expr


@_node
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@_node
class Unary(Expr):
    op: str  # not | -
    operand: Expr


@_node
class Matches(Expr):
    scrutinee: Expr
    pattern: "Pattern"
    resolved: Any = field(default=None, compare=False, repr=False)


# -- patterns ---------------------------------------------------------------


@_node
class SchemaPattern(Node):
    name: str
    subs: list


@_node
class BindVar(Node):
    name: str


@_node
class LiteralPattern(Node):
    value: Any
    kind: str


@_node
class Wildcard(Node):
    pass


Pattern = Union[SchemaPattern, BindVar, LiteralPattern, Wildcard]


# -- statements -------------------------------------------------------------


@_node
class Assign(Node):
    target: Expr
    value: Expr
    declares: bool = field(default=False, compare=False, repr=False)


@_node
class Activate(Node):
    name: str
    args: list  # list of (name, Expr)


@_node
class Deactivate(Node):
    pass


@_node
class Send(Node):
    performative: str
    content: Expr
    to: Expr


@_node
class DoCall(Node):
    name: str
    args: list  # list of (name, Expr)


@_node
class Invoke(Node):
    method: str
    target: Expr
    args: list


@_node
class If(Node):
    cond: Expr
    then: list
    orelse: list


@_node
class While(Node):
    cond: Expr
    body: list


@_node
class Log(Node):
    value: Expr


Stmt = Union[Assign, Activate, Deactivate, Send, DoCall, Invoke, If, While, Log]


# -- declarations -----------------------------------------------------------


@_node
class Param(Node):
    name: str
    type: TypeExpr


@_node
class SchemaDecl(Node):
    kind: str  # concept | proposition | predicate | action
    name: str
    params: list
    extends: Optional[str] = None
    with_clauses: list = field(default_factory=list)  # list of (name, Literal)


@_node
class OntologyDecl(Node):
    name: str
    extends: Optional[str]
    schemas: list


@_node
class PropertyDecl(Node):
    name: str
    type: Optional[TypeExpr]
    init: Optional[Expr]


@_node
class ProcedureDecl(Node):
    name: str
    params: list
    body: list


@_node
class OnCreate(Node):
    params: list
    body: list


@_node
class OnDestroy(Node):
    body: list


@_node
class OnMessage(Node):
    performative: str
    when: Optional[Expr]
    body: list


@_node
class OnPercept(Node):
    when: Optional[Expr]
    body: list


@_node
class AgentDecl(Node):
    name: str
    extends: Optional[str] = None
    ontologies: list = field(default_factory=list)
    properties: list = field(default_factory=list)
    procedures: list = field(default_factory=list)
    on_create: Optional[OnCreate] = None
    on_destroy: Optional[OnDestroy] = None


@_node
class BehaviourDecl(Node):
    kind: str  # cyclic | oneshot
    name: str
    extends: Optional[str] = None
    for_agent: Optional[str] = None
    ontologies: list = field(default_factory=list)
    properties: list = field(default_factory=list)
    on_create: Optional[OnCreate] = None
    do_action: Optional[list] = None
    message_handlers: list = field(default_factory=list)
    percept_handlers: list = field(default_factory=list)


Decl = Union[OntologyDecl, AgentDecl, BehaviourDecl]


@_node
class Program(Node):
    module: Optional[str]
    decls: list
    # source file of each declaration, parallel to ``decls`` when known
    origins: list = field(default_factory=list, compare=False, repr=False)

    def merged(self, other: "Program") -> "Program":
        module = self.module or other.module
        return Program(module, self.decls + other.decls, self.file_list() + other.file_list())

    def file_list(self, default: str = "<input>") -> list:
        if len(self.origins) == len(self.decls):
            return list(self.origins)
        return [default] * len(self.decls)


def walk(node):
    """Yield ``node`` and every node nested inside it, depth first."""
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Node):
            yield cur
            for name in cur.__dataclass_fields__:
                if name in ("ty", "ref", "resolved", "line", "col", "origins"):
                    continue
                stack.append(getattr(cur, name))
        elif isinstance(cur, (list, tuple)):
            stack.extend(reversed(cur))
