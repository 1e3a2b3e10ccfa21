"""Render an AST back to source text that reparses to an equal tree."""

from __future__ import annotations

from . import nodes as n
from .lexer import quote

_KIND_WORD = {"cyclic": "cyclic behaviour", "oneshot": "one shot behaviour"}


def format_type(t) -> str:
    if isinstance(t, n.ListType):
        return f"list of {format_type(t.elem)}"
    if isinstance(t, n.MapType):
        return f"map of {format_type(t.key)} to {format_type(t.value)}"
    return t.name


def format_literal(value, kind: str) -> str:
    if kind == "text":
        return quote(value)
    if kind == "boolean":
        return "true" if value else "false"
    if kind == "double":
        return repr(float(value))
    return str(value)


def format_expr(e) -> str:
    if isinstance(e, n.Literal):
        return format_literal(e.value, e.kind)
    if isinstance(e, n.Name):
        return e.name
    if isinstance(e, n.SpecialRef):
        return e.which
    if isinstance(e, n.OfAccess):
        return f"{e.prop} of {_operand(e.target, of_rhs=True)}"
    if isinstance(e, n.Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, n.ListLit):
        out = "[" + ", ".join(format_expr(i) for i in e.items) + "]"
        return out + (f" as {format_type(e.annotation)}" if e.annotation else "")
    if isinstance(e, n.MapLit):
        body = ", ".join(f"{format_expr(k)}: {format_expr(v)}" for k, v in e.entries)
        return "{" + body + "}" + (f" as {format_type(e.annotation)}" if e.annotation else "")
    if isinstance(e, n.Index):
        return f"{_operand(e.target)}[{format_expr(e.index)}]"
    if isinstance(e, n.Binary):
        return f"{_operand(e.left)} {e.op} {_operand(e.right)}"
    if isinstance(e, n.Unary):
        space = " " if e.op == "not" else ""
        return f"{e.op}{space}{_operand(e.operand)}"
    if isinstance(e, n.Matches):
        return f"{_operand(e.scrutinee)} matches {format_pattern(e.pattern)}"
    raise TypeError(f"cannot format {type(e).__name__}")


def _operand(e, of_rhs: bool = False) -> str:
    """Format a subexpression, parenthesizing anything that is not atomic."""
    atomic = (n.Literal, n.Name, n.SpecialRef, n.Call, n.ListLit, n.MapLit, n.Index)
    if isinstance(e, n.Literal) and e.kind in ("integer", "double") and e.value < 0:
        return f"({format_expr(e)})"
    if isinstance(e, (n.ListLit, n.MapLit)) and e.annotation is not None:
        return f"({format_expr(e)})"
    if isinstance(e, atomic) or (of_rhs and isinstance(e, n.OfAccess)):
        return format_expr(e)
    return f"({format_expr(e)})"


def format_pattern(p) -> str:
    if isinstance(p, n.SchemaPattern):
        return f"{p.name}({', '.join(format_pattern(s) for s in p.subs)})"
    if isinstance(p, n.BindVar):
        return p.name
    if isinstance(p, n.Wildcard):
        return "_"
    return format_literal(p.value, p.kind)


def _params(params) -> str:
    return ", ".join(f"{p.name} as {format_type(p.type)}" for p in params)


def _named(args) -> str:
    return ", ".join(f"{k} = {format_expr(v)}" for k, v in args)


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("\t" * depth + text)

    def block(self, depth: int, stmts) -> None:
        for s in stmts:
            self.stmt(depth, s)

    def stmt(self, d: int, s) -> None:
        if isinstance(s, n.Assign):
            self.emit(d, f"{format_expr(s.target)} = {format_expr(s.value)}")
        elif isinstance(s, n.Activate):
            self.emit(d, f"activate behaviour {s.name}" + (f" with {_named(s.args)}" if s.args else ""))
        elif isinstance(s, n.Deactivate):
            self.emit(d, "deactivate this")
        elif isinstance(s, n.Send):
            self.emit(d, f"send {s.performative} {format_expr(s.content)} to {format_expr(s.to)}")
        elif isinstance(s, n.DoCall):
            self.emit(d, f"do {s.name}" + (f" with {_named(s.args)}" if s.args else ""))
        elif isinstance(s, n.Invoke):
            args = f" with {', '.join(format_expr(a) for a in s.args)}" if s.args else ""
            self.emit(d, f"invoke {quote(s.method)} on {format_expr(s.target)}{args}")
        elif isinstance(s, n.If):
            self.emit(d, f"if {format_expr(s.cond)} do")
            self.block(d + 1, s.then)
            if s.orelse:
                self.emit(d, "else do")
                self.block(d + 1, s.orelse)
        elif isinstance(s, n.While):
            self.emit(d, f"while {format_expr(s.cond)} do")
            self.block(d + 1, s.body)
        elif isinstance(s, n.Log):
            self.emit(d, f"log {format_expr(s.value)}")
        else:
            raise TypeError(f"cannot format {type(s).__name__}")

    def prop(self, d: int, p: n.PropertyDecl) -> None:
        text = f"property {p.name}"
        if p.type is not None:
            text += f" as {format_type(p.type)}"
        if p.init is not None:
            text += f" = {format_expr(p.init)}"
        self.emit(d, text)

    def on_create(self, d: int, oc: n.OnCreate) -> None:
        self.emit(d, "on create" + (f" with {_params(oc.params)}" if oc.params else "") + " do")
        self.block(d + 1, oc.body)

    def decl(self, decl) -> None:
        if isinstance(decl, n.OntologyDecl):
            self.emit(0, f"ontology {decl.name}" + (f" extends {decl.extends}" if decl.extends else ""))
            for s in decl.schemas:
                text = f"{s.kind} {s.name}"
                if s.params:
                    text += f"({_params(s.params)})"
                if s.extends:
                    text += f" extends {s.extends}"
                if s.with_clauses:
                    text += " with " + ", ".join(f"{k} = {format_literal(v.value, v.kind)}" for k, v in s.with_clauses)
                self.emit(1, text)
        elif isinstance(decl, n.AgentDecl):
            head = f"agent {decl.name}"
            if decl.extends:
                head += f" extends {decl.extends}"
            if decl.ontologies:
                head += f" uses ontology {', '.join(decl.ontologies)}"
            self.emit(0, head)
            for p in decl.properties:
                self.prop(1, p)
            if decl.on_create:
                self.on_create(1, decl.on_create)
            if decl.on_destroy:
                self.emit(1, "on destroy do")
                self.block(2, decl.on_destroy.body)
            for proc in decl.procedures:
                self.emit(1, f"procedure {proc.name}" + (f" with {_params(proc.params)}" if proc.params else "") + " do")
                self.block(2, proc.body)
            if not (decl.properties or decl.on_create or decl.on_destroy or decl.procedures):
                raise ValueError(f"agent {decl.name} has an empty body")
        elif isinstance(decl, n.BehaviourDecl):
            head = f"{_KIND_WORD[decl.kind]} {decl.name}"
            if decl.extends:
                head += f" extends {decl.extends}"
            if decl.for_agent:
                head += f" for agent {decl.for_agent}"
            if decl.ontologies:
                head += f" uses ontology {', '.join(decl.ontologies)}"
            self.emit(0, head)
            for p in decl.properties:
                self.prop(1, p)
            if decl.on_create:
                self.on_create(1, decl.on_create)
            if decl.do_action is not None:
                self.emit(1, "do")
                self.block(2, decl.do_action)
            for h in decl.message_handlers:
                when = f" when {format_expr(h.when)}" if h.when is not None else ""
                self.emit(1, f"on {h.performative}{when} do")
                self.block(2, h.body)
            for h in decl.percept_handlers:
                when = f" when {format_expr(h.when)}" if h.when is not None else ""
                self.emit(1, f"on percept{when} do")
                self.block(2, h.body)
        else:
            raise TypeError(f"cannot format {type(decl).__name__}")
        self.lines.append("")


def pretty(program: n.Program) -> str:
    w = _Writer()
    if program.module:
        w.emit(0, f"module {program.module}")
        w.lines.append("")
    for decl in program.decls:
        w.decl(decl)
    return "\n".join(w.lines)
