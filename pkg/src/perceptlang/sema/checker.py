"""Static checking of agents and behaviours.

The checker annotates the AST in place: every expression gets ``ty``,
every :class:`~perceptlang.frontend.nodes.Name` gets ``ref`` (``local``,
``behaviour``, ``agent`` or ``schema``), every ``matches`` gets a
``resolved`` pattern in which bare schema names have become nullary
schema patterns, and first assignments to a local get ``declares=True``.
The interpreter relies on these annotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import Diagnostic, SemaError
from ..frontend import nodes as n
from ..frontend.parser import PERFORMATIVES
from . import types as t
from .schema import PERCEPT, SchemaTable, resolve_ontologies, resolve_type, sort_diagnostics

# -- checked program -------------------------------------------------------


@dataclass
class PropInfo:
    name: str
    type: t.TypeRepr
    init: Optional[n.Expr]
    owner: str  # declaring agent or behaviour


@dataclass
class AgentInfo:
    name: str
    decl: n.AgentDecl
    file: str
    base: Optional[str] = None
    ontologies: list = field(default_factory=list)
    visible: set = field(default_factory=set)
    properties: dict = field(default_factory=dict)  # name -> PropInfo, base first
    procedures: dict = field(default_factory=dict)  # name -> ProcedureDecl
    param_types: dict = field(default_factory=dict)  # procedure -> [(name, TypeRepr)]
    on_create: Optional[n.OnCreate] = None
    create_params: list = field(default_factory=list)  # [(name, TypeRepr)]
    on_destroy: Optional[n.OnDestroy] = None


@dataclass
class BehaviourInfo:
    name: str
    decl: n.BehaviourDecl
    file: str
    kind: str
    base: Optional[str] = None
    for_agent: Optional[str] = None
    ontologies: list = field(default_factory=list)
    visible: set = field(default_factory=set)
    properties: dict = field(default_factory=dict)
    on_create: Optional[n.OnCreate] = None
    create_params: list = field(default_factory=list)
    do_action: Optional[list] = None
    message_handlers: list = field(default_factory=list)
    percept_handlers: list = field(default_factory=list)


@dataclass
class TypedProgram:
    program: n.Program
    table: SchemaTable
    agents: dict
    behaviours: dict
    warnings: list = field(default_factory=list)

    def agent_is_a(self, sub: str, sup: str) -> bool:
        cur: Optional[str] = sub
        seen = set()
        while cur is not None and cur not in seen:
            if cur == sup:
                return True
            seen.add(cur)
            info = self.agents.get(cur)
            cur = info.base if info else None
        return False


# -- scopes ----------------------------------------------------------------


class Scope:
    """Lexical block of local variables."""

    def __init__(self, parent: Optional["Scope"] = None):
        self.parent = parent
        self.vars: dict[str, t.TypeRepr] = {}

    def lookup(self, name: str) -> Optional[t.TypeRepr]:
        s: Optional[Scope] = self
        while s is not None:
            if name in s.vars:
                return s.vars[name]
            s = s.parent
        return None

    def child(self) -> "Scope":
        return Scope(self)


@dataclass
class Ctx:
    file: str
    visible: set
    agent: Optional[AgentInfo] = None  # agent whose members are implicitly in scope
    behaviour: Optional[BehaviourInfo] = None
    event: Optional[str] = None  # message | percept
    props_only: Optional[dict] = None  # restricts property lookup while checking initializers


_ATOMS = {"integer": t.INTEGER, "double": t.DOUBLE, "text": t.TEXT, "boolean": t.BOOLEAN}
_PRIMITIVE_NAMES = set(t.PRIMITIVES) | {"string", "any", "aid", "list", "map"}


class Checker:
    def __init__(self, program: n.Program, table: SchemaTable, file: str = "<input>"):
        self.program = program
        self.table = table
        self.files = program.file_list(file)
        self.diags: list[Diagnostic] = []
        self.agents: dict[str, AgentInfo] = {}
        self.behaviours: dict[str, BehaviourInfo] = {}

    # -- diagnostics ------------------------------------------------------

    def error(self, ctx_or_file, node, message: str) -> None:
        file = ctx_or_file.file if isinstance(ctx_or_file, Ctx) else ctx_or_file
        self.diags.append(Diagnostic(file, node.line, node.col, "error", message))

    # -- declarations -----------------------------------------------------

    def run(self) -> TypedProgram:
        names: dict[str, n.Node] = {}
        for decl, file in zip(self.program.decls, self.files):
            if isinstance(decl, n.OntologyDecl):
                continue
            if decl.name in names or decl.name in self.table.ontologies:
                self.error(file, decl, f"duplicate declaration name '{decl.name}'")
                continue
            names[decl.name] = decl
            if isinstance(decl, n.AgentDecl):
                self.agents[decl.name] = AgentInfo(decl.name, decl, file, decl.extends)
            else:
                self.behaviours[decl.name] = BehaviourInfo(decl.name, decl, file, decl.kind, decl.extends, decl.for_agent)

        self._check_bases(self.agents, "agent")
        self._check_bases(self.behaviours, "behaviour")

        done: set = set()
        for name in self.agents:
            self._agent_signature(name, done)
        done = set()
        for name in self.behaviours:
            self._behaviour_signature(name, done)

        for info in self.agents.values():
            self._agent_bodies(info)
        for info in self.behaviours.values():
            self._behaviour_bodies(info)

        return TypedProgram(self.program, self.table, self.agents, self.behaviours)

    def _check_bases(self, infos: dict, what: str) -> None:
        for name, info in infos.items():
            if info.base is not None and info.base not in infos:
                self.error(info.file, info.decl, f"unknown base {what} '{info.base}'")
                info.base = None
        for name, info in infos.items():
            seen = [name]
            cur = info.base
            while cur is not None:
                if cur in seen:
                    self.error(info.file, info.decl, f"cyclic extends involving {what} '{name}'")
                    info.base = None
                    break
                seen.append(cur)
                cur = infos[cur].base

    def _ontologies(self, file: str, decl, names: list) -> list:
        out = []
        for name in names:
            if name not in self.table.ontologies:
                self.error(file, decl, f"unknown ontology '{name}'")
            elif name not in out:
                out.append(name)
        return out

    def _visible(self, ontologies: list) -> set:
        vis = set(self.table.ontology_schemas("Prelude"))
        for o in ontologies:
            vis |= self.table.ontology_schemas(o)
        return vis

    def _type(self, ctx_file: str, texpr, visible: set) -> t.TypeRepr:
        ty = resolve_type(texpr, self.table)
        if ty is None or not self._type_visible(ty, visible):
            from ..frontend.printer import format_type

            self.error(ctx_file, texpr, f"unknown type '{format_type(texpr)}'")
            return t.ERROR
        return ty

    def _type_visible(self, ty: t.TypeRepr, visible: set) -> bool:
        if ty.kind == "schema":
            return ty.name in visible
        return all(self._type_visible(a, visible) for a in ty.args)

    def _params(self, file: str, params: list, visible: set) -> list:
        out = []
        seen = set()
        for p in params:
            if p.name in seen:
                self.error(file, p, f"duplicate parameter '{p.name}'")
            seen.add(p.name)
            out.append((p.name, self._type(file, p.type, visible)))
        return out

    def _properties(self, ctx: Ctx, decls: list, into: dict, owner: str, shadow: Optional[dict] = None) -> None:
        for p in decls:
            if p.name in into and into[p.name].owner == owner:
                self.error(ctx, p, f"duplicate property '{p.name}'")
                continue
            if shadow is not None and p.name in shadow:
                self.error(ctx, p, f"property '{p.name}' shadows agent property of the same name")
                continue
            declared = self._type(ctx.file, p.type, ctx.visible) if p.type is not None else None
            ty = declared
            if p.init is not None:
                ctx.props_only = into
                init_ty = self.infer(p.init, Scope(), ctx, expected=declared)
                ctx.props_only = None
                if declared is None:
                    ty = init_ty
                elif not t.assignable(init_ty, declared, self.table):
                    self.error(ctx, p.init, f"type mismatch: cannot initialize {declared} property '{p.name}' with {init_ty}")
            if p.name in into and not t.is_subtype(ty, into[p.name].type, self.table):
                self.error(ctx, p, f"override of property '{p.name}' must keep type {into[p.name].type}")
            into[p.name] = PropInfo(p.name, ty, p.init, owner)

    def _agent_signature(self, name: str, done: set) -> None:
        if name in done:
            return
        done.add(name)
        info = self.agents[name]
        d = info.decl
        if info.base:
            self._agent_signature(info.base, done)
            base = self.agents[info.base]
            info.ontologies = list(base.ontologies)
            info.properties = dict(base.properties)
            info.procedures = dict(base.procedures)
            info.param_types = dict(base.param_types)
            info.on_create, info.create_params = base.on_create, base.create_params
            info.on_destroy = base.on_destroy
        for o in self._ontologies(info.file, d, d.ontologies):
            if o not in info.ontologies:
                info.ontologies.append(o)
        info.visible = self._visible(info.ontologies)
        ctx = Ctx(info.file, info.visible, agent=info)
        self._properties(ctx, d.properties, info.properties, name)
        own = set()
        for proc in d.procedures:
            if proc.name in own:
                self.error(info.file, proc, f"duplicate procedure '{proc.name}'")
                continue
            own.add(proc.name)
            info.procedures[proc.name] = proc
            info.param_types[proc.name] = self._params(info.file, proc.params, info.visible)
        if d.on_create is not None:
            info.on_create = d.on_create
            info.create_params = self._params(info.file, d.on_create.params, info.visible)
        if d.on_destroy is not None:
            info.on_destroy = d.on_destroy

    def _behaviour_signature(self, name: str, done: set) -> None:
        if name in done:
            return
        done.add(name)
        info = self.behaviours[name]
        d = info.decl
        if info.base:
            self._behaviour_signature(info.base, done)
            base = self.behaviours[info.base]
            if base.kind != info.kind:
                self.error(info.file, d, f"behaviour '{name}' and its base '{base.name}' differ in kind")
            info.ontologies = list(base.ontologies)
            info.properties = dict(base.properties)
            info.on_create, info.create_params = base.on_create, base.create_params
            info.do_action = base.do_action
            info.message_handlers = list(base.message_handlers)
            info.percept_handlers = list(base.percept_handlers)
            if info.for_agent is None:
                info.for_agent = base.for_agent
        agent = None
        if info.for_agent is not None:
            agent = self.agents.get(info.for_agent)
            if agent is None:
                self.error(info.file, d, f"unknown agent type '{info.for_agent}' in for-agent clause")
                info.for_agent = None
        if info.base and agent is not None:
            base_for = self.behaviours[info.base].for_agent
            if base_for is not None and not self._agent_is_a(agent.name, base_for):
                self.error(info.file, d, f"for-agent '{agent.name}' is not compatible with base behaviour's '{base_for}'")
        for o in self._ontologies(info.file, d, d.ontologies):
            if o not in info.ontologies:
                info.ontologies.append(o)
        onts = list(info.ontologies) + (agent.ontologies if agent else [])
        info.visible = self._visible(onts)
        ctx = Ctx(info.file, info.visible, agent=agent, behaviour=info)
        self._properties(ctx, d.properties, info.properties, name, shadow=agent.properties if agent else None)
        if d.on_create is not None:
            info.on_create = d.on_create
            info.create_params = self._params(info.file, d.on_create.params, info.visible)
        if d.do_action is not None:
            info.do_action = d.do_action
        info.message_handlers += d.message_handlers
        info.percept_handlers += d.percept_handlers

    def _agent_is_a(self, sub: str, sup: str) -> bool:
        cur: Optional[str] = sub
        seen = set()
        while cur is not None and cur not in seen:
            if cur == sup:
                return True
            seen.add(cur)
            cur = self.agents[cur].base if cur in self.agents else None
        return False

    def _agent_bodies(self, info: AgentInfo) -> None:
        d = info.decl
        ctx = Ctx(info.file, info.visible, agent=info)
        if d.on_create is not None:
            scope = Scope()
            scope.vars.update(dict(info.create_params))
            self.block(d.on_create.body, scope, ctx)
        if d.on_destroy is not None:
            self.block(d.on_destroy.body, Scope(), ctx)
        for proc in d.procedures:
            scope = Scope()
            scope.vars.update(dict(info.param_types.get(proc.name, [])))
            self.block(proc.body, scope, ctx)

    def _behaviour_bodies(self, info: BehaviourInfo) -> None:
        d = info.decl
        agent = self.agents.get(info.for_agent) if info.for_agent else None
        ctx = Ctx(info.file, info.visible, agent=agent, behaviour=info)
        if d.on_create is not None:
            scope = Scope()
            scope.vars.update(dict(info.create_params))
            self.block(d.on_create.body, scope, ctx)
        if d.do_action is not None:
            self.block(d.do_action, Scope(), ctx)
        for h in d.message_handlers:
            hctx = Ctx(info.file, info.visible, agent, info, "message")
            self._handler(h, hctx)
        if d.percept_handlers and not any(self.table.is_percept(s) and s != PERCEPT for s in info.visible):
            self.error(info.file, d.percept_handlers[0], "on percept handler requires an ontology with percept schemas in scope")
        for h in d.percept_handlers:
            hctx = Ctx(info.file, info.visible, agent, info, "percept")
            self._handler(h, hctx)

    def _handler(self, h, ctx: Ctx) -> None:
        scope = Scope()
        if h.when is not None:
            ty = self.infer(h.when, scope, ctx)
            if ty != t.BOOLEAN and ty != t.ERROR:
                self.error(ctx, h.when, f"type mismatch: when expression must be boolean, got {ty}")
            scope = scope.child()
            scope.vars.update(self.bindings_of(h.when))
        self.block(h.body, scope, ctx)

    # -- statements -------------------------------------------------------

    def block(self, stmts: list, scope: Scope, ctx: Ctx) -> None:
        for s in stmts:
            self.stmt(s, scope, ctx)

    def stmt(self, s, scope: Scope, ctx: Ctx) -> None:
        if isinstance(s, n.Assign):
            self._assign(s, scope, ctx)
        elif isinstance(s, n.Activate):
            self._activate(s, scope, ctx)
        elif isinstance(s, n.Deactivate):
            if ctx.behaviour is None:
                self.error(ctx, s, "deactivate this is only allowed inside a behaviour")
        elif isinstance(s, n.Send):
            if s.performative not in PERFORMATIVES:
                self.error(ctx, s, f"unknown performative '{s.performative}'")
            cty = self.infer(s.content, scope, ctx)
            if cty.kind == "schema":
                if cty.name not in ctx.visible:
                    self.error(ctx, s.content, f"send content '{cty.name}' is not in an ontology in scope")
            elif cty.kind not in ("ontologyValueTop", "error"):
                self.error(ctx, s.content, f"type mismatch: send content must be an ontology value, got {cty}")
            tty = self.infer(s.to, scope, ctx)
            if tty not in (t.AID, t.list_of(t.AID), t.ERROR):
                self.error(ctx, s.to, f"type mismatch: send receiver must be aid or list of aid, got {tty}")
        elif isinstance(s, n.DoCall):
            self._do_call(s, scope, ctx)
        elif isinstance(s, n.Invoke):
            ty = self.infer(s.target, scope, ctx)
            if ty not in (t.FOREIGN, t.ERROR):
                self.error(ctx, s.target, f"type mismatch: invoke target must be a foreign handle (any), got {ty}")
            for a in s.args:
                self.infer(a, scope, ctx)
        elif isinstance(s, n.If):
            self._cond(s.cond, scope, ctx)
            inner = scope.child()
            inner.vars.update(self.bindings_of(s.cond))
            self.block(s.then, inner, ctx)
            self.block(s.orelse, scope.child(), ctx)
        elif isinstance(s, n.While):
            self._cond(s.cond, scope, ctx)
            inner = scope.child()
            inner.vars.update(self.bindings_of(s.cond))
            self.block(s.body, inner, ctx)
        elif isinstance(s, n.Log):
            self.infer(s.value, scope, ctx)
        else:  # pragma: no cover - parser produces no other statements
            raise TypeError(type(s).__name__)

    def _cond(self, e, scope: Scope, ctx: Ctx) -> None:
        ty = self.infer(e, scope, ctx)
        if ty not in (t.BOOLEAN, t.ERROR):
            self.error(ctx, e, f"type mismatch: condition must be boolean, got {ty}")

    def _assign(self, s: n.Assign, scope: Scope, ctx: Ctx) -> None:
        target = s.target
        if isinstance(target, n.Name):
            dst = self._lookup_var(target, scope, ctx)
            if dst is None:
                if target.name in self.table:
                    self.error(ctx, target, f"cannot assign to schema name '{target.name}'")
                    self.infer(s.value, scope, ctx)
                    return
                vty = self.infer(s.value, scope, ctx)
                target.ref = "local"
                target.ty = vty
                s.declares = True
                scope.vars[target.name] = vty
                return
            s.declares = False
            target.ty = dst
        elif isinstance(target, n.OfAccess):
            dst = self._of_lvalue(target, scope, ctx)
        elif isinstance(target, n.Index):
            dst = self._index_lvalue(target, scope, ctx)
        else:  # pragma: no cover
            self.error(ctx, target, "invalid assignment target")
            return
        vty = self.infer(s.value, scope, ctx, expected=dst)
        if dst is not None and not t.assignable(vty, dst, self.table):
            self.error(ctx, s.value, f"type mismatch: cannot assign {vty} to {dst}")

    def _of_lvalue(self, target: n.OfAccess, scope: Scope, ctx: Ctx) -> t.TypeRepr:
        owner_ty = self.infer(target.target, scope, ctx)
        if owner_ty.kind in ("agent", "behaviour"):
            return self.infer(target, scope, ctx)
        if owner_ty.kind == "error":
            target.ty = t.ERROR
            return t.ERROR
        self.error(ctx, target, f"cannot assign to '{target.prop}' of {owner_ty}: ontology values are immutable")
        target.ty = t.ERROR
        return t.ERROR

    def _index_lvalue(self, target: n.Index, scope: Scope, ctx: Ctx) -> t.TypeRepr:
        if not isinstance(target.target, (n.Name, n.OfAccess, n.Index)):
            self.error(ctx, target, "invalid assignment target")
        if isinstance(target.target, n.OfAccess):
            self._of_lvalue(target.target, scope, ctx)
        elif isinstance(target.target, n.Index):
            self._index_lvalue(target.target, scope, ctx)
        return self.infer(target, scope, ctx)

    def _activate(self, s: n.Activate, scope: Scope, ctx: Ctx) -> None:
        b = self.behaviours.get(s.name)
        for _, e in s.args:
            self.infer(e, scope, ctx)
        if b is None:
            self.error(ctx, s, f"unknown behaviour '{s.name}'")
            return
        if b.for_agent is not None:
            host = ctx.agent.name if ctx.agent is not None else None
            if host is None:
                self.error(ctx, s, f"behaviour '{s.name}' is for agent '{b.for_agent}', which is not provably the host agent here")
            elif not self._agent_is_a(host, b.for_agent):
                self.error(ctx, s, f"for-agent mismatch: '{s.name}' requires agent '{b.for_agent}', not '{host}'")
        self._named_args(s, s.args, b.create_params, f"on-create parameter of '{s.name}'", ctx)

    def _named_args(self, node, args: list, params: list, what: str, ctx: Ctx) -> None:
        ptypes = dict(params)
        given = set()
        for name, e in args:
            if name in given:
                self.error(ctx, e, f"duplicate argument '{name}'")
            given.add(name)
            if name not in ptypes:
                self.error(ctx, e, f"no {what} named '{name}'")
                continue
            if e.ty is not None and not t.assignable(e.ty, ptypes[name], self.table):
                self.error(ctx, e, f"type mismatch: argument '{name}' expects {ptypes[name]}, got {e.ty}")
        for name, _ in params:
            if name not in given:
                self.error(ctx, node, f"missing argument '{name}' ({what})")

    def _do_call(self, s: n.DoCall, scope: Scope, ctx: Ctx) -> None:
        for _, e in s.args:
            self.infer(e, scope, ctx)
        agent = ctx.agent
        if agent is None or s.name not in agent.procedures:
            hint = "" if agent is not None or ctx.behaviour is None else " (procedures require a for-agent clause)"
            self.error(ctx, s, f"unknown procedure '{s.name}'{hint}")
            return
        self._named_args(s, s.args, agent.param_types[s.name], f"parameter of procedure '{s.name}'", ctx)

    # -- expressions ------------------------------------------------------

    def _lookup_var(self, node: n.Name, scope: Scope, ctx: Ctx) -> Optional[t.TypeRepr]:
        """Resolve a variable, setting ``node.ref``; None when unbound."""
        name = node.name
        ty = scope.lookup(name)
        if ty is not None:
            node.ref = "local"
            return ty
        if ctx.props_only is not None:
            if name in ctx.props_only:
                node.ref = "behaviour" if ctx.behaviour is not None else "agent"
                return ctx.props_only[name].type
            if ctx.behaviour is not None and ctx.agent is not None and name in ctx.agent.properties:
                node.ref = "agent"
                return ctx.agent.properties[name].type
            return None
        if ctx.behaviour is not None and name in ctx.behaviour.properties:
            node.ref = "behaviour"
            return ctx.behaviour.properties[name].type
        if ctx.agent is not None and name in ctx.agent.properties:
            node.ref = "agent"
            return ctx.agent.properties[name].type
        return None

    def infer(self, e, scope: Scope, ctx: Ctx, expected: Optional[t.TypeRepr] = None) -> t.TypeRepr:
        ty = self._infer(e, scope, ctx, expected)
        e.ty = ty
        return ty

    def _infer(self, e, scope: Scope, ctx: Ctx, expected) -> t.TypeRepr:
        if isinstance(e, n.Literal):
            return _ATOMS[e.kind]
        if isinstance(e, n.Name):
            ty = self._lookup_var(e, scope, ctx)
            if ty is not None:
                return ty
            if e.name in self.table and e.name in ctx.visible:
                info = self.table.get(e.name)
                if info.arity == 0:
                    e.ref = "schema"
                    return t.schema(e.name)
                self.error(ctx, e, f"arity mismatch: schema '{e.name}' takes {info.arity} argument(s)")
                return t.ERROR
            self.error(ctx, e, f"unknown identifier '{e.name}'")
            return t.ERROR
        if isinstance(e, n.SpecialRef):
            return self._special(e, ctx)
        if isinstance(e, n.OfAccess):
            return self._of(e, scope, ctx)
        if isinstance(e, n.Call):
            return self._call(e, scope, ctx)
        if isinstance(e, n.ListLit):
            return self._list(e, scope, ctx, expected)
        if isinstance(e, n.MapLit):
            return self._map(e, scope, ctx, expected)
        if isinstance(e, n.Index):
            tt = self.infer(e.target, scope, ctx)
            if tt.kind == "list":
                it = self.infer(e.index, scope, ctx)
                if it not in (t.INTEGER, t.ERROR):
                    self.error(ctx, e.index, f"type mismatch: list index must be integer, got {it}")
                return tt.args[0]
            if tt.kind == "map":
                it = self.infer(e.index, scope, ctx, expected=tt.args[0])
                if not t.assignable(it, tt.args[0], self.table):
                    self.error(ctx, e.index, f"type mismatch: map key must be {tt.args[0]}, got {it}")
                return tt.args[1]
            self.infer(e.index, scope, ctx)
            if tt != t.ERROR:
                self.error(ctx, e, f"type mismatch: cannot index {tt}")
            return t.ERROR
        if isinstance(e, n.Binary):
            return self._binary(e, scope, ctx)
        if isinstance(e, n.Unary):
            ot = self.infer(e.operand, scope, ctx)
            if e.op == "not":
                if ot not in (t.BOOLEAN, t.ERROR):
                    self.error(ctx, e, f"type mismatch: 'not' needs boolean, got {ot}")
                return t.BOOLEAN
            if not t.is_numeric(ot) and ot != t.ERROR:
                self.error(ctx, e, f"type mismatch: unary '-' needs a number, got {ot}")
                return t.ERROR
            return ot
        if isinstance(e, n.Matches):
            st = self.infer(e.scrutinee, scope, ctx)
            resolved, bindings = self._pattern(e.pattern, st, scope, ctx, {})
            e.resolved = resolved
            e.bindings = bindings
            return t.BOOLEAN
        raise TypeError(type(e).__name__)  # pragma: no cover

    def _special(self, e: n.SpecialRef, ctx: Ctx) -> t.TypeRepr:
        w = e.which
        if w == "content":
            if ctx.event == "message":
                return t.TOP
            if ctx.event == "percept":
                return t.schema(PERCEPT)
        elif w in ("sender", "performative"):
            if ctx.event == "message":
                return t.AID if w == "sender" else t.TEXT
            if ctx.event == "percept":
                self.error(ctx, e, f"'{w}' is only available in message handlers")
                return t.ERROR
        elif w == "agent":
            if ctx.agent is not None:
                return t.TypeRepr("agent", ctx.agent.name)
            self.error(ctx, e, "agent property access requires for-agent")
            return t.ERROR
        elif w == "this":
            if ctx.behaviour is not None:
                return t.TypeRepr("behaviour", ctx.behaviour.name)
            if ctx.agent is not None:
                return t.TypeRepr("agent", ctx.agent.name)
        self.error(ctx, e, f"'{w}' used outside a message or percept handler")
        return t.ERROR

    def _of(self, e: n.OfAccess, scope: Scope, ctx: Ctx) -> t.TypeRepr:
        tt = self.infer(e.target, scope, ctx)
        p = e.prop
        if tt.kind == "agent":
            info = self.agents[tt.name]
            if p in info.properties:
                return info.properties[p].type
            self.error(ctx, e, f"unknown property '{p}' of agent '{tt.name}'")
            return t.ERROR
        if tt.kind == "behaviour":
            info = self.behaviours[tt.name]
            if p in info.properties:
                return info.properties[p].type
            self.error(ctx, e, f"unknown property '{p}' of behaviour '{tt.name}'")
            return t.ERROR
        if tt.kind == "schema":
            pty = self.table.get(tt.name).property_type(p)
            if pty is not None:
                return pty
            if p == "priority" and self.table.is_percept(tt.name):
                return t.INTEGER
            self.error(ctx, e, f"unknown property '{p}' of schema '{tt.name}'")
            return t.ERROR
        if tt.kind in ("list", "map", "text") and p == "length":
            return t.INTEGER
        if tt.kind == "aid" and p in ("name", "platform"):
            return t.TEXT
        if tt.kind == "error":
            return t.ERROR
        self.error(ctx, e, f"unknown property '{p}' of {tt}")
        return t.ERROR

    def _call(self, e: n.Call, scope: Scope, ctx: Ctx) -> t.TypeRepr:
        if e.name == "aid":
            if len(e.args) != 1:
                self.error(ctx, e, f"arity mismatch: aid takes 1 argument, got {len(e.args)}")
            for a in e.args:
                at = self.infer(a, scope, ctx)
                if at not in (t.TEXT, t.ERROR):
                    self.error(ctx, a, f"type mismatch: aid expects text, got {at}")
            return t.AID
        if e.name in self.table and e.name in ctx.visible:
            info = self.table.get(e.name)
            if len(e.args) != info.arity:
                self.error(ctx, e, f"arity mismatch: {e.name} takes {info.arity} argument(s), got {len(e.args)}")
            for i, a in enumerate(e.args):
                pty = info.properties[i][1] if i < info.arity else None
                at = self.infer(a, scope, ctx, expected=pty)
                if pty is not None and not t.assignable(at, pty, self.table):
                    self.error(ctx, a, f"type mismatch: {e.name}.{info.properties[i][0]} expects {pty}, got {at}")
            return t.schema(e.name)
        for a in e.args:
            self.infer(a, scope, ctx)
        self.error(ctx, e, f"unknown identifier '{e.name}'")
        return t.ERROR

    def _annotation(self, e, ctx: Ctx, kind: str) -> Optional[t.TypeRepr]:
        if e.annotation is None:
            return None
        ty = self._type(ctx.file, e.annotation, ctx.visible)
        if ty.kind not in (kind, "error"):
            self.error(ctx, e, f"type mismatch: {kind} literal annotated as {ty}")
            return t.ERROR
        return ty

    def _join(self, types: list, e, ctx: Ctx) -> t.TypeRepr:
        if any(x == t.ERROR for x in types):
            return t.ERROR
        if all(t.is_numeric(x) for x in types):
            out = types[0]
            for x in types[1:]:
                out = t.numeric_join(out, x)
            return out
        first = types[0]
        for cand in [first] + [t.schema(a) for a in (self.table.ancestors(first.name)[1:] if first.kind == "schema" else ())]:
            if all(t.is_subtype(x, cand, self.table) for x in types):
                return cand
        self.error(ctx, e, "type mismatch: collection literal elements have no common type")
        return t.ERROR

    def _list(self, e: n.ListLit, scope: Scope, ctx: Ctx, expected) -> t.TypeRepr:
        ann = self._annotation(e, ctx, "list")
        if ann is not None and ann.kind == "list":
            for i in e.items:
                it = self.infer(i, scope, ctx, expected=ann.args[0])
                if not t.assignable(it, ann.args[0], self.table):
                    self.error(ctx, i, f"type mismatch: list element {it} is not {ann.args[0]}")
            return ann
        if ann is not None:
            return ann
        if not e.items:
            self.error(ctx, e, "empty collection literal requires as-annotation")
            return t.ERROR
        return t.list_of(self._join([self.infer(i, scope, ctx) for i in e.items], e, ctx))

    def _map(self, e: n.MapLit, scope: Scope, ctx: Ctx, expected) -> t.TypeRepr:
        ann = self._annotation(e, ctx, "map")
        if ann is not None and ann.kind == "map":
            for k, v in e.entries:
                kt = self.infer(k, scope, ctx, expected=ann.args[0])
                vt = self.infer(v, scope, ctx, expected=ann.args[1])
                if not t.assignable(kt, ann.args[0], self.table):
                    self.error(ctx, k, f"type mismatch: map key {kt} is not {ann.args[0]}")
                if not t.assignable(vt, ann.args[1], self.table):
                    self.error(ctx, v, f"type mismatch: map value {vt} is not {ann.args[1]}")
            return ann
        if ann is not None:
            return ann
        if not e.entries:
            self.error(ctx, e, "empty collection literal requires as-annotation")
            return t.ERROR
        kt = self._join([self.infer(k, scope, ctx) for k, _ in e.entries], e, ctx)
        vt = self._join([self.infer(v, scope, ctx) for _, v in e.entries], e, ctx)
        return t.map_of(kt, vt)

    def _binary(self, e: n.Binary, scope: Scope, ctx: Ctx) -> t.TypeRepr:
        op = e.op
        if op in ("and", "or"):
            lt = self.infer(e.left, scope, ctx)
            right_scope = scope
            if op == "and":
                right_scope = scope.child()
                right_scope.vars.update(self.bindings_of(e.left))
            rt = self.infer(e.right, right_scope, ctx)
            for side, ty in ((e.left, lt), (e.right, rt)):
                if ty not in (t.BOOLEAN, t.ERROR):
                    self.error(ctx, side, f"type mismatch: '{op}' needs boolean operands, got {ty}")
            return t.BOOLEAN
        lt = self.infer(e.left, scope, ctx)
        rt = self.infer(e.right, scope, ctx)
        if t.ERROR in (lt, rt):
            return t.BOOLEAN if op in ("=", "!=", "<", "<=", ">", ">=") else t.ERROR
        if op in ("=", "!="):
            if not t.comparable(lt, rt, self.table):
                self.error(ctx, e, f"type mismatch: cannot compare {lt} with {rt}")
            return t.BOOLEAN
        if op in ("<", "<=", ">", ">="):
            if not ((t.is_numeric(lt) and t.is_numeric(rt)) or (lt == t.TEXT and rt == t.TEXT)):
                self.error(ctx, e, f"type mismatch: cannot order {lt} and {rt}")
            return t.BOOLEAN
        if op == "+" and (lt == t.TEXT or rt == t.TEXT):
            return t.TEXT
        if t.is_numeric(lt) and t.is_numeric(rt):
            return t.numeric_join(lt, rt)
        self.error(ctx, e, f"type mismatch: '{op}' not defined for {lt} and {rt}")
        return t.ERROR

    def bindings_of(self, e) -> dict:
        """Variables a condition binds for the code it guards."""
        if isinstance(e, n.Matches):
            return dict(getattr(e, "bindings", {}) or {})
        if isinstance(e, n.Binary) and e.op == "and":
            out = self.bindings_of(e.left)
            out.update(self.bindings_of(e.right))
            return out
        return {}

    # -- patterns ---------------------------------------------------------

    def _pattern(self, p, st: t.TypeRepr, scope: Optional[Scope], ctx: Ctx, bound: dict):
        """Check ``p`` against scrutinee type ``st``; return (resolved pattern, bindings)."""
        table = self.table
        if isinstance(p, n.BindVar) and p.name in table:
            p = n.SchemaPattern(p.name, [], line=p.line, col=p.col)
        if isinstance(p, n.SchemaPattern):
            if p.name not in table or (ctx.visible is not None and p.name not in ctx.visible):
                self.error(ctx, p, f"unknown schema '{p.name}' in pattern")
                return p, bound
            info = table.get(p.name)
            if len(p.subs) != info.arity:
                self.error(ctx, p, f"arity mismatch: pattern {p.name} has {len(p.subs)} subpattern(s), schema has {info.arity}")
            if st.kind == "schema":
                if not (table.extends(p.name, st.name) or table.extends(st.name, p.name)):
                    self.error(ctx, p, f"pattern '{p.name}' cannot match a value of type {st}")
            elif st.kind not in ("ontologyValueTop", "error"):
                self.error(ctx, p, f"pattern '{p.name}' cannot match a value of type {st}")
            subs = []
            for i, sub in enumerate(p.subs):
                pty = info.properties[i][1] if i < info.arity else t.ERROR
                rs, bound = self._pattern(sub, pty, scope, ctx, bound)
                subs.append(rs)
            return n.SchemaPattern(p.name, subs, line=p.line, col=p.col), bound
        if isinstance(p, n.BindVar):
            if p.name in bound:
                self.error(ctx, p, f"variable '{p.name}' bound twice in one pattern")
                return p, bound
            if scope is not None and self._lookup_var(n.Name(p.name), scope, ctx) is not None:
                self.error(ctx, p, f"pattern variable '{p.name}' collides with a visible variable")
                return p, bound
            return p, {**bound, p.name: st}
        if isinstance(p, n.LiteralPattern):
            lt = _ATOMS[p.kind]
            if not t.comparable(lt, st, table):
                self.error(ctx, p, f"literal pattern of type {lt} cannot match {st}")
            return p, bound
        return p, bound


# -- public entry points ---------------------------------------------------


def check_program(program: n.Program, table: Optional[SchemaTable] = None, file: str = "<input>") -> TypedProgram:
    """Resolve (if needed) and check ``program``; raise SemaError on any error."""
    diags: list[Diagnostic] = []
    if table is None:
        table = resolve_ontologies(program, file, diags)
    checker = Checker(program, table, file)
    typed = checker.run()
    diags += checker.diags
    if diags:
        raise SemaError(sort_diagnostics(diags, program.file_list(file)))
    return typed


def collect_diagnostics(program: n.Program, file: str = "<input>") -> list[Diagnostic]:
    """All diagnostics for ``program`` in source order, without raising."""
    diags: list[Diagnostic] = []
    table = resolve_ontologies(program, file, diags)
    checker = Checker(program, table, file)
    checker.run()
    return sort_diagnostics(diags + checker.diags, program.file_list(file))


def check_pattern(pattern, scrutinee: t.TypeRepr, table: SchemaTable) -> dict:
    """Bindings introduced by ``pattern`` when matched against ``scrutinee``.

    Every schema in ``table`` is considered visible. Raises SemaError when
    the pattern is ill-formed.
    """
    checker = Checker(n.Program(None, []), table)
    ctx = Ctx("<pattern>", set(table.entries))
    _, bindings = checker._pattern(pattern, scrutinee, None, ctx, {})
    if checker.diags:
        raise SemaError(checker.diags)
    return bindings


def resolve_pattern(pattern, table: SchemaTable):
    """``pattern`` with bare schema names turned into nullary schema patterns."""
    checker = Checker(n.Program(None, []), table)
    resolved, _ = checker._pattern(pattern, t.TOP, None, Ctx("<pattern>", set(table.entries)), {})
    return resolved


def infer_type(expr, table: SchemaTable, env: Optional[dict] = None) -> t.TypeRepr:
    """Type of a standalone expression whose free variables are typed by ``env``."""
    checker = Checker(n.Program(None, []), table)
    scope = Scope()
    scope.vars.update(env or {})
    ty = checker.infer(expr, scope, Ctx("<expr>", set(table.entries)))
    if checker.diags:
        raise SemaError(checker.diags)
    return ty
