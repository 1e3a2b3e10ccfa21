"""Tree-walking evaluation of checked expressions and statements."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Optional

from ..errors import EvalError, LangError
from ..frontend import nodes as n
from ..values import (
    INT_MAX,
    INT_MIN,
    Aid,
    ForeignHandle,
    OntologyValue,
    encode_canonical,
    make_value,
    thaw,
)

UNSET = object()


@dataclass
class Event:
    """What ``content``, ``sender`` and ``performative`` refer to in a handler."""

    content: Any
    sender: Optional[Aid] = None
    performative: Optional[str] = None
    priority: Optional[int] = None  # effective priority, for percepts


@dataclass
class Frame:
    agent: Any  # AgentRuntime
    behaviour: Any = None  # BehaviourInstance
    event: Optional[Event] = None
    locals: dict = field(default_factory=dict)


# -- value helpers ---------------------------------------------------------


def is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def values_equal(a, b) -> bool:
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, bool) or isinstance(b, bool) or isinstance(a, str) or isinstance(b, str):
        return type(a) is type(b) and a == b
    if isinstance(a, ForeignHandle) or isinstance(b, ForeignHandle):
        return a == b
    try:
        return encode_canonical(a) == encode_canonical(b)
    except LangError:
        return a == b


def display(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (Aid, ForeignHandle)):
        return str(v)
    try:
        return encode_canonical(v)
    except LangError:
        return str(v)


def copy_value(v):
    """Value semantics for collections: assignment never aliases."""
    if isinstance(v, (list, tuple, Mapping)):
        return thaw(v)
    return v


def map_key(v):
    """Hashable form of a value used as a map key."""
    if isinstance(v, list):
        return tuple(map_key(x) for x in v)
    if isinstance(v, dict):
        raise EvalError("maps cannot be used as map keys")
    return v


def check_int(v: int) -> int:
    if not INT_MIN <= v <= INT_MAX:
        raise EvalError("integer overflow")
    return v


def _arith(op: str, a, b):
    if isinstance(a, int) and isinstance(b, int):
        if op == "+":
            return check_int(a + b)
        if op == "-":
            return check_int(a - b)
        if op == "*":
            return check_int(a * b)
        if b == 0:
            raise EvalError("division by zero")
        q = abs(a) // abs(b)
        return check_int(q if (a >= 0) == (b >= 0) else -q)
    a, b = float(a), float(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0.0:
        raise EvalError("division by zero")
    return a / b


# -- pattern matching ------------------------------------------------------


def match_value(pattern, v, table) -> Optional[dict]:
    """Bindings if ``v`` matches ``pattern``, else None."""
    out: dict = {}
    return out if _match(pattern, v, table, out) else None


def _match(p, v, table, out: dict) -> bool:
    if isinstance(p, n.BindVar) and p.name in table:
        p = n.SchemaPattern(p.name, [])
    if isinstance(p, n.SchemaPattern):
        if not isinstance(v, OntologyValue) or p.name not in table or not table.extends(v.schema, p.name):
            return False
        info = table.get(p.name)
        if len(p.subs) != info.arity:
            return False
        for (prop, _), sub in zip(info.properties, p.subs):
            if not _match(sub, v.get(prop), table, out):
                return False
        return True
    if isinstance(p, n.BindVar):
        out[p.name] = thaw(v)
        return True
    if isinstance(p, n.LiteralPattern):
        return values_equal(p.value, v)
    return isinstance(p, n.Wildcard)


# -- evaluation ------------------------------------------------------------


class Interpreter:
    def __init__(self, agent):
        self.agent = agent
        self.table = agent.table

    # expressions

    def eval(self, e, f: Frame):
        m = getattr(self, "_e_" + type(e).__name__)
        return m(e, f)

    def _e_Literal(self, e: n.Literal, f: Frame):
        return e.value

    def _e_Name(self, e: n.Name, f: Frame):
        ref = e.ref
        if ref == "local" or (ref is None and e.name in f.locals):
            try:
                return f.locals[e.name]
            except KeyError:
                raise EvalError(f"variable '{e.name}' is not assigned") from None
        if ref == "behaviour":
            store = f.behaviour.props
        elif ref == "agent":
            store = f.agent.props
        elif ref == "schema":
            return make_value(e.name, [], self.table)
        else:
            raise EvalError(f"unresolved name '{e.name}'")
        v = store.get(e.name, UNSET)
        if v is UNSET:
            raise EvalError(f"property '{e.name}' is not set")
        return v

    def _e_SpecialRef(self, e: n.SpecialRef, f: Frame):
        w = e.which
        if w == "agent":
            return f.agent
        if w == "this":
            return f.behaviour if f.behaviour is not None else f.agent
        if f.event is None:
            raise EvalError(f"'{w}' is not available here")
        if w == "content":
            return f.event.content
        if w == "sender":
            return f.event.sender
        return f.event.performative

    def _e_OfAccess(self, e: n.OfAccess, f: Frame):
        p = e.prop
        if p == "priority" and isinstance(e.target, n.SpecialRef) and e.target.which == "content":
            if f.event is not None and f.event.priority is not None:
                return f.event.priority
        target = self.eval(e.target, f)
        if isinstance(target, OntologyValue):
            if target.has(p):
                return thaw(target.get(p))
            if p == "priority" and self.table.is_percept(target.schema):
                return self.table.default_priority(target.schema)
            raise EvalError(f"'{target.schema}' has no property '{p}'")
        if isinstance(target, (list, dict, str, tuple)) and p == "length":
            return len(target)
        if isinstance(target, Aid) and p in ("name", "platform"):
            return target.local if p == "name" else target.platform
        props = getattr(target, "props", None)
        if isinstance(props, dict):
            v = props.get(p, UNSET)
            if v is UNSET:
                raise EvalError(f"property '{p}' is not set")
            return v
        raise EvalError(f"cannot read '{p}' of {display(target)}")

    def _e_Call(self, e: n.Call, f: Frame):
        args = [self.eval(a, f) for a in e.args]
        if e.name == "aid":
            return Aid.parse(args[0], self.agent.platform_id)
        try:
            return make_value(e.name, args, self.table)
        except LangError as exc:
            raise EvalError(str(exc)) from None

    def _e_ListLit(self, e: n.ListLit, f: Frame):
        items = [self.eval(i, f) for i in e.items]
        elem = e.ty.args[0] if e.ty is not None and e.ty.kind == "list" else None
        if elem is not None and elem.kind in ("float", "double"):
            items = [float(x) if is_number(x) else x for x in items]
        return items

    def _e_MapLit(self, e: n.MapLit, f: Frame):
        vt = e.ty.args[1] if e.ty is not None and e.ty.kind == "map" else None
        out = {}
        for k, v in e.entries:
            val = self.eval(v, f)
            if vt is not None and vt.kind in ("float", "double") and is_number(val):
                val = float(val)
            out[map_key(self.eval(k, f))] = val
        return out

    def _e_Index(self, e: n.Index, f: Frame):
        target = self.eval(e.target, f)
        idx = self.eval(e.index, f)
        return self._index_read(target, idx)

    def _index_read(self, target, idx):
        if isinstance(target, (list, tuple)):
            if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < len(target):
                raise EvalError(f"list index {display(idx)} out of range")
            return target[idx]
        if isinstance(target, Mapping):
            key = map_key(idx)
            if key not in target:
                raise EvalError(f"missing map key {display(idx)}")
            return target[key]
        raise EvalError(f"cannot index {display(target)}")

    def _e_Binary(self, e: n.Binary, f: Frame):
        op = e.op
        if op == "and":
            return bool(self.eval(e.left, f)) and bool(self.eval(e.right, f))
        if op == "or":
            return bool(self.eval(e.left, f)) or bool(self.eval(e.right, f))
        a = self.eval(e.left, f)
        b = self.eval(e.right, f)
        if op == "=":
            return values_equal(a, b)
        if op == "!=":
            return not values_equal(a, b)
        if op in ("<", "<=", ">", ">="):
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b
        if op == "+" and (isinstance(a, str) or isinstance(b, str)):
            return display(a) + display(b)
        if not (is_number(a) and is_number(b)):
            raise EvalError(f"'{op}' applied to {display(a)} and {display(b)}")
        out = _arith(op, a, b)
        if e.ty is not None and e.ty.kind in ("float", "double"):
            out = float(out)
        return out

    def _e_Unary(self, e: n.Unary, f: Frame):
        v = self.eval(e.operand, f)
        if e.op == "not":
            return not v
        return check_int(-v) if isinstance(v, int) else -v

    def _e_Matches(self, e: n.Matches, f: Frame):
        v = self.eval(e.scrutinee, f)
        pattern = e.resolved if e.resolved is not None else e.pattern
        bindings = match_value(pattern, v, self.table)
        if bindings is None:
            return False
        f.locals.update(bindings)
        return True

    # statements

    def run_block(self, stmts: list, f: Frame) -> None:
        for s in stmts:
            getattr(self, "_s_" + type(s).__name__)(s, f)

    def _s_Assign(self, s: n.Assign, f: Frame):
        value = copy_value(self.eval(s.value, f))
        if s.value.ty is not None and s.value.ty.kind == "integer" and s.target.ty is not None:
            if s.target.ty.kind in ("float", "double"):
                value = float(value)
        t = s.target
        if isinstance(t, n.Name):
            if t.ref == "behaviour":
                f.behaviour.props[t.name] = value
            elif t.ref == "agent":
                self.agent.set_property(t.name, value)
            else:
                f.locals[t.name] = value
        elif isinstance(t, n.OfAccess):
            owner = self.eval(t.target, f)
            if owner is self.agent:
                self.agent.set_property(t.prop, value)
            elif hasattr(owner, "props") and not isinstance(owner, OntologyValue):
                owner.props[t.prop] = value
            else:
                raise EvalError(f"cannot assign '{t.prop}' of {display(owner)}")
        elif isinstance(t, n.Index):
            container = self.eval(t.target, f)
            idx = self.eval(t.index, f)
            if isinstance(container, list):
                if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < len(container):
                    raise EvalError(f"list index {display(idx)} out of range")
                container[idx] = value
            elif isinstance(container, dict):
                container[map_key(idx)] = value
            else:
                raise EvalError(f"cannot assign into {display(container)}")
            root = t.target
            while isinstance(root, n.Index):
                root = root.target
            if isinstance(root, n.Name) and root.ref == "agent":
                self.agent.note_property_update(root.name, idx, value)
            elif isinstance(root, n.OfAccess) and self._is_agent_ref(root.target, f):
                self.agent.note_property_update(root.prop, idx, value)
        else:  # pragma: no cover
            raise EvalError("invalid assignment target")

    def _is_agent_ref(self, e, f: Frame) -> bool:
        return isinstance(e, n.SpecialRef) and (e.which == "agent" or (e.which == "this" and f.behaviour is None))

    def _s_Activate(self, s: n.Activate, f: Frame):
        args = {name: self.eval(e, f) for name, e in s.args}
        self.agent.activate(s.name, args)

    def _s_Deactivate(self, s: n.Deactivate, f: Frame):
        if f.behaviour is None:
            raise EvalError("deactivate this outside a behaviour")
        self.agent.request_deactivate(f.behaviour)

    def _s_Send(self, s: n.Send, f: Frame):
        content = self.eval(s.content, f)
        to = self.eval(s.to, f)
        receivers = list(to) if isinstance(to, (list, tuple)) else [to]
        self.agent.send(s.performative, content, receivers)

    def _s_DoCall(self, s: n.DoCall, f: Frame):
        args = {name: self.eval(e, f) for name, e in s.args}
        self.agent.call_procedure(s.name, args)

    def _s_Invoke(self, s: n.Invoke, f: Frame):
        handle = self.eval(s.target, f)
        if not isinstance(handle, ForeignHandle):
            raise EvalError(f"invoke target is not a handle: {display(handle)}")
        args = [self.eval(a, f) for a in s.args]
        self.agent.foreign.invoke(handle, s.method, args)

    def _s_If(self, s: n.If, f: Frame):
        if self.eval(s.cond, f):
            self.run_block(s.then, f)
        else:
            self.run_block(s.orelse, f)

    def _s_While(self, s: n.While, f: Frame):
        while self.eval(s.cond, f):
            self.run_block(s.body, f)

    def _s_Log(self, s: n.Log, f: Frame):
        self.agent.log(display(self.eval(s.value, f)))
