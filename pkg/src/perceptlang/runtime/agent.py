"""Agents, behaviours and the percept-aware agent loop.

One loop iteration (:meth:`AgentRuntime.step`) does three things:

1. drain the O2A queue, moving every percept into the priority queue;
2. drain the priority queue, highest priority first and FIFO among equals,
   running every applicable registered percept handler for each percept;
3. give one behaviour a turn, round-robin.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

from ..errors import BehaviourError, EvalError, LangError, PerceptRejected, SchemaError, SpawnError
from ..frontend import nodes as n
from ..values import Aid, OntologyValue, conform, encode_canonical
from .interp import UNSET, Event, Frame, Interpreter, display, map_key
from .trace import NO_PRIORITY, Trace

log = logging.getLogger(__name__)


class State(enum.Enum):
    INITIATED = "initiated"
    ACTIVE = "active"
    WAITING = "waiting"
    DESTROYED = "destroyed"


@dataclass(frozen=True)
class RuntimeConfig:
    percepts_preempt_messages: bool = True
    trace_property_updates: bool = True


@dataclass(order=True)
class PrioritizedPercept:
    sort_key: tuple = field(init=False, repr=False)
    value: OntologyValue = field(compare=False)
    priority: int = field(compare=False)
    seq: int = field(compare=False)

    def __post_init__(self):
        self.sort_key = (-self.priority, self.seq)


@dataclass
class AclMessage:
    performative: str
    sender: Aid
    receivers: tuple
    content: OntologyValue
    ontology: str = ""
    conversation_id: Optional[str] = None


@dataclass
class StepReport:
    percepts_handled: int = 0
    behaviour_ran: Optional[str] = None


class BehaviourInstance:
    def __init__(self, iid: int, info):
        self.id = iid
        self.info = info
        self.type_name = info.name
        self.kind = info.kind
        self.props: dict[str, Any] = {}
        self.alive = True
        self.ran = False

    def __repr__(self) -> str:
        return f"<{self.type_name}#{self.id}>"


def _default(ty) -> Any:
    return {
        "boolean": False,
        "integer": 0,
        "float": 0.0,
        "double": 0.0,
        "text": "",
        "list": [],
        "map": {},
    }.get(ty.kind, UNSET)


class AgentRuntime:
    """State of one agent. Everything but the queues belongs to its own thread."""

    def __init__(self, host, typed, agent_type: str, aid: Aid, config: RuntimeConfig = RuntimeConfig()):
        if agent_type not in typed.agents:
            raise SpawnError(f"unknown agent type '{agent_type}'")
        self.host = host
        self.typed = typed
        self.table = typed.table
        self.info = typed.agents[agent_type]
        self.type_name = agent_type
        self.aid = aid
        self.config = config
        self.props: dict[str, Any] = {}
        self.state = State.INITIATED
        self.interp = Interpreter(self)

        self._lock = threading.Lock()
        self._wake = threading.Condition(self._lock)
        self._o2a: deque = deque()
        self._incoming: deque = deque()
        self._seq = itertools.count()
        self._destroy_requested = False
        self._thread: Optional[threading.Thread] = None

        self.priority_queue: list = []
        self.message_queue: deque = deque()
        self.retained_o2a: list = []  # non-percept objects left on the O2A queue
        self.skipped_non_percepts = 0
        self.active: list[BehaviourInstance] = []
        self.registered_handlers: list = []
        self._cursor = 0
        self._ids = itertools.count(1)
        self._pending_deactivation: list[BehaviourInstance] = []
        self._current: Optional[BehaviourInstance] = None
        self.handler_errors: list[str] = []
        self.percept_observer = None  # optional callable(PrioritizedPercept)

    # -- host plumbing ---------------------------------------------------

    @property
    def platform_id(self) -> str:
        return self.host.platform_id

    @property
    def trace(self) -> Trace:
        return self.host.trace

    @property
    def foreign(self):
        return self.host.foreign

    def _record(self, kind: str, detail: str, priority=NO_PRIORITY) -> None:
        self.trace.record(self.aid, kind, detail, priority)

    def log(self, text: str) -> None:
        self.trace.log(self.aid, text)

    # -- lifecycle -------------------------------------------------------

    def initialize(self, args: dict) -> None:
        """Set properties from their initializers and run on-create."""
        params = self.info.create_params
        names = {p for p, _ in params}
        missing = [p for p, _ in params if p not in args]
        extra = [a for a in args if a not in names]
        if missing:
            raise SpawnError(f"missing on-create argument(s) for {self.type_name}: {', '.join(missing)}")
        if extra:
            raise SpawnError(f"unexpected on-create argument(s) for {self.type_name}: {', '.join(extra)}")
        locals_ = {}
        for p, ty in params:
            try:
                locals_[p] = _dsl_value(conform(args[p], ty, self.table, p), args[p])
            except SchemaError as exc:
                raise SpawnError(str(exc)) from None
        self._record("lifecycle", "created")
        frame = Frame(self)
        try:
            for name, pinfo in self.info.properties.items():
                if pinfo.init is not None:
                    self.props[name] = self.interp.eval(pinfo.init, frame)
                else:
                    self.props[name] = _default(pinfo.type)
        except LangError as exc:
            raise SpawnError(f"property initialization failed: {exc}") from None
        if self.info.on_create is not None:
            self._guarded("on create", lambda: self.interp.run_block(self.info.on_create.body, Frame(self, locals=locals_)))
        self.state = State.ACTIVE

    def request_destroy(self) -> None:
        """Ask the agent to terminate; runs on its own thread in live mode."""
        if self._thread is not None and threading.get_ident() != self._thread.ident:
            with self._lock:
                self._destroy_requested = True
                self._wake.notify_all()
            return
        self.destroy()

    def destroy(self) -> None:
        if self.state is State.DESTROYED:
            log.warning("%s: destroy on a destroyed agent ignored", self.aid)
            return
        if self.info.on_destroy is not None:
            self._guarded("on destroy", lambda: self.interp.run_block(self.info.on_destroy.body, Frame(self)))
        with self._lock:
            self.state = State.DESTROYED
            self._o2a.clear()
            self._incoming.clear()
            self._wake.notify_all()
        self.priority_queue.clear()
        self.message_queue.clear()
        self._record("lifecycle", "destroyed")
        self.host.deregister(self)

    @property
    def alive(self) -> bool:
        return self.state is not State.DESTROYED

    # -- cross-thread entry points --------------------------------------

    def notify_event(self, percept: OntologyValue, priority: Optional[int] = None) -> bool:
        """Thread-safe percept injection; ``priority`` overrides the schema default."""
        if not isinstance(percept, OntologyValue) or not self.table.is_percept(percept.schema):
            raise PerceptRejected(f"not a percept: {display(percept)}")
        if priority is None:
            priority = self.table.default_priority(percept.schema)
        elif not isinstance(priority, int) or isinstance(priority, bool) or priority < 0:
            raise PerceptRejected(f"priority must be a natural number, got {priority!r}")
        if self._thread is not None and threading.get_ident() == self._thread.ident:
            raise PerceptRejected("notifyEvent must be called from a thread other than the agent's own")
        with self._lock:
            if self.state is State.DESTROYED:
                raise PerceptRejected(f"agent {self.aid} is destroyed")
            self._o2a.append(PrioritizedPercept(percept, priority, next(self._seq)))
            self._wake.notify()
        return True

    def put_o2a(self, obj: Any) -> None:
        """Hand an arbitrary object to the agent; only percepts are consumed."""
        with self._lock:
            self._o2a.append(obj)
            self._wake.notify()

    def deliver(self, msg: AclMessage) -> bool:
        with self._lock:
            if self.state is State.DESTROYED:
                return False
            self._incoming.append(msg)
            self._wake.notify()
        return True

    # -- percept handling ------------------------------------------------

    def _drain_o2a(self) -> None:
        with self._lock:
            items = list(self._o2a)
            self._o2a.clear()
            self.message_queue.extend(self._incoming)
            self._incoming.clear()
        for obj in items:
            if isinstance(obj, PrioritizedPercept):
                heapq.heappush(self.priority_queue, obj)
            elif isinstance(obj, OntologyValue) and self.table.is_percept(obj.schema):
                pp = PrioritizedPercept(obj, self.table.default_priority(obj.schema), next(self._seq))
                heapq.heappush(self.priority_queue, pp)
            else:
                self.skipped_non_percepts += 1
                self.retained_o2a.append(obj)

    def _o2a_has_percept(self) -> bool:
        with self._lock:
            return any(isinstance(o, (PrioritizedPercept, OntologyValue)) for o in self._o2a)

    def step(self) -> StepReport:
        if self.state is State.DESTROYED:
            return StepReport()
        self.state = State.ACTIVE
        report = StepReport()
        self._drain_o2a()
        while self.priority_queue:
            pp = heapq.heappop(self.priority_queue)
            report.percepts_handled += 1
            self._handle_percept(pp)
            if self.state is State.DESTROYED:
                return report
        if self.config.percepts_preempt_messages and self._o2a_has_percept():
            return report
        report.behaviour_ran = self._schedule()
        if not report.percepts_handled and report.behaviour_ran is None and not self.has_runnable_work():
            self.state = State.WAITING
        return report

    def _handle_percept(self, pp: PrioritizedPercept) -> None:
        self._record("percept", encode_canonical(pp.value), pp.priority)
        if self.percept_observer is not None:
            self.percept_observer(pp)
        for inst, handler in list(self.registered_handlers):
            if not inst.alive:
                continue
            frame = Frame(self, inst, Event(pp.value, priority=pp.priority))
            if self._applicable(handler, inst, frame, pp.value, "on percept"):
                self._guarded(f"{inst.type_name}.on percept", lambda: self.interp.run_block(handler.body, frame))
        self._apply_deactivations()

    def _applicable(self, handler, inst: BehaviourInstance, frame: Frame, content, where: str) -> bool:
        if handler.when is None:
            return isinstance(content, OntologyValue) and content.schema in inst.info.visible
        try:
            return bool(self.interp.eval(handler.when, frame))
        except LangError as exc:
            self._handler_error(f"{inst.type_name}.{where} when", exc)
            return False

    def _schedule(self) -> Optional[str]:
        count = len(self.active)
        for k in range(count):
            idx = (self._cursor + k) % count
            inst = self.active[idx]
            if not inst.alive:
                continue
            if self._behaviour_step(inst):
                self._cursor = idx + 1
                name = inst.type_name
                self._apply_deactivations()
                if self.active:
                    self._cursor %= len(self.active)
                else:
                    self._cursor = 0
                return name
        return None

    def _behaviour_step(self, inst: BehaviourInstance) -> bool:
        chosen = None
        for msg in list(self.message_queue):
            for handler in inst.info.message_handlers:
                if handler.performative != msg.performative:
                    continue
                frame = Frame(self, inst, Event(msg.content, msg.sender, msg.performative))
                if self._applicable(handler, inst, frame, msg.content, f"on {handler.performative}"):
                    chosen = (msg, handler, frame)
                    break
            if chosen:
                break
        do_block = inst.info.do_action
        if chosen is None and do_block is None:
            return False
        self._current = inst
        try:
            self._record("behaviour", inst.type_name)
            if chosen is not None:
                msg, handler, frame = chosen
                self.message_queue.remove(msg)
                self._record("message", f"{msg.performative} {msg.sender} {encode_canonical(msg.content)}")
                self._guarded(f"{inst.type_name}.on {handler.performative}", lambda: self.interp.run_block(handler.body, frame))
            if do_block is not None and inst.alive:
                self._guarded(f"{inst.type_name}.do", lambda: self.interp.run_block(do_block, Frame(self, inst)))
        finally:
            self._current = None
        inst.ran = True
        if inst.kind == "oneshot" and inst.alive and inst not in self._pending_deactivation:
            self._pending_deactivation.append(inst)
        return True

    def has_runnable_work(self) -> bool:
        """Whether another step could do something without new events."""
        with self._lock:
            if self._o2a or self._incoming:
                return True
        if self.priority_queue:
            return True
        return any(inst.alive and inst.info.do_action is not None for inst in self.active)

    # -- behaviours ------------------------------------------------------

    def activate(self, type_name: str, args: dict) -> int:
        info = self.typed.behaviours.get(type_name)
        if info is None:
            raise BehaviourError(f"unknown behaviour '{type_name}'")
        if info.for_agent is not None and not self.typed.agent_is_a(self.type_name, info.for_agent):
            raise BehaviourError(f"for-agent mismatch: '{type_name}' is for agent '{info.for_agent}', not '{self.type_name}'")
        names = [p for p, _ in info.create_params]
        missing = [p for p in names if p not in args]
        extra = [a for a in args if a not in names]
        if missing:
            raise BehaviourError(f"missing argument(s) activating '{type_name}': {', '.join(missing)}")
        if extra:
            raise BehaviourError(f"unexpected argument(s) activating '{type_name}': {', '.join(extra)}")
        locals_ = {}
        for p, ty in info.create_params:
            try:
                locals_[p] = _dsl_value(conform(args[p], ty, self.table, p), args[p])
            except SchemaError as exc:
                raise BehaviourError(str(exc)) from None
        inst = BehaviourInstance(next(self._ids), info)
        frame = Frame(self, inst)
        try:
            for name, pinfo in info.properties.items():
                inst.props[name] = self.interp.eval(pinfo.init, frame) if pinfo.init is not None else _default(pinfo.type)
            if info.on_create is not None:
                self.interp.run_block(info.on_create.body, Frame(self, inst, locals=locals_))
        except LangError as exc:
            raise BehaviourError(f"on create of '{type_name}' failed: {exc}") from None
        self.active.append(inst)
        self._recompute_handlers()
        self._record("lifecycle", f"activate {type_name}")
        return inst.id

    def request_deactivate(self, inst: BehaviourInstance) -> None:
        if inst not in self._pending_deactivation and inst.alive:
            self._pending_deactivation.append(inst)

    def deactivate(self, iid: int) -> None:
        inst = next((b for b in self.active if b.id == iid), None)
        if inst is None:
            raise BehaviourError(f"unknown behaviour instance {iid}")
        if inst is self._current:
            self.request_deactivate(inst)
            return
        self._remove(inst)

    def _apply_deactivations(self) -> None:
        while self._pending_deactivation:
            inst = self._pending_deactivation.pop(0)
            if inst in self.active:
                self._remove(inst)

    def _remove(self, inst: BehaviourInstance) -> None:
        idx = self.active.index(inst)
        self.active.pop(idx)
        if idx < self._cursor:
            self._cursor -= 1
        inst.alive = False
        self._recompute_handlers()
        self._record("lifecycle", f"deactivate {inst.type_name}")

    def _recompute_handlers(self) -> None:
        self.registered_handlers = [(inst, h) for inst in self.active for h in inst.info.percept_handlers]

    # -- actions used by the interpreter --------------------------------

    def send(self, performative: str, content, receivers: list) -> None:
        if not isinstance(content, OntologyValue):
            raise EvalError(f"send content is not an ontology value: {display(content)}")
        for r in receivers:
            if not isinstance(r, Aid):
                raise EvalError(f"send receiver is not an aid: {display(r)}")
        if not receivers:
            raise EvalError("send needs at least one receiver")
        ontology = self.table.get(content.schema).ontology
        self.host.route(AclMessage(performative, self.aid, tuple(receivers), content, ontology))

    def call_procedure(self, name: str, args: dict) -> None:
        proc = self.info.procedures.get(name)
        if proc is None:
            raise EvalError(f"unknown procedure '{name}'")
        locals_ = {}
        for p, ty in self.info.param_types[name]:
            if p not in args:
                raise EvalError(f"missing argument '{p}' for procedure '{name}'")
            locals_[p] = args[p]
        try:
            self.interp.run_block(proc.body, Frame(self, locals=locals_))
        except RecursionError:
            raise EvalError(f"recursion too deep in procedure '{name}'") from None

    def set_property(self, name: str, value) -> None:
        self.props[name] = value
        if self.config.trace_property_updates:
            self._record("behaviour", f"set {name} {_enc(value)}")

    def note_property_update(self, name: str, key, value) -> None:
        if self.config.trace_property_updates:
            self._record("behaviour", f"set {name}[{_enc(map_key(key))}] {_enc(value)}")

    # -- fault isolation -------------------------------------------------

    def _guarded(self, where: str, fn) -> None:
        try:
            fn()
        except LangError as exc:
            self._handler_error(where, exc)
        except RecursionError:
            self._handler_error(where, EvalError("recursion too deep"))

    def _handler_error(self, where: str, exc: Exception) -> None:
        msg = f"{where}: {exc}"
        self.handler_errors.append(msg)
        log.warning("%s handler error in %s", self.aid, msg)
        self._record("lifecycle", f"handler-error {msg}")

    # -- live mode -------------------------------------------------------

    def start_thread(self, args: dict, ready: Optional[threading.Event] = None) -> None:
        """Run on-create and then the loop on a dedicated thread."""
        errors: list = []
        started = threading.Event()

        def body():
            try:
                self.initialize(args)
            except LangError as exc:
                errors.append(exc)
                started.set()
                return
            started.set()
            self._loop()

        self._thread = threading.Thread(target=body, name=f"agent-{self.aid}", daemon=True)
        self._thread.start()
        started.wait()
        if errors:
            self._thread.join()
            raise errors[0]

    def _loop(self) -> None:
        while True:
            with self._lock:
                if self._destroy_requested:
                    break
            report = self.step()
            if self.state is State.DESTROYED:
                return
            if report.percepts_handled or report.behaviour_ran:
                continue
            with self._lock:
                while not (self._o2a or self._incoming or self._destroy_requested):
                    self.state = State.WAITING
                    self._wake.wait()
        self.destroy()

    def join(self, timeout: Optional[float] = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)


def _enc(value) -> str:
    try:
        return encode_canonical(value)
    except LangError:
        return display(value)


def _dsl_value(frozen, original):
    """Collections arrive frozen from ``conform``; hand DSL code mutable copies."""
    from ..values import thaw

    return thaw(frozen) if frozen is not original else original
