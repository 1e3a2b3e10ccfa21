"""Platforms, containers and message routing.

A :class:`Platform` owns the main container, the agent registry and the
trace. A :class:`RemoteContainer` hosts further agents, typically in
another process, and reaches the platform through a link carrying
:mod:`~perceptlang.platform.wire` frames. Links are TCP sockets in live
mode or in-memory pipes in deterministic mode; both go through the same
byte-level encoding.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import weakref
from dataclasses import dataclass
from typing import Any, Optional

from ..errors import DecodeError, LangError, PlatformError, SpawnError, WireError
from ..runtime.agent import AclMessage, AgentRuntime, RuntimeConfig, State
from ..runtime.foreign import ForeignRegistry
from ..runtime.trace import Trace
from ..sema.schema import DELIVERY_FAILURE
from ..values import Aid, decode_canonical, encode_canonical, make_value
from .wire import PROTOCOL_VERSION, Frame, FrameReader, FrameType, encode_frame

log = logging.getLogger(__name__)

MAIN_CONTAINER = "Main-Container"
_platform_ids: "weakref.WeakValueDictionary[str, Platform]" = weakref.WeakValueDictionary()
_ids_lock = threading.Lock()


# -- message <-> frame -----------------------------------------------------


def message_frame(msg: AclMessage, receiver: Aid) -> Frame:
    headers = {
        "to": str(receiver),
        "from": str(msg.sender),
        "performative": msg.performative,
        "ontology": msg.ontology,
    }
    if msg.conversation_id is not None:
        headers["conv-id"] = msg.conversation_id
    return Frame(FrameType.DELIVER, headers, encode_canonical(msg.content))


def frame_message(frame: Frame, table, platform_id: str) -> AclMessage:
    try:
        content = decode_canonical(frame.payload, table)
        sender = Aid.parse(frame.headers["from"], platform_id)
        receiver = Aid.parse(frame.headers["to"], platform_id)
        return AclMessage(
            frame.headers["performative"],
            sender,
            (receiver,),
            content,
            frame.headers.get("ontology", ""),
            frame.headers.get("conv-id"),
        )
    except (KeyError, DecodeError, LangError) as exc:
        raise WireError(f"bad DELIVER frame: {exc}") from None


# -- links -----------------------------------------------------------------


class MemoryPipe:
    """One end of an in-memory link. Frames are encoded to bytes and decoded
    by the peer synchronously, on the sending thread."""

    def __init__(self, handler=None):
        self.peer: Optional[MemoryPipe] = None
        self.handler = handler
        self.reader = FrameReader()
        self.closed = False
        self.bytes_sent = 0

    def send(self, frame: Frame) -> None:
        if self.closed or self.peer is None or self.peer.closed:
            raise PlatformError("link down")
        data = encode_frame(frame)
        self.bytes_sent += len(data)
        for f in self.peer.reader.feed(data):
            self.peer.handler(f)

    def close(self) -> None:
        self.closed = True


class TcpLink:
    """Framed socket with a reader thread that hands frames to ``handler``."""

    def __init__(self, sock: socket.socket, handler, on_close=None, name: str = "link"):
        self.sock = sock
        self.handler = handler
        self.on_close = on_close
        self.closed = False
        self._send_lock = threading.Lock()
        self._thread = threading.Thread(target=self._read_loop, name=f"{name}-reader", daemon=True)

    def start(self) -> None:
        self._thread.start()

    def send(self, frame: Frame) -> None:
        data = encode_frame(frame)
        with self._send_lock:
            if self.closed:
                raise PlatformError("link down")
            try:
                self.sock.sendall(data)
            except OSError as exc:
                self.closed = True
                raise PlatformError(f"link down: {exc}") from None

    def _read_loop(self) -> None:
        reader = FrameReader()
        try:
            while True:
                data = self.sock.recv(65536)
                if not data:
                    break
                for f in reader.feed(data):
                    self.handler(f)
        except (OSError, WireError) as exc:
            log.info("link closed: %s", exc)
        finally:
            self.closed = True
            try:
                self.sock.close()
            except OSError:
                pass
            if self.on_close is not None:
                self.on_close(self)

    def close(self) -> None:
        self.closed = True
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


@dataclass
class MemoryEndpoint:
    """Address of a platform reachable through in-memory pipes."""

    platform: "Platform"


@dataclass
class Registration:
    container: str
    agent: Optional[AgentRuntime] = None  # set for main-container agents
    alive: bool = True


class _ContainerLink:
    def __init__(self, name: str, transport, remote: Optional["RemoteContainer"] = None):
        self.name = name
        self.transport = transport
        self.remote = remote  # in-process peer, for deterministic stepping


# -- hosting base ----------------------------------------------------------


class _Host:
    """Shared agent hosting for the main and remote containers."""

    def __init__(self, platform_id: str, container: str, deterministic: bool, trace: Optional[Trace], config: RuntimeConfig, program=None):
        self.platform_id = platform_id
        self.container = container
        self.deterministic = deterministic
        self.trace = trace if trace is not None else Trace()
        self.config = config
        self.program = program
        self.foreign = ForeignRegistry()
        self.agents: dict[str, AgentRuntime] = {}
        self._lock = threading.RLock()

    def _make_agent(self, agent_type: str, local: str, args: Optional[dict], program) -> AgentRuntime:
        typed = program if program is not None else self.program
        if typed is None:
            raise SpawnError("no program loaded")
        if agent_type not in typed.agents:
            raise SpawnError(f"unknown agent type '{agent_type}'")
        try:
            aid = Aid(local, self.platform_id)
        except LangError as exc:
            raise SpawnError(str(exc)) from None
        return AgentRuntime(self, typed, agent_type, aid, self.config)

    def _start(self, agent: AgentRuntime, args: Optional[dict]) -> None:
        if self.deterministic:
            agent.initialize(dict(args or {}))
        else:
            agent.start_thread(dict(args or {}))

    def agent(self, local: str) -> AgentRuntime:
        return self.agents[local]

    def step_local(self) -> bool:
        busy = False
        for agent in list(self.agents.values()):
            if agent.alive:
                r = agent.step()
                busy = busy or bool(r.percepts_handled or r.behaviour_ran)
        return busy


# -- platform --------------------------------------------------------------


class Platform(_Host):
    def __init__(
        self,
        platform_id: str = "p1",
        deterministic: bool = False,
        program=None,
        trace: Optional[Trace] = None,
        config: RuntimeConfig = RuntimeConfig(),
    ):
        if not platform_id or "@" in platform_id:
            raise PlatformError(f"invalid platform id {platform_id!r}")
        with _ids_lock:
            if platform_id in _platform_ids:
                raise PlatformError(f"duplicate platform id '{platform_id}'")
            _platform_ids[platform_id] = self
        super().__init__(platform_id, MAIN_CONTAINER, deterministic, trace, config, program)
        self.registry: dict[str, Registration] = {}
        self.links: dict[str, _ContainerLink] = {}
        self.order: list[tuple[str, str]] = []  # (container, local) in spawn order
        self.ams = Aid("ams", platform_id)
        self.dropped = 0
        self._server: Optional[socket.socket] = None
        self._closed = False

    # registry

    def _claim(self, local: str, container: str) -> None:
        with self._lock:
            if local in self.registry and self.registry[local].alive:
                raise SpawnError(f"agent name '{local}' already registered")
            self.registry[local] = Registration(container)
            self.order.append((container, local))

    def spawn(self, agent_type: str, local: str, args: Optional[dict] = None, program=None) -> AgentRuntime:
        agent = self._make_agent(agent_type, local, args, program)
        self._claim(local, MAIN_CONTAINER)
        self.registry[local].agent = agent
        self.agents[local] = agent
        try:
            self._start(agent, args)
        except LangError:
            with self._lock:
                self.registry.pop(local, None)
                self.agents.pop(local, None)
                self.order.remove((MAIN_CONTAINER, local))
            raise
        return agent

    def deregister(self, agent: AgentRuntime) -> None:
        with self._lock:
            reg = self.registry.get(agent.aid.local)
            if reg is not None and reg.agent is agent:
                reg.alive = False
        self.trace.record(agent.aid, "lifecycle", "deregistered")

    # routing

    def route(self, msg: AclMessage) -> list[str]:
        """Deliver ``msg`` to each receiver; return a per-receiver report."""
        report = []
        for receiver in msg.receivers:
            report.append(self._route_one(msg, receiver))
        return report

    def _route_one(self, msg: AclMessage, receiver: Aid) -> str:
        reason = None
        with self._lock:
            reg = self.registry.get(receiver.local) if receiver.platform == self.platform_id else None
        if reg is None or not reg.alive:
            reason = "unknown receiver"
        elif reg.agent is not None:
            if reg.agent.deliver(msg):
                return "delivered"
            reason = "receiver destroyed"
        else:
            link = self.links.get(reg.container)
            if link is None:
                reason = "link down"
            else:
                try:
                    link.transport.send(message_frame(msg, receiver))
                    return "forwarded"
                except (PlatformError, WireError) as exc:
                    reason = f"link down: {exc}"
        self._failure(msg, receiver, reason)
        return reason

    def _failure(self, msg: AclMessage, receiver: Aid, reason: str) -> None:
        if msg.sender == self.ams or msg.performative == "failure" and msg.sender.local == "ams":
            self.dropped += 1
            log.warning("dropping failure notice for %s: %s", receiver, reason)
            return
        content = make_value(DELIVERY_FAILURE, [receiver, reason, msg.content], self._table())
        notice = AclMessage("failure", self.ams, (msg.sender,), content, "Prelude", msg.conversation_id)
        self._route_one(notice, msg.sender)

    def _table(self):
        if self.program is not None:
            return self.program.table
        for agent in self.agents.values():
            return agent.table
        from ..sema.schema import SchemaTable

        return SchemaTable()

    # stepping (deterministic mode)

    def step(self) -> bool:
        """One loop step of every agent, in spawn order across containers."""
        busy = False
        for container, local in list(self.order):
            if container == MAIN_CONTAINER:
                agent = self.agents.get(local)
            else:
                link = self.links.get(container)
                agent = link.remote.agents.get(local) if link and link.remote else None
            if agent is not None and agent.alive:
                r = agent.step()
                busy = busy or bool(r.percepts_handled or r.behaviour_ran)
        return busy

    def run(self, max_steps: int, until=None) -> int:
        """Step until ``max_steps``, quiescence, or ``until()`` holds."""
        for i in range(max_steps):
            busy = self.step()
            if until is not None and until():
                return i + 1
            if not busy and not any(a.has_runnable_work() for a in self.all_agents()):
                return i + 1
        return max_steps

    def all_agents(self) -> list[AgentRuntime]:
        out = list(self.agents.values())
        for link in self.links.values():
            if link.remote is not None:
                out.extend(link.remote.agents.values())
        return out

    # containers

    def memory_endpoint(self) -> MemoryEndpoint:
        return MemoryEndpoint(self)

    def listen(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        try:
            srv = socket.create_server((host, port))
        except OSError as exc:
            raise PlatformError(f"cannot bind {host}:{port}: {exc}") from None
        self._server = srv
        threading.Thread(target=self._accept_loop, name=f"{self.platform_id}-accept", daemon=True).start()
        return srv.getsockname()[:2]

    def _accept_loop(self) -> None:
        while not self._closed:
            try:
                sock, _ = self._server.accept()
            except OSError:
                return
            state: dict[str, Any] = {"name": None}
            link = TcpLink(sock, None, name="main")
            link.handler = lambda f, link=link, state=state: self._handle_frame(f, link, state)
            link.on_close = lambda _l, state=state: self._link_closed(state)
            link.start()

    def _connect_memory(self, pipe: MemoryPipe, remote: "RemoteContainer") -> None:
        state: dict[str, Any] = {"name": None, "remote": remote}
        pipe.handler = lambda f: self._handle_frame(f, pipe, state)

    def _link_closed(self, state: dict) -> None:
        name = state.get("name")
        if name is None:
            return
        with self._lock:
            self.links.pop(name, None)
            for reg in self.registry.values():
                if reg.container == name:
                    reg.alive = False
        log.info("container %s detached", name)

    def _reply(self, transport, frame: Frame) -> None:
        try:
            transport.send(frame)
        except PlatformError as exc:
            log.info("reply lost: %s", exc)

    def _handle_frame(self, frame: Frame, transport, state: dict) -> None:
        t = frame.type
        if t is FrameType.PING:
            self._reply(transport, Frame(FrameType.PING, {"status": "pong"}))
            return
        if t is FrameType.REGISTER and "agent" not in frame.headers:
            name = frame.get("container", "")
            if frame.get("version") != PROTOCOL_VERSION:
                self._reply(transport, Frame(FrameType.FAILURE, {"container": name, "reason": "version mismatch"}))
                return
            if frame.get("platform", self.platform_id) != self.platform_id:
                self._reply(transport, Frame(FrameType.FAILURE, {"container": name, "reason": "platform id mismatch"}))
                return
            with self._lock:
                if not name or name == MAIN_CONTAINER or name in self.links:
                    reason = "duplicate container name"
                else:
                    reason = None
                    self.links[name] = _ContainerLink(name, transport, state.get("remote"))
                    state["name"] = name
            if reason:
                self._reply(transport, Frame(FrameType.FAILURE, {"container": name, "reason": reason}))
            else:
                self._reply(transport, Frame(FrameType.REGISTER, {"container": name, "status": "ok"}))
            return
        name = state.get("name")
        if name is None:
            self._reply(transport, Frame(FrameType.FAILURE, {"reason": "container not registered"}))
            return
        if t is FrameType.REGISTER:
            local = frame.headers["agent"]
            try:
                self._claim(local, name)
            except SpawnError as exc:
                self._reply(transport, Frame(FrameType.FAILURE, {"agent": local, "reason": str(exc)}))
                return
            self._reply(transport, Frame(FrameType.REGISTER, {"agent": local, "status": "ok"}))
        elif t is FrameType.DEREGISTER:
            local = frame.headers.get("agent", "")
            with self._lock:
                reg = self.registry.get(local)
                if reg is not None and reg.container == name:
                    reg.alive = False
        elif t is FrameType.DELIVER:
            try:
                msg = frame_message(frame, self._table(), self.platform_id)
            except WireError as exc:
                log.warning("discarding frame from %s: %s", name, exc)
                self.dropped += 1
                return
            self.route(msg)
        else:
            log.info("ignoring %s frame from %s", t.value, name)

    def shutdown(self) -> None:
        self._closed = True
        if self._server is not None:
            self._server.close()
        for link in list(self.links.values()):
            try:
                link.transport.close()
            except OSError:
                pass
        for agent in list(self.agents.values()):
            if agent.alive:
                agent.request_destroy()
        for agent in list(self.agents.values()):
            agent.join(2.0)
        with _ids_lock:
            if _platform_ids.get(self.platform_id) is self:
                del _platform_ids[self.platform_id]


# -- remote container ------------------------------------------------------


class RemoteContainer(_Host):
    def __init__(
        self,
        name: str,
        platform_id: str,
        program=None,
        deterministic: bool = False,
        trace: Optional[Trace] = None,
        config: RuntimeConfig = RuntimeConfig(),
        version: str = PROTOCOL_VERSION,
    ):
        super().__init__(platform_id, name, deterministic, trace, config, program)
        self.version = version
        self.transport = None
        self._replies: "queue.Queue[Frame]" = queue.Queue()
        self.dropped = 0

    def attach(self, endpoint, timeout: float = 2.0) -> None:
        """Connect to the platform and complete the REGISTER handshake."""
        if isinstance(endpoint, MemoryEndpoint):
            mine, theirs = MemoryPipe(self._handle_frame), MemoryPipe()
            mine.peer, theirs.peer = theirs, mine
            endpoint.platform._connect_memory(theirs, self)
            self.transport = mine
        else:
            host, port = endpoint
            try:
                sock = socket.create_connection((host, port), timeout=timeout)
            except socket.timeout:
                raise PlatformError(f"timeout connecting to {host}:{port}") from None
            except OSError as exc:
                raise PlatformError(f"cannot reach {host}:{port}: {exc}") from None
            sock.settimeout(None)
            link = TcpLink(sock, self._handle_frame, name=self.container)
            link.start()
            self.transport = link
        reply = self._request(
            Frame(FrameType.REGISTER, {"container": self.container, "version": self.version, "platform": self.platform_id}),
            timeout,
        )
        if reply.type is FrameType.FAILURE:
            self.transport.close()
            self.transport = None
            raise PlatformError(f"attach rejected: {reply.get('reason')}")

    def _request(self, frame: Frame, timeout: float) -> Frame:
        if self.transport is None:
            raise PlatformError("container is not attached")
        self.transport.send(frame)
        try:
            return self._replies.get(timeout=timeout)
        except queue.Empty:
            raise PlatformError("timeout waiting for platform reply") from None

    def _handle_frame(self, frame: Frame) -> None:
        if frame.type in (FrameType.REGISTER, FrameType.FAILURE) or (frame.type is FrameType.PING and frame.get("status")):
            self._replies.put(frame)
            return
        if frame.type is FrameType.PING:
            self.transport.send(Frame(FrameType.PING, {"status": "pong"}))
            return
        if frame.type is FrameType.DELIVER:
            table = self.program.table if self.program is not None else None
            try:
                msg = frame_message(frame, table, self.platform_id)
            except WireError as exc:
                log.warning("discarding frame: %s", exc)
                self.dropped += 1
                return
            agent = self.agents.get(msg.receivers[0].local)
            if agent is None or not agent.deliver(msg):
                self.dropped += 1

    def ping(self, timeout: float = 2.0) -> bool:
        return self._request(Frame(FrameType.PING), timeout).type is FrameType.PING

    def spawn(self, agent_type: str, local: str, args: Optional[dict] = None, program=None) -> AgentRuntime:
        agent = self._make_agent(agent_type, local, args, program)
        reply = self._request(Frame(FrameType.REGISTER, {"container": self.container, "agent": local}), 2.0)
        if reply.type is FrameType.FAILURE:
            raise SpawnError(reply.get("reason", "registration rejected"))
        self.agents[local] = agent
        self._start(agent, args)
        return agent

    def route(self, msg: AclMessage) -> None:
        for receiver in msg.receivers:
            single = AclMessage(msg.performative, msg.sender, (receiver,), msg.content, msg.ontology, msg.conversation_id)
            try:
                self.transport.send(message_frame(single, receiver))
            except (PlatformError, AttributeError):
                self.dropped += 1
                log.warning("message to %s lost: link down", receiver)

    def deregister(self, agent: AgentRuntime) -> None:
        self.trace.record(agent.aid, "lifecycle", "deregistered")
        try:
            if self.transport is not None:
                self.transport.send(Frame(FrameType.DEREGISTER, {"container": self.container, "agent": agent.aid.local}))
        except PlatformError:
            pass

    def step(self) -> bool:
        return self.step_local()

    def detach(self) -> None:
        for agent in list(self.agents.values()):
            if agent.alive:
                agent.request_destroy()
        if self.transport is not None:
            self.transport.close()
            self.transport = None


def is_waiting(agent: AgentRuntime) -> bool:
    return agent.state is State.WAITING
