"""The host object a RoboMe agent drives through ``invoke``."""

from __future__ import annotations

import logging
import threading

from ..errors import PerceptRejected, ScenarioError
from ..values import ForeignHandle, OntologyValue, decode_canonical, make_value
from .world import Emission, World

log = logging.getLogger(__name__)


class RoboMeInterface:
    """Bridges a :class:`World` and one agent.

    Actuator calls only queue a command, so they return at once. Percepts
    reach the agent through ``notify_event`` and only after the agent has
    called ``startListening``.
    """

    def __init__(self, world: World):
        self.world = world
        self.agent = None
        self._listening = threading.Event()
        self.delivered = 0
        self.rejected = 0
        self.foreign_methods = {
            "startListening": self.start_listening,
            "callStop": lambda: self._cmd("stop"),
            "callMoveForward": lambda: self._cmd("moveForward"),
            "callMoveBackward": lambda: self._cmd("moveBackward"),
            "callTurnLeft": lambda: self._cmd("turnLeft"),
            "callTurnRight": lambda: self._cmd("turnRight"),
            "callHeadUp": lambda: self._cmd("headUp"),
            "callHeadDown": lambda: self._cmd("headDown"),
        }

    @property
    def listening(self) -> bool:
        return self._listening.is_set()

    def start_listening(self) -> None:
        self._listening.set()

    def _cmd(self, name: str) -> None:
        self.world.command(name)

    def to_percept(self, em: Emission) -> OntologyValue:
        table = self.agent.table
        if em.raw is not None:
            text = em.raw if em.raw.startswith("(") else f"({em.raw})"
            try:
                value = decode_canonical(text, table)
            except Exception as exc:
                raise ScenarioError(f"bad injected percept {em.raw!r}: {exc}") from None
            if not isinstance(value, OntologyValue):
                raise ScenarioError(f"injected value {em.raw!r} is not an ontology value")
            return value
        return make_value(em.schema, list(em.args), table)

    def deliver(self, emissions) -> int:
        """Forward emissions to the bound agent; returns how many were accepted."""
        if self.agent is None or not self.listening:
            return 0
        n = 0
        for em in emissions:
            try:
                self.agent.notify_event(self.to_percept(em), em.priority)
                n += 1
            except PerceptRejected as exc:
                self.rejected += 1
                log.warning("percept rejected: %s", exc)
        self.delivered += n
        return n


def bind_foreign_interface(world: World, host, agent=None) -> tuple[RoboMeInterface, ForeignHandle]:
    """Register a new interface with ``host.foreign``; bind ``agent`` if given."""
    iface = RoboMeInterface(world)
    iface.agent = agent
    return iface, host.foreign.register(iface)

