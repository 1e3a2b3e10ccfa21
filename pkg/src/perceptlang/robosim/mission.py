"""Drive the RoboMe agent through a corridor and score what it mapped."""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from ..platform import Platform
from ..runtime import RuntimeConfig, State, Trace
from ..values import OntologyValue
from .interface import RoboMeInterface, bind_foreign_interface
from .world import GroundTruth, World, WorldConfig

AGENT_TYPE = "RoboMe"
AGENT_NAME = "robome"


def robome_program():
    """Type-checked RoboMe program from the packaged corpus."""
    from .. import load_corpus

    return load_corpus("robome")


@dataclass
class MapEntry:
    key: tuple  # (x, y) stored by the agent
    label: str
    truth: Optional[tuple]  # true robot (x, y) when that label was read

    @property
    def error(self) -> float:
        if self.truth is None:
            return math.inf
        return math.hypot(self.key[0] - self.truth[0], self.key[1] - self.truth[1])


@dataclass
class MissionResult:
    seed: int
    ticks: int
    sim_time: float
    reached_end: bool
    intersections: int
    collisions: int
    faces_seen: set
    entries: list = field(default_factory=list)
    handler_errors: list = field(default_factory=list)
    truth: Optional[GroundTruth] = None
    trace_text: str = ""

    @property
    def labels_mapped(self) -> set:
        return {e.label for e in self.entries}

    @property
    def missing_faces(self) -> set:
        return self.faces_seen - self.labels_mapped

    def within(self, radius: float = 1.0) -> tuple[int, int]:
        return sum(e.error <= radius for e in self.entries), len(self.entries)

    def report(self) -> str:
        ok, n = self.within()
        lines = [
            f"seed\t{self.seed}",
            f"ticks\t{self.ticks}",
            f"time\t{self.sim_time:.1f}",
            f"reached-end\t{str(self.reached_end).lower()}",
            f"intersections\t{self.intersections}",
            f"collisions\t{self.collisions}",
            f"faces-seen\t{','.join(sorted(self.faces_seen))}",
            f"faces-missing\t{','.join(sorted(self.missing_faces))}",
            f"map-entries\t{n}",
            f"within-1m\t{ok}",
        ]
        for e in self.entries:
            lines.append(f"entry\t{e.label}\t{e.key[0]:.3f}\t{e.key[1]:.3f}\t{e.error:.3f}")
        return "\n".join(lines) + "\n"


def _xy(key) -> tuple:
    if isinstance(key, OntologyValue):
        return (float(key.get("x")), float(key.get("y")))
    raise TypeError(f"unexpected worldMap key {key!r}")


class _MapTracker:
    """Attributes each worldMap write to the true pose of the read behind it."""

    def __init__(self):
        self.truth: dict = {}  # map key -> (label, true xy)
        self.last_read: dict = {}  # label -> true xy

    def update(self, world_map: dict, before: dict, reads) -> None:
        for r in reads:
            self.last_read[r.label] = r.robot
        for key, label in world_map.items():
            if before.get(key) != label:
                self.truth[key] = (label, self.last_read.get(label))

    def entries(self, world_map: dict) -> list[MapEntry]:
        out = []
        for key, label in world_map.items():
            _, truth = self.truth.get(key, (label, None))
            out.append(MapEntry(_xy(key), label, truth))
        return out


class Mission:
    """One world plus one RoboMe agent on a private platform.

    ``deterministic`` interleaves one world step with one agent step per
    tick. Live mode runs the world on a simulator thread while the agent
    runs on its own.
    """

    def __init__(
        self,
        config: WorldConfig,
        seed: int = 0,
        program=None,
        deterministic: bool = True,
        trace: Optional[Trace] = None,
        platform_id: Optional[str] = None,
        runtime_config: RuntimeConfig = RuntimeConfig(),
    ):
        self.world = World(config, seed)
        self.seed = seed
        self.program = program if program is not None else robome_program()
        self.platform = Platform(
            platform_id or f"sim{seed}",
            deterministic=deterministic,
            program=self.program,
            trace=trace if trace is not None else Trace(),
            config=runtime_config,
        )
        self.iface: RoboMeInterface
        self.iface, handle = bind_foreign_interface(self.world, self.platform)
        self.agent = self.platform.spawn(AGENT_TYPE, AGENT_NAME, {"interface": handle})
        self.iface.agent = self.agent
        self.tracker = _MapTracker()

    @property
    def trace(self) -> Trace:
        return self.platform.trace

    def world_map(self) -> dict:
        # In live mode the agent thread may be writing while we copy.
        for _ in range(100):
            try:
                return dict(self.agent.props.get("worldMap") or {})
            except RuntimeError:
                continue
        return {}

    def tick(self) -> None:
        """One deterministic tick: world step, percept delivery, agent step."""
        n_reads = len(self.world.qr_reads)
        emissions = self.world.step()
        self.iface.deliver(emissions)
        before = self.world_map()
        self.agent.step()
        self.tracker.update(self.world_map(), before, self.world.qr_reads[n_reads:])

    def run(self, max_ticks: int = 6000) -> MissionResult:
        try:
            if self.platform.deterministic:
                self._run_deterministic(max_ticks)
            else:
                self._run_live(max_ticks)
            return self._result()
        finally:
            self.platform.shutdown()

    def _run_deterministic(self, max_ticks: int) -> None:
        for _ in range(max_ticks):
            if self.world.reached_end or not self.agent.alive:
                break
            self.tick()

    def _run_live(self, max_ticks: int, settle: float = 0.05) -> None:
        # Each tick the simulator waits up to ``settle`` seconds for the agent
        # to go idle, so that commands take effect before the next world step.
        done = threading.Event()

        def simulate():
            try:
                for _ in range(max_ticks):
                    if self.world.reached_end or not self.agent.alive:
                        break
                    n_reads = len(self.world.qr_reads)
                    before = self.world_map()
                    self.iface.deliver(self.world.step())
                    self._wait_idle(settle)
                    self.tracker.update(self.world_map(), before, self.world.qr_reads[n_reads:])
            finally:
                done.set()

        sim = threading.Thread(target=simulate, name=f"simulator-{self.seed}", daemon=True)
        sim.start()
        done.wait()
        sim.join()
        self._wait_idle(2.0)

    def _wait_idle(self, timeout: float) -> None:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.agent.state is State.WAITING and not self.agent.has_runnable_work():
                return
            time.sleep(0.0005)

    def _result(self) -> MissionResult:
        w = self.world
        world_map = self.world_map()
        return MissionResult(
            seed=self.seed,
            ticks=w.ticks,
            sim_time=w.time,
            reached_end=w.reached_end,
            intersections=w.intersections,
            collisions=w.collisions,
            faces_seen={r.label for r in w.qr_reads},
            entries=self.tracker.entries(world_map),
            handler_errors=list(self.agent.handler_errors),
            truth=w.ground_truth(),
            trace_text=self.trace.text(),
        )


def run_mission(config: WorldConfig, seed: int = 0, program=None, max_ticks: int = 6000, **kw) -> MissionResult:
    return Mission(config, seed, program=program, **kw).run(max_ticks)
