"""Corridor world: robot kinematics, obstacles with QR faces, and sensors.

Geometry is 2-D. The corridor spans ``0 <= x <= length`` and
``0 <= y <= width``; obstacles are axis-aligned squares with one QR label
per face. The robot is a point with a heading in radians (0 = +x, counter
clockwise). Turns happen in 90 degree quanta at a fixed angular rate and
leave the robot stopped; queued commands wait until a turn completes.
"""

from __future__ import annotations

import enum
import math
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ScenarioError

FACES = {"W": (-1.0, 0.0), "E": (1.0, 0.0), "S": (0.0, -1.0), "N": (0.0, 1.0)}
EPS = 1e-9


class Motion(enum.Enum):
    STOPPED = "stopped"
    FORWARD = "forward"
    BACKWARD = "backward"
    TURNING_LEFT = "turningLeft"
    TURNING_RIGHT = "turningRight"


COMMANDS = ("stop", "moveForward", "moveBackward", "turnLeft", "turnRight", "headUp", "headDown")


@dataclass(frozen=True)
class Obstacle:
    x: float
    y: float
    side: float
    label: str

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        h = self.side / 2
        return (self.x - h, self.y - h, self.x + h, self.y + h)

    def face_center(self, face: str) -> tuple[float, float]:
        nx, ny = FACES[face]
        h = self.side / 2
        return (self.x + nx * h, self.y + ny * h)

    def face_label(self, face: str) -> str:
        return f"{self.label}-{face}"

    def contains(self, px: float, py: float) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 + EPS < px < x1 - EPS and y0 + EPS < py < y1 - EPS


@dataclass(frozen=True)
class Injection:
    time: float
    percept: str  # bare schema name or canonical encoding
    priority: Optional[int] = None


@dataclass
class WorldConfig:
    length: float = 20.0
    width: float = 2.0
    start: tuple = (0.5, 1.0, 0.0)
    speed: float = 0.2
    turn_rate: float = math.pi / 4
    position_rate: float = 2.0
    position_sigma: float = 0.40
    proximity_range: float = 0.5
    camera_range: float = 1.5
    camera_fov: float = math.radians(60.0)
    dt: float = 0.1
    end_margin: float = 1.0
    obstacles: list = field(default_factory=list)
    injections: list = field(default_factory=list)

    def validate(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ScenarioError("corridor dimensions must be positive")
        if self.dt <= 0 or self.speed < 0 or self.turn_rate <= 0 or self.position_rate <= 0:
            raise ScenarioError("rates and time step must be positive")
        sx, sy, _ = self.start
        if not (0 <= sx <= self.length and 0 <= sy <= self.width):
            raise ScenarioError("start pose outside the corridor")
        for ob in self.obstacles:
            x0, y0, x1, y1 = ob.bounds
            if ob.side <= 0:
                raise ScenarioError(f"obstacle {ob.label}: side must be positive")
            if x0 < 0 or y0 < 0 or x1 > self.length or y1 > self.width:
                raise ScenarioError(f"obstacle {ob.label} at ({ob.x}, {ob.y}) is out of bounds")
            if ob.contains(sx, sy):
                raise ScenarioError(f"start pose lies inside obstacle {ob.label}")
        for i, a in enumerate(self.obstacles):
            for b in self.obstacles[i + 1 :]:
                ax0, ay0, ax1, ay1 = a.bounds
                bx0, by0, bx1, by1 = b.bounds
                if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                    raise ScenarioError(f"obstacles {a.label} and {b.label} overlap")
        labels = [o.label for o in self.obstacles]
        if len(set(labels)) != len(labels):
            raise ScenarioError("obstacle labels must be unique")


@dataclass(frozen=True)
class Emission:
    """A percept produced by one world step: schema name and arguments."""

    schema: str
    args: tuple = ()
    priority: Optional[int] = None
    raw: Optional[str] = None  # canonical text for scripted injections


@dataclass(frozen=True)
class QrRead:
    time: float
    label: str
    robot: tuple  # true (x, y) at the read
    face: tuple  # face centre


def ray_hit(px: float, py: float, dx: float, dy: float, box) -> Optional[float]:
    """Distance along a unit ray to an axis-aligned box, or None."""
    x0, y0, x1, y1 = box
    tmin, tmax = -math.inf, math.inf
    for p, d, lo, hi in ((px, dx, x0, x1), (py, dy, y0, y1)):
        if abs(d) < EPS:
            if p < lo or p > hi:
                return None
            continue
        t1, t2 = (lo - p) / d, (hi - p) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tmin, tmax = max(tmin, t1), min(tmax, t2)
    if tmax <= EPS or tmax < tmin:
        return None  # box is behind the ray, or touched only while leaving it
    return max(tmin, 0.0)


class World:
    """Mutable simulation state. ``step`` is called from one thread at a time;
    :meth:`command` may be called from any thread."""

    def __init__(self, config: WorldConfig, seed: int = 0):
        config.validate()
        self.config = config
        self.seed = seed
        self.rng = random.Random(seed)
        self.x, self.y, self.heading = (float(v) for v in config.start)
        self.motion = Motion.STOPPED
        self.time = 0.0
        self.ticks = 0
        self._turn_left = 0.0
        self._commands: deque = deque()
        self._cmd_lock = threading.Lock()
        self._prox_target: Optional[str] = None
        self._visible_faces: set = set()
        self._pending_injections = sorted(config.injections, key=lambda i: i.time)
        self.command_log: list[tuple[float, str]] = []
        self.path: list[tuple[float, float, float, float]] = [(0.0, self.x, self.y, self.heading)]
        self.qr_reads: list[QrRead] = []
        self.collisions = 0
        self.intersections = 0
        self.reached_end = False

    # -- actuators -------------------------------------------------------

    def command(self, name: str) -> None:
        if name not in COMMANDS:
            raise ValueError(f"unknown command {name!r}")
        with self._cmd_lock:
            self._commands.append(name)

    def _apply_commands(self) -> None:
        while self.motion not in (Motion.TURNING_LEFT, Motion.TURNING_RIGHT):
            with self._cmd_lock:
                if not self._commands:
                    return
                cmd = self._commands.popleft()
            self.command_log.append((round(self.time, 6), cmd))
            self.apply_command(cmd)

    def apply_command(self, cmd: str) -> None:
        if cmd == "stop":
            self.motion = Motion.STOPPED
        elif cmd == "moveForward":
            self.motion = Motion.FORWARD
        elif cmd == "moveBackward":
            self.motion = Motion.BACKWARD
        elif cmd in ("turnLeft", "turnRight"):
            self.motion = Motion.TURNING_LEFT if cmd == "turnLeft" else Motion.TURNING_RIGHT
            self._turn_left = math.pi / 2
        # headUp / headDown move the phone cradle only; nothing to simulate

    # -- geometry --------------------------------------------------------

    def _walls(self):
        L, W = self.config.length, self.config.width
        # thin boxes just outside the corridor
        return {
            "wall-W": (-1.0, -1.0, 0.0, W + 1.0),
            "wall-E": (L, -1.0, L + 1.0, W + 1.0),
            "wall-S": (-1.0, -1.0, L + 1.0, 0.0),
            "wall-N": (-1.0, W, L + 1.0, W + 1.0),
        }

    def cast(self, dx: float, dy: float) -> tuple[Optional[str], float]:
        """Nearest target along direction (dx, dy) from the robot."""
        best, best_d = None, math.inf
        for ob in self.config.obstacles:
            d = ray_hit(self.x, self.y, dx, dy, ob.bounds)
            if d is not None and d < best_d:
                best, best_d = ob.label, d
        for name, box in self._walls().items():
            d = ray_hit(self.x, self.y, dx, dy, box)
            if d is not None and d < best_d:
                best, best_d = name, d
        return best, best_d

    def inside_obstacle(self) -> bool:
        return any(ob.contains(self.x, self.y) for ob in self.config.obstacles)

    # -- stepping --------------------------------------------------------

    def step(self) -> list[Emission]:
        cfg = self.config
        dt = cfg.dt
        t0 = self.time
        out: list[Emission] = []
        self._apply_commands()
        collided = False
        if self.motion in (Motion.FORWARD, Motion.BACKWARD):
            sign = 1.0 if self.motion is Motion.FORWARD else -1.0
            dx, dy = sign * math.cos(self.heading), sign * math.sin(self.heading)
            step = cfg.speed * dt
            _, free = self.cast(dx, dy)
            if free < step + 1e-6:
                step = max(0.0, free - 1e-6)
                collided = True
                self.motion = Motion.STOPPED
                self.collisions += 1
            self.x = min(max(self.x + dx * step, 0.0), cfg.length)
            self.y = min(max(self.y + dy * step, 0.0), cfg.width)
        elif self.motion in (Motion.TURNING_LEFT, Motion.TURNING_RIGHT):
            delta = min(cfg.turn_rate * dt, self._turn_left)
            self._turn_left -= delta
            self.heading += delta if self.motion is Motion.TURNING_LEFT else -delta
            if self._turn_left <= 1e-12:
                quarter = round(self.heading / (math.pi / 2))
                self.heading = (quarter % 4) * (math.pi / 2)
                self.motion = Motion.STOPPED
                self._prox_target = None
        self.ticks += 1
        self.time = self.ticks * dt
        t1 = self.time
        if self.inside_obstacle():
            self.intersections += 1
        self.path.append((round(t1, 6), self.x, self.y, self.heading))
        if self.x >= cfg.length - cfg.end_margin:
            self.reached_end = True

        # scripted events
        while self._pending_injections and self._pending_injections[0].time < t1 - EPS:
            inj = self._pending_injections.pop(0)
            out.append(Emission(inj.percept, (), inj.priority, raw=inj.percept))

        # proximity, edge-triggered per target
        target, dist = self.cast(math.cos(self.heading), math.sin(self.heading))
        if collided or (target is not None and dist <= cfg.proximity_range):
            if collided or target != self._prox_target:
                out.append(Emission("obstacle"))
            self._prox_target = target
        else:
            self._prox_target = None

        # camera, rising edge per face
        visible = self.visible_faces()
        for face in sorted(visible - self._visible_faces):
            ob_label, _, f = face.rpartition("-")
            ob = next(o for o in cfg.obstacles if o.label == ob_label)
            self.qr_reads.append(QrRead(round(t1, 6), face, (self.x, self.y), ob.face_center(f)))
            out.append(Emission("qrCodeRead", (face,)))
        self._visible_faces = visible

        # position fixes at k / rate for k / rate in [t0, t1)
        rate = cfg.position_rate
        k = math.ceil(t0 * rate - 1e-9)
        while k / rate < t1 - 1e-9:
            nx = self.x + self.rng.gauss(0.0, cfg.position_sigma)
            ny = self.y + self.rng.gauss(0.0, cfg.position_sigma)
            out.append(Emission("position", (nx, ny)))
            k += 1
        return out

    def visible_faces(self) -> set:
        cfg = self.config
        hx, hy = math.cos(self.heading), math.sin(self.heading)
        half = cfg.camera_fov / 2
        seen = set()
        for ob in cfg.obstacles:
            for f, (nx, ny) in FACES.items():
                cx, cy = ob.face_center(f)
                vx, vy = cx - self.x, cy - self.y
                d = math.hypot(vx, vy)
                if d > cfg.camera_range or d < EPS:
                    continue
                if -(vx * nx + vy * ny) <= EPS:  # face turned away from the robot
                    continue
                cos_a = (vx * hx + vy * hy) / d
                if cos_a < math.cos(half) - 1e-12:
                    continue
                seen.add(ob.face_label(f))
        return seen

    # -- reporting -------------------------------------------------------

    def ground_truth(self) -> "GroundTruth":
        return GroundTruth(
            list(self.path),
            [(o.label, o.x, o.y, o.side) for o in self.config.obstacles],
            list(self.qr_reads),
        )


@dataclass
class GroundTruth:
    true_path: list
    obstacle_positions: list
    qr_faces_seen: list

    def to_text(self) -> str:
        lines = ["kind\tname\tx\ty\textra"]
        for label, x, y, side in self.obstacle_positions:
            lines.append(f"obstacle\t{label}\t{x!r}\t{y!r}\t{side!r}")
        for r in self.qr_faces_seen:
            lines.append(f"qr\t{r.label}\t{r.robot[0]!r}\t{r.robot[1]!r}\t{r.time!r}")
        if self.true_path:
            t, x, y, h = self.true_path[-1]
            lines.append(f"final\trobot\t{x!r}\t{y!r}\t{t!r}")
        return "\n".join(lines) + "\n"
