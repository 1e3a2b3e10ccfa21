"""Scenario and injection-script parsing.

A scenario is plain text, one setting per line::

    length 20
    width 2
    start 0.5 1.0 0
    obstacle 5 1.0 0.6 QR-A

An injection script schedules extra percepts::

    at 3.0 inject falling
    at 4.5 falling priority 12
    at 6 inject (position (x 1.0) (y 1.0))
"""

from __future__ import annotations

import math
import re
from importlib import resources
from pathlib import Path

from ..errors import ScenarioError
from .world import Injection, Obstacle, WorldConfig

_FLOAT_KEYS = {
    "length": "length",
    "width": "width",
    "speed": "speed",
    "position-rate": "position_rate",
    "position-sigma": "position_sigma",
    "proximity-range": "proximity_range",
    "camera-range": "camera_range",
    "dt": "dt",
    "end-margin": "end_margin",
}


def _num(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ScenarioError(f"line {lineno}: expected a number, got {tok!r}") from None
    if not math.isfinite(v):
        raise ScenarioError(f"line {lineno}: number must be finite")
    return v


def parse_scenario(text: str) -> WorldConfig:
    cfg = WorldConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        if key in _FLOAT_KEYS:
            if len(rest) != 1:
                raise ScenarioError(f"line {lineno}: {key} takes one value")
            setattr(cfg, _FLOAT_KEYS[key], _num(rest[0], lineno))
        elif key == "turn-rate-deg":
            cfg.turn_rate = math.radians(_num(rest[0], lineno)) if len(rest) == 1 else _bad(lineno, key)
        elif key == "camera-fov-deg":
            cfg.camera_fov = math.radians(_num(rest[0], lineno)) if len(rest) == 1 else _bad(lineno, key)
        elif key == "start":
            if len(rest) not in (2, 3):
                raise ScenarioError(f"line {lineno}: start takes x y [heading-degrees]")
            x, y = _num(rest[0], lineno), _num(rest[1], lineno)
            h = math.radians(_num(rest[2], lineno)) if len(rest) == 3 else 0.0
            cfg.start = (x, y, h)
        elif key == "obstacle":
            if len(rest) != 4:
                raise ScenarioError(f"line {lineno}: obstacle takes x y side LABEL")
            x, y, side = (_num(v, lineno) for v in rest[:3])
            cfg.obstacles.append(Obstacle(x, y, side, rest[3]))
        elif key == "at":
            cfg.injections.append(_injection(rest, lineno))
        else:
            raise ScenarioError(f"line {lineno}: unknown setting {key!r}")
    cfg.validate()
    return cfg


def _bad(lineno: int, key: str):
    raise ScenarioError(f"line {lineno}: {key} takes one value")


_AT = re.compile(r"(?P<t>\S+)\s+(?:inject\s+)?(?P<p>\(.*\)|[A-Za-z_][A-Za-z0-9_]*)(?:\s+priority\s+(?P<k>\S+))?\s*$")


def _injection(rest: list, lineno: int) -> Injection:
    m = _AT.fullmatch(" ".join(rest))
    if not m:
        raise ScenarioError(f"line {lineno}: expected 'at <time> [inject] <percept> [priority <k>]'")
    t = _num(m.group("t"), lineno)
    if t < 0:
        raise ScenarioError(f"line {lineno}: time must be non-negative")
    k = None
    if m.group("k") is not None:
        try:
            k = int(m.group("k"))
        except ValueError:
            raise ScenarioError(f"line {lineno}: priority must be an integer") from None
        if k < 0:
            raise ScenarioError(f"line {lineno}: priority must be a natural number")
    return Injection(t, m.group("p"), k)


def parse_injections(lines) -> list[Injection]:
    """Parse ``at ...`` lines, with or without the leading ``at``."""
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "at":
            parts = parts[1:]
        out.append(_injection(parts, lineno))
    return out


def default_scenario_text() -> str:
    return resources.files("perceptlang.robosim").joinpath("default_scenario.txt").read_text(encoding="utf-8")


def load_scenario(path=None) -> WorldConfig:
    if path is None:
        return parse_scenario(default_scenario_text())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text)
