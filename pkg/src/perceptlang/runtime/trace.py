"""Tab-separated event trace shared by the agents of a platform."""

from __future__ import annotations

import logging
import threading
from typing import Optional, TextIO

KINDS = ("percept", "message", "behaviour", "lifecycle")
NO_PRIORITY = "-"

log = logging.getLogger("perceptlang.trace")


class Trace:
    """Sequence-numbered event log.

    Each line is ``seq<TAB>aid<TAB>kind<TAB>detail<TAB>priority``. DSL ``log``
    output is kept apart in :attr:`logs` but draws from the same sequence so
    the two can be interleaved afterwards.
    """

    def __init__(self, sink: Optional[TextIO] = None, enabled: bool = True):
        self.enabled = enabled
        self.sink = sink
        self.lines: list[str] = []
        self.logs: list[tuple[int, str, str]] = []
        self._seq = 0
        self._lock = threading.Lock()

    def record(self, aid, kind: str, detail: str, priority=NO_PRIORITY) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown trace kind {kind!r}")
        if not self.enabled:
            return 0
        with self._lock:
            self._seq += 1
            line = f"{self._seq}\t{aid}\t{kind}\t{detail}\t{priority}"
            self.lines.append(line)
            if self.sink is not None:
                self.sink.write(line + "\n")
            return self._seq

    def log(self, aid, text: str) -> None:
        log.info("%s: %s", aid, text)
        with self._lock:
            self._seq += 1
            self.logs.append((self._seq, str(aid), text))

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)

    def select(self, kind: Optional[str] = None, aid=None) -> list[list[str]]:
        """Split lines, optionally filtered by kind and agent."""
        out = []
        for line in self.lines:
            cols = line.split("\t")
            if kind is not None and cols[2] != kind:
                continue
            if aid is not None and cols[1] != str(aid):
                continue
            out.append(cols)
        return out
