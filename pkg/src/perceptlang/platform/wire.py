"""Length-prefixed frames exchanged between containers.

Layout: a 4-byte big-endian body length, then the UTF-8 body::

    type:DELIVER
    to:provider@p1
    from:requester@p1
    performative:request
    ontology:Shapes

    (createShape (p (position (x 1.0) (y 2.0))))

Header lines are ``key:value``; a blank line separates them from the payload,
which is the canonical encoding of the message content (or empty).
"""

from __future__ import annotations

import enum
import re
import struct
from dataclasses import dataclass, field

from ..errors import WireError

PROTOCOL_VERSION = "1"
MAX_FRAME = 16 * 1024 * 1024
_KEY = re.compile(r"[a-z][a-z0-9-]*")
_LEN = struct.Struct(">I")


class FrameType(enum.Enum):
    REGISTER = "REGISTER"
    DEREGISTER = "DEREGISTER"
    DELIVER = "DELIVER"
    FAILURE = "FAILURE"
    PING = "PING"


@dataclass
class Frame:
    type: FrameType
    headers: dict = field(default_factory=dict)
    payload: str = ""

    def get(self, key: str, default=None):
        return self.headers.get(key, default)


def encode_frame(frame: Frame) -> bytes:
    lines = [f"type:{frame.type.value}"]
    for key, value in frame.headers.items():
        if key == "type" or not _KEY.fullmatch(key):
            raise WireError(f"invalid header key {key!r}")
        value = str(value)
        if "\n" in value or "\r" in value:
            raise WireError(f"header {key} contains a line break")
        lines.append(f"{key}:{value}")
    body = ("\n".join(lines) + "\n\n" + frame.payload).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise WireError(f"frame of {len(body)} bytes exceeds limit")
    return _LEN.pack(len(body)) + body


def _decode_body(body: bytes) -> Frame:
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireError(f"frame is not UTF-8: {exc}") from None
    head, sep, payload = text.partition("\n\n")
    if not sep:
        raise WireError("frame has no header terminator")
    headers: dict = {}
    ftype = None
    for i, line in enumerate(head.split("\n")):
        key, colon, value = line.partition(":")
        if not colon or not _KEY.fullmatch(key):
            raise WireError(f"malformed header line {line!r}")
        if i == 0:
            if key != "type":
                raise WireError("first header must be type")
            try:
                ftype = FrameType(value)
            except ValueError:
                raise WireError(f"unknown frame type {value!r}") from None
            continue
        if key in headers or key == "type":
            raise WireError(f"duplicate header {key!r}")
        headers[key] = value
    return Frame(ftype, headers, payload)


def decode_frame(data: bytes) -> tuple[Frame, bytes]:
    """Decode one frame from the front of ``data``; return it and the remainder."""
    if len(data) < 4:
        raise WireError("truncated length prefix")
    (size,) = _LEN.unpack_from(data)
    if size > MAX_FRAME:
        raise WireError(f"frame length {size} exceeds limit")
    if len(data) < 4 + size:
        raise WireError("truncated frame body")
    return _decode_body(data[4 : 4 + size]), data[4 + size :]


class FrameReader:
    """Incremental decoder for a byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf += data
        out = []
        while len(self._buf) >= 4:
            (size,) = _LEN.unpack_from(self._buf)
            if size > MAX_FRAME:
                raise WireError(f"frame length {size} exceeds limit")
            if len(self._buf) < 4 + size:
                break
            body = bytes(self._buf[4 : 4 + size])
            del self._buf[: 4 + size]
            out.append(_decode_body(body))
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)
