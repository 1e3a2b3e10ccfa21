"""Runtime values and their canonical text encoding.

The encoding is an s-expression form::

    (position (x 1.0) (y 2.0))
    (aid "requester" "p1")
    (list 1 2 3)
    (map (entry "a" 1))

It doubles as the content language of messages, the payload of wire frames
and the detail column of traces, so it must be deterministic and injective:
floats always render with ``repr`` (which keeps a ``.``, an exponent, or
``inf``/``nan``), and map entries are sorted by the UTF-8 bytes of their
encoded keys.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Optional

from .errors import DecodeError, SchemaError
from .frontend.lexer import quote
from .sema import types as t
from .sema.schema import SchemaTable

log = logging.getLogger(__name__)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


@dataclass(frozen=True)
class Aid:
    local: str
    platform: str

    def __post_init__(self):
        if not self.local or "@" in self.local:
            raise SchemaError(f"invalid agent local name {self.local!r}")

    def __str__(self) -> str:
        return f"{self.local}@{self.platform}"

    @classmethod
    def parse(cls, text: str, default_platform: str) -> "Aid":
        local, sep, platform = text.partition("@")
        return cls(local, platform if sep else default_platform)


@dataclass(frozen=True)
class ForeignHandle:
    """Opaque reference to a host object registered with a foreign registry."""

    id: int

    def __str__(self) -> str:
        return f"<handle {self.id}>"


class OntologyValue:
    """Immutable instance of a schema. Equality is equality of encodings."""

    __slots__ = ("schema", "props", "_enc")

    def __init__(self, schema: str, props: tuple = ()):
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "props", tuple(props))
        object.__setattr__(self, "_enc", None)

    def __setattr__(self, name, value):
        raise AttributeError("ontology values are immutable")

    def get(self, prop: str) -> Any:
        for name, value in self.props:
            if name == prop:
                return value
        raise KeyError(prop)

    def has(self, prop: str) -> bool:
        return any(name == prop for name, _ in self.props)

    @property
    def values(self) -> tuple:
        return tuple(v for _, v in self.props)

    def encoded(self) -> str:
        enc = self._enc
        if enc is None:
            enc = encode_canonical(self)
            object.__setattr__(self, "_enc", enc)
        return enc

    def __eq__(self, other) -> bool:
        if not isinstance(other, OntologyValue):
            return NotImplemented
        return self is other or self.encoded() == other.encoded()

    def __hash__(self) -> int:
        return hash(self.encoded())

    def __repr__(self) -> str:
        return self.encoded()


# -- construction and validation ------------------------------------------


def check_int(v: int) -> int:
    if not INT_MIN <= v <= INT_MAX:
        raise SchemaError(f"integer {v} does not fit in 64 bits")
    return v


def conform(value: Any, ty: t.TypeRepr, table: SchemaTable, where: str = "value") -> Any:
    """Validate ``value`` against ``ty`` and return its frozen form.

    Integers widen to float/double; lists become tuples and maps become
    read-only mappings so the result can live inside an OntologyValue.
    """
    k = ty.kind
    if k == "boolean":
        if isinstance(value, bool):
            return value
    elif k == "integer":
        if isinstance(value, int) and not isinstance(value, bool):
            return check_int(value)
    elif k in ("float", "double"):
        if isinstance(value, float):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            return float(value)
    elif k == "text":
        if isinstance(value, str):
            return value
    elif k == "aid":
        if isinstance(value, Aid):
            return value
    elif k == "foreignHandle":
        if isinstance(value, ForeignHandle):
            return value
    elif k == "list":
        if isinstance(value, (list, tuple)):
            return tuple(conform(v, ty.args[0], table, where) for v in value)
    elif k == "map":
        if isinstance(value, Mapping):
            out = {}
            for key, val in value.items():
                out[conform(key, ty.args[0], table, where)] = conform(val, ty.args[1], table, where)
            return MappingProxyType(out)
    elif k == "schema":
        if isinstance(value, OntologyValue) and is_instance_of(value, ty.name, table):
            return value
    elif k == "ontologyValueTop":
        if isinstance(value, OntologyValue):
            return value
    elif k == "error":
        return value
    raise SchemaError(f"{where}: expected {ty}, got {describe(value)}")


def describe(value: Any) -> str:
    if isinstance(value, OntologyValue):
        return value.schema
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "double"
    if isinstance(value, str):
        return "text"
    if isinstance(value, (list, tuple)):
        return "list"
    if isinstance(value, Mapping):
        return "map"
    return type(value).__name__


def make_value(schema: str, args, table: SchemaTable) -> OntologyValue:
    if schema not in table:
        raise SchemaError(f"unknown schema '{schema}'")
    info = table.get(schema)
    args = list(args)
    if len(args) != info.arity:
        raise SchemaError(f"arity mismatch: {schema} takes {info.arity} argument(s), got {len(args)}")
    props = tuple(
        (name, conform(arg, ty, table, f"{schema}.{name}")) for (name, ty), arg in zip(info.properties, args)
    )
    return OntologyValue(schema, props)


def is_instance_of(v: OntologyValue, schema: str, table: SchemaTable) -> bool:
    if schema not in table:
        log.warning("isInstanceOf: unknown schema %r", schema)
        return False
    return table.extends(v.schema, schema)


def percept_priority(v: OntologyValue, table: SchemaTable) -> int:
    return table.default_priority(v.schema)


def thaw(value: Any) -> Any:
    """Mutable copy of a frozen collection, for use as a DSL variable."""
    if isinstance(value, tuple):
        return [thaw(v) for v in value]
    if isinstance(value, Mapping):
        return {k: thaw(v) for k, v in value.items()}
    return value


# -- canonical encoding ----------------------------------------------------


def encode_canonical(v: Any) -> str:
    if isinstance(v, OntologyValue):
        if v._enc is not None:
            return v._enc
        parts = [v.schema]
        parts.extend(f"({name} {encode_canonical(val)})" for name, val in v.props)
        return "(" + " ".join(parts) + ")"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return quote(v)
    if isinstance(v, Aid):
        return f"(aid {quote(v.local)} {quote(v.platform)})"
    if isinstance(v, (list, tuple)):
        return "(" + " ".join(["list"] + [encode_canonical(x) for x in v]) + ")"
    if isinstance(v, Mapping):
        entries = sorted(
            ((encode_canonical(k), encode_canonical(val)) for k, val in v.items()),
            key=lambda kv: kv[0].encode("utf-8"),
        )
        return "(" + " ".join(["map"] + [f"(entry {k} {val})" for k, val in entries]) + ")"
    raise SchemaError(f"cannot encode {describe(v)}")


_TOKEN = re.compile(
    r'\s*(?:(?P<open>\()|(?P<close>\))|(?P<str>"(?:[^"\\]|\\(?:["\\ntr0]|u[0-9a-fA-F]{4}))*")|(?P<atom>[^\s()"]+))'
)


def _read(text: str):
    """Parse s-expression text into nested lists of ('atom'|'str', text) leaves."""
    pos = 0
    stack: list[list] = [[]]
    n = len(text)
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise DecodeError(f"unexpected input at offset {pos}")
            break
        pos = m.end()
        if m.group("open"):
            stack.append([])
        elif m.group("close"):
            if len(stack) == 1:
                raise DecodeError(f"unbalanced ')' at offset {m.start()}")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group("str") is not None:
            from .frontend.lexer import unquote

            stack[-1].append(("str", unquote(m.group("str"))))
        else:
            stack[-1].append(("atom", m.group("atom")))
        if pos >= n:
            break
    if len(stack) != 1:
        raise DecodeError("unbalanced '(' at end of input")
    if len(stack[0]) != 1:
        raise DecodeError("expected exactly one expression")
    return stack[0][0]


_INT = re.compile(r"-?[0-9]+")
_FLOAT = re.compile(r"-?(?:[0-9]+\.[0-9]+(?:e[+-]?[0-9]+)?|[0-9]+e[+-]?[0-9]+|[0-9]+\.[0-9]+)|-?inf|nan")


def _head(sx) -> str:
    if not isinstance(sx, list) or not sx or not isinstance(sx[0], tuple) or sx[0][0] != "atom":
        raise DecodeError(f"expected a compound form, got {_show(sx)}")
    return sx[0][1]


def _show(sx) -> str:
    if isinstance(sx, tuple):
        return sx[1] if sx[0] == "atom" else quote(sx[1])
    return "(" + " ".join(_show(x) for x in sx) + ")"


def _infer(sx) -> Optional[t.TypeRepr]:
    """Type implied by the surface form; None means any value may follow."""
    if isinstance(sx, tuple):
        tag, text = sx
        if tag == "str":
            return t.TEXT
        if text in ("true", "false"):
            return t.BOOLEAN
        if _INT.fullmatch(text):
            return t.INTEGER
        if _FLOAT.fullmatch(text):
            return t.DOUBLE
        raise DecodeError(f"unexpected atom {text!r}")
    head = _head(sx)
    if head == "aid":
        return t.AID
    if head == "list":
        return t.list_of(None)
    if head == "map":
        return t.map_of(None, None)
    return t.TOP


def _decode(sx, ty: Optional[t.TypeRepr], table: SchemaTable):
    if ty is None:
        ty = _infer(sx)
    k = ty.kind
    if k in ("schema", "ontologyValueTop"):
        name = _head(sx)
        if name not in table:
            raise DecodeError(f"unknown functor '{name}'")
        if k == "schema" and not table.extends(name, ty.name):
            raise DecodeError(f"'{name}' is not an instance of '{ty.name}'")
        info = table.get(name)
        given: dict = {}
        for field_sx in sx[1:]:
            if not isinstance(field_sx, list) or len(field_sx) != 2:
                raise DecodeError(f"malformed property in '{name}': {_show(field_sx)}")
            prop = _head(field_sx)
            if prop in given:
                raise DecodeError(f"duplicate property '{prop}' in '{name}'")
            given[prop] = field_sx[1]
        props = []
        for prop, pty in info.properties:
            if prop not in given:
                raise DecodeError(f"missing property {prop} in '{name}'")
            props.append((prop, _decode(given.pop(prop), pty, table)))
        if given:
            raise DecodeError(f"unknown property {sorted(given)[0]} in '{name}'")
        return OntologyValue(name, tuple(props))
    if isinstance(sx, tuple):
        tag, text = sx
        if k == "text" and tag == "str":
            return text
        if tag == "atom":
            if k == "boolean" and text in ("true", "false"):
                return text == "true"
            if k == "integer" and _INT.fullmatch(text):
                try:
                    return check_int(int(text))
                except Exception as exc:
                    raise DecodeError(str(exc)) from None
            if k in ("float", "double") and (_FLOAT.fullmatch(text) or _INT.fullmatch(text)):
                return float(text)
        raise DecodeError(f"expected {ty}, got {_show(sx)}")
    head = _head(sx)
    if k == "aid" and head == "aid" and len(sx) == 3 and all(isinstance(x, tuple) and x[0] == "str" for x in sx[1:]):
        try:
            return Aid(sx[1][1], sx[2][1])
        except SchemaError as exc:
            raise DecodeError(str(exc)) from None
    if k == "list" and head == "list":
        return tuple(_decode(x, ty.args[0], table) for x in sx[1:])
    if k == "map" and head == "map":
        out = {}
        for entry in sx[1:]:
            if _head(entry) != "entry" or len(entry) != 3:
                raise DecodeError(f"malformed map entry {_show(entry)}")
            key = _decode(entry[1], ty.args[0], table)
            if key in out:
                raise DecodeError("duplicate map key")
            out[key] = _decode(entry[2], ty.args[1], table)
        return MappingProxyType(out)
    raise DecodeError(f"expected {ty}, got {_show(sx)}")


def decode_canonical(text: str, table: SchemaTable, ty: Optional[t.TypeRepr] = t.TOP) -> Any:
    """Inverse of :func:`encode_canonical`, validated against ``table``.

    ``ty=None`` accepts any value and takes its type from the surface form.
    """
    return _decode(_read(text), ty, table)
