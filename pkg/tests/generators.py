"""Random values, patterns and frames drawn from a schema table."""

import random
import string

from perceptlang.frontend import nodes as n
from perceptlang.platform import Frame, FrameType
from perceptlang.sema import types as t
from perceptlang.values import Aid, OntologyValue, make_value

_TEXT = string.ascii_letters + string.digits + " \"\\\n\t()é☃"
_PERFS = ["request", "inform", "agree", "failure", "query_if"]


def rand_text(rng: random.Random, n_max: int = 8) -> str:
    return "".join(rng.choice(_TEXT) for _ in range(rng.randint(0, n_max)))


def rand_float(rng: random.Random) -> float:
    pick = rng.random()
    if pick < 0.2:
        return float(rng.randint(-5, 5))
    if pick < 0.3:
        return rng.choice([0.0, -0.0, 1e-300, 1.7976931348623157e308, 0.1, 5e-324])
    return rng.uniform(-1e6, 1e6)


def rand_value(ty, table, rng: random.Random, depth: int = 0):
    k = ty.kind
    if k == "boolean":
        return rng.random() < 0.5
    if k == "integer":
        return rng.choice([0, 1, -1, 2**63 - 1, -(2**63), rng.randint(-1000, 1000)])
    if k in ("float", "double"):
        return rand_float(rng)
    if k == "text":
        return rand_text(rng)
    if k == "aid":
        return Aid(rng.choice(["a", "provider", "r2"]), rng.choice(["p1", "p2"]))
    if k == "list":
        size = 0 if depth > 2 else rng.randint(0, 3)
        return tuple(rand_value(ty.args[0], table, rng, depth + 1) for _ in range(size))
    if k == "map":
        size = 0 if depth > 2 else rng.randint(0, 3)
        return {rand_key(ty.args[0], table, rng): rand_value(ty.args[1], table, rng, depth + 1) for _ in range(size)}
    if k == "schema":
        return rand_instance(ty.name, table, rng, depth + 1)
    if k == "ontologyValueTop":
        return rand_instance(rng.choice(table.user_schemas()), table, rng, depth + 1)
    raise ValueError(f"no generator for {ty}")


def rand_key(ty, table, rng):
    v = rand_value(ty, table, rng, 3)
    return v


def rand_instance(schema: str, table, rng: random.Random, depth: int = 0) -> OntologyValue:
    # Occasionally pick a derived schema, which conforms to the base type.
    subs = [s for s in table.user_schemas() if table.extends(s, schema)]
    name = rng.choice(subs) if subs and rng.random() < 0.3 else schema
    info = table.get(name)
    return make_value(name, [rand_value(pty, table, rng, depth) for _, pty in info.properties], table)


def rand_top_value(table, rng: random.Random):
    """Any value: a primitive, a collection, or an ontology value."""
    choices = [t.BOOLEAN, t.INTEGER, t.DOUBLE, t.TEXT, t.AID, t.list_of(t.INTEGER), t.map_of(t.TEXT, t.DOUBLE), t.TOP]
    return rand_value(rng.choice(choices), table, rng)


def rand_pattern(value, table, rng: random.Random, counter):
    """A pattern that may or may not match ``value``."""
    pick = rng.random()
    if pick < 0.2:
        return n.Wildcard()
    if pick < 0.45 or not isinstance(value, OntologyValue):
        if not isinstance(value, OntologyValue) and rng.random() < 0.5 and isinstance(value, (bool, int, float, str)):
            kind = "boolean" if isinstance(value, bool) else "integer" if isinstance(value, int) else "double" if isinstance(value, float) else "text"
            lit = value if rng.random() < 0.7 else _perturb(value)
            return n.LiteralPattern(lit, kind)
        return n.BindVar(f"v{next(counter)}")
    # schema pattern: the value's own schema, an ancestor, or an unrelated one
    names = [s for s in table.user_schemas()]
    anc = [s for s in table.ancestors(value.schema) if s in table.entries]
    r = rng.random()
    name = value.schema if r < 0.5 else rng.choice(anc or [value.schema]) if r < 0.75 else rng.choice(names)
    info = table.get(name)
    subs = []
    for prop, _ in info.properties:
        sub_v = value.get(prop) if value.has(prop) else None
        subs.append(rand_pattern(sub_v, table, rng, counter) if sub_v is not None else n.BindVar(f"v{next(counter)}"))
    return n.SchemaPattern(name, subs)


def _perturb(v):
    if isinstance(v, bool):
        return not v
    if isinstance(v, int):
        return v + 1 if v < 2**63 - 1 else v - 1
    if isinstance(v, float):
        return v + 1.0 if abs(v) < 1e15 else v / 2
    return v + "x"


def rand_frame(rng: random.Random) -> Frame:
    ftype = rng.choice(list(FrameType))
    keys = ["to", "from", "performative", "ontology", "conv-id", "container", "agent", "reason", "version", "x9-y"]
    headers = {}
    for key in rng.sample(keys, rng.randint(0, len(keys))):
        headers[key] = "".join(rng.choice(string.printable.replace("\n", "").replace("\r", "").replace("\x0b", "").replace("\x0c", "")) for _ in range(rng.randint(0, 12)))
    payload = rand_text(rng, 40)
    return Frame(ftype, headers, payload)
