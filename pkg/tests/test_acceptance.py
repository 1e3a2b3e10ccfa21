"""Acceptance suite: one PASS/FAIL line per criterion, each with its time budget.

Run ``pytest tests/test_acceptance.py -v``; the verdict lines are written
straight to the terminal, past pytest's output capture.
"""

import functools
import itertools
import random
import re
import threading
import time

import pytest

from perceptlang import CORPUS_PROGRAMS, corpus_text, load_corpus
from perceptlang.frontend import nodes as n
from perceptlang.frontend import parse_source
from perceptlang.platform import Platform, RemoteContainer, decode_frame, encode_frame
from perceptlang.robosim import load_scenario, run_mission
from perceptlang.runtime import AclMessage, Trace, match_value
from perceptlang.sema import collect_diagnostics
from perceptlang.values import OntologyValue, decode_canonical, encode_canonical, make_value

from conftest import compile_src, fresh_platform
from generators import rand_frame, rand_instance, rand_pattern, rand_top_value

KINDS = ("falling", "obstacle", "qrCodeRead", "position")


@pytest.fixture
def verdict(capsys):
    def report(number: int, ok: bool, detail: str, elapsed: float, budget: float) -> None:
        passed = ok and elapsed < budget
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if passed else 'FAIL'} {detail} [{elapsed:.2f}s < {budget:g}s]")
        assert ok, detail
        assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget:g}s"

    return report


def percept(kind: str, table, tag=0, k=0) -> OntologyValue:
    if kind == "position":
        return make_value("position", [float(tag), float(k)], table)
    if kind == "qrCodeRead":
        return make_value("qrCodeRead", [f"{tag}:{k}"], table)
    return make_value(kind, [], table)


@pytest.fixture(scope="module")
def observer_program():
    """The RoboMe ontology plus an agent with no behaviours."""
    src = corpus_text("robome_ontology.jas") + "\nagent Observer uses ontology RoboMeApplication\n\tproperty handled = 0\n"
    return compile_src(src)


def observed(agent) -> list:
    seen: list = []
    agent.percept_observer = seen.append
    return seen


# -- 1 ---------------------------------------------------------------------


def test_criterion_1_corpus_checks_clean(verdict):
    start = time.perf_counter()
    found = []
    for files in CORPUS_PROGRAMS.values():
        parsed = [parse_source(corpus_text(f), f"corpus/{f}") for f in files]
        program = functools.reduce(lambda a, b: a.merged(b), parsed)
        found += collect_diagnostics(program, files[0])
    elapsed = time.perf_counter() - start
    verdict(1, found == [], f"{sum(map(len, CORPUS_PROGRAMS.values()))} files, {len(found)} diagnostics", elapsed, 1.0)


# -- 2 ---------------------------------------------------------------------


def shapes_once(trace: Trace):
    typed = load_corpus("shapes")
    plat = Platform("p1", deterministic=True, program=typed, trace=trace)
    try:
        plat.spawn("ShapeProvider", "provider")
        req = plat.spawn("ShapeRequester", "requester", {"providerName": "provider", "x": 1.0, "y": 2.0})
        steps = plat.run(20, until=lambda: isinstance(req.props.get("myShape"), OntologyValue))
        return req.props.get("myShape"), steps, typed.table
    finally:
        plat.shutdown()


def message_counts(trace: Trace) -> dict:
    perfs = [line.split("\t")[3].split(" ")[0] for line in trace.lines if line.split("\t")[2] == "message"]
    return {p: perfs.count(p) for p in set(perfs)}


def test_criterion_2_shapes(verdict):
    start = time.perf_counter()
    a, b = Trace(), Trace()
    shape, steps, table = shapes_once(a)
    shape_b, _, _ = shapes_once(b)
    elapsed = time.perf_counter() - start
    want_p = make_value("position", [1.0, 2.0], table)
    ok = (
        isinstance(shape, OntologyValue)
        and shape.schema == "shape"
        and shape.get("p") == want_p
        and steps <= 20
        and message_counts(a) == {"request": 1, "inform": 1}
        and a.text() == b.text()
        and shape == shape_b
    )
    verdict(2, ok, f"myShape={encode_canonical(shape) if shape else None} in {steps} steps, messages {message_counts(a)}", elapsed, 1.0)


# -- 3 ---------------------------------------------------------------------


def test_criterion_3_priority_order(verdict, observer_program):
    table = observer_program.table
    rng = random.Random(3)
    plat = fresh_platform(observer_program)
    agent = plat.spawn("Observer", "obs")
    seen = observed(agent)
    start = time.perf_counter()
    bad = 0
    for _ in range(1000):
        batch = []
        for i in range(rng.randint(0, 32)):
            kind = rng.choice(KINDS)
            prio = rng.randint(0, 12) if rng.random() < 0.4 else None
            value = percept(kind, table, i, i)
            agent.notify_event(value, prio)
            batch.append((i, value, table.default_priority(kind) if prio is None else prio))
        seen.clear()
        agent.step()
        oracle = [(v, p) for _, v, p in sorted(batch, key=lambda e: (-e[2], e[0]))]
        bad += [(pp.value, pp.priority) for pp in seen] != oracle
    elapsed = time.perf_counter() - start
    verdict(3, bad == 0, f"1000 batches, {bad} out of order", elapsed, 10.0)


# -- 4 ---------------------------------------------------------------------

BUSY = """
agent Busy uses ontology RoboMeApplication
	property ticks = 0
	on create do
		activate behaviour Tick

cyclic behaviour Tick for agent Busy
	do
		ticks of agent = ticks of agent + 1
	on inform do
		log "message"
"""


def test_criterion_4_saturation_starves_behaviours(verdict, robome_ontology_src):
    typed = compile_src(robome_ontology_src + BUSY)
    table = typed.table
    plat = fresh_platform(typed)
    agent = plat.spawn("Busy", "busy")
    agent.deliver(AclMessage("inform", agent.aid, (agent.aid,), percept("falling", table), "RoboMeApplication"))
    # The injector stays ahead of the agent: every percept handled is
    # followed by a new one arriving on another thread.
    def refill(_pp):
        t = threading.Thread(target=agent.notify_event, args=(percept("position", table),))
        t.start()
        t.join()

    agent.percept_observer = refill
    agent.notify_event(percept("position", table))
    start = time.perf_counter()
    for _ in range(5000):
        agent.step()
    elapsed = time.perf_counter() - start
    starved = agent.props["ticks"] == 0 and plat.trace.logs == []
    detail = f"5000 steps under saturation: {agent.props['ticks']} do-blocks, {len(plat.trace.logs)} on-message"
    # once the injector stops, both kinds of work resume
    agent.percept_observer = None
    for _ in range(5):
        agent.step()
    resumed = agent.props["ticks"] > 0 and len(plat.trace.logs) == 1
    verdict(4, starved and resumed, detail + (", resumed after" if resumed else ", did not resume"), elapsed, 5.0)


# -- 5 ---------------------------------------------------------------------


def test_criterion_5_override_wins(verdict, observer_program):
    table = observer_program.table
    plat = fresh_platform(observer_program)
    agent = plat.spawn("Observer", "obs")
    seen = observed(agent)
    start = time.perf_counter()
    firsts = []
    for trial in range(100):
        seen.clear()
        agent.notify_event(percept("obstacle", table))
        agent.notify_event(percept("position", table, trial, trial), 9)
        agent.step()
        firsts.append((seen[0].value.schema, seen[0].priority, seen[1].value.schema))
    elapsed = time.perf_counter() - start
    wins = sum(f == ("position", 9, "obstacle") for f in firsts)
    verdict(5, wins == 100, f"position(9) before obstacle(8) in {wins}/100 trials", elapsed, 2.0)


# -- 6 ---------------------------------------------------------------------


def test_criterion_6_mission(verdict):
    program = load_corpus("robome")
    start = time.perf_counter()
    reached = clean = faces_ok = ok_keys = keys = 0
    for seed in range(200):
        cfg = load_scenario()
        res = run_mission(cfg, seed=seed, program=program)
        reached += res.reached_end
        clean += res.intersections == 0
        faces_ok += not res.missing_faces
        good, total = res.within(1.0)
        ok_keys += good
        keys += total
    elapsed = time.perf_counter() - start
    share = ok_keys / keys if keys else 0.0
    ok = reached == 200 and clean == 200 and faces_ok == 200 and share >= 0.95
    detail = f"reached {reached}/200, intersection-free {clean}/200, faces mapped {faces_ok}/200, keys within 1 m {ok_keys}/{keys} ({share:.1%})"
    verdict(6, ok, detail, elapsed, 60.0)


# -- 7 ---------------------------------------------------------------------


def oracle_match(p, v, table):
    """Independent reference matcher: returns {name: canonical text} or None."""
    if isinstance(p, n.BindVar) and p.name in table:
        p = n.SchemaPattern(p.name, [])
    if isinstance(p, n.Wildcard):
        return {}
    if isinstance(p, n.BindVar):
        return {p.name: encode_canonical(v)}
    if isinstance(p, n.LiteralPattern):
        same = type(p.value) is type(v) and encode_canonical(p.value) == encode_canonical(v)
        return {} if same else None
    if not isinstance(v, OntologyValue) or p.name not in table:
        return None
    chain, cur = [], v.schema
    while cur is not None:
        chain.append(cur)
        cur = table.get(cur).base
    props = table.get(p.name).properties
    if p.name not in chain or len(props) != len(p.subs):
        return None
    out = {}
    for (prop, _), sub in zip(props, p.subs):
        got = oracle_match(sub, v.get(prop), table)
        if got is None:
            return None
        out.update(got)
    return out


def test_criterion_7_match_value(verdict, robome, shapes):
    rng = random.Random(7)
    counter = itertools.count()
    start = time.perf_counter()
    disagree = matched = 0
    for i in range(10_000):
        table = (robome.table, shapes.table)[i % 2]
        v = rand_instance(rng.choice(table.user_schemas()), table, rng) if rng.random() < 0.8 else rand_top_value(table, rng)
        source = v if rng.random() < 0.7 else rand_instance(rng.choice(table.user_schemas()), table, rng)
        p = rand_pattern(source, table, rng, counter)
        if rng.random() < 0.05:
            p = n.BindVar(rng.choice(table.user_schemas()))
        want = oracle_match(p, v, table)
        got = match_value(p, v, table)
        got = None if got is None else {k: encode_canonical(x) for k, x in got.items()}
        disagree += got != want
        matched += want is not None
    elapsed = time.perf_counter() - start
    verdict(7, disagree == 0, f"10000 pairs ({matched} matching), {disagree} disagreements", elapsed, 10.0)


# -- 8 ---------------------------------------------------------------------

_CONTAINER = re.compile(r"\bc1\b|container=\S+")


def shapes_cross_container(trace: Trace):
    typed = load_corpus("shapes")
    plat = Platform("p1", deterministic=True, program=typed, trace=trace)
    container = RemoteContainer("c1", "p1", program=typed, deterministic=True, trace=trace)
    try:
        container.attach(plat.memory_endpoint())
        container.spawn("ShapeProvider", "provider")
        req = plat.spawn("ShapeRequester", "requester", {"providerName": "provider", "x": 1.0, "y": 2.0})
        plat.run(20, until=lambda: isinstance(req.props.get("myShape"), OntologyValue))
        return req.props.get("myShape")
    finally:
        container.detach()
        plat.shutdown()


def test_criterion_8_round_trips(verdict, robome, shapes):
    rng = random.Random(8)
    start = time.perf_counter()
    value_bad = frame_bad = 0
    for i in range(1000):
        table = (robome.table, shapes.table)[i % 2]
        v = rand_top_value(table, rng)
        text = encode_canonical(v)
        value_bad += encode_canonical(decode_canonical(text, table, None)) != text
        data = encode_frame(rand_frame(rng))
        back, rest = decode_frame(data)
        frame_bad += encode_frame(back) != data or rest != b""
    local, remote = Trace(), Trace()
    shapes_once(local)
    shape = shapes_cross_container(remote)
    strip = lambda tr: [_CONTAINER.sub("", line) for line in tr.lines]
    same_trace = strip(local)[: len(strip(remote))] == strip(remote)[: len(strip(local))] and len(local.lines) > 0
    elapsed = time.perf_counter() - start
    ok = value_bad == 0 and frame_bad == 0 and same_trace and shape is not None
    detail = f"values {1000 - value_bad}/1000, frames {1000 - frame_bad}/1000, cross-container trace {'matches' if same_trace else 'differs'}"
    verdict(8, ok, detail, elapsed, 10.0)


# -- 9 ---------------------------------------------------------------------


def test_criterion_9_concurrent_injection(verdict, observer_program):
    table = observer_program.table
    threads, total = 8, 1_000_000
    per = total // threads
    plat = Platform("accept-9", deterministic=False, program=observer_program, trace=Trace(enabled=False))
    agent = plat.spawn("Observer", "obs")
    seen = observed(agent)
    # Pre-build the percepts so the timed section is injection plus handling.
    plans = []
    for tag in range(threads):
        rng = random.Random(tag)
        plan = []
        for k in range(per):
            kind = KINDS[k % 4]
            prio = rng.randint(0, 12) if rng.random() < 0.25 else None
            plan.append((percept(kind, table, tag, k), prio))
        plans.append(plan)
    barrier = threading.Barrier(threads)

    def inject(plan):
        barrier.wait()
        for value, prio in plan:
            agent.notify_event(value, prio)

    workers = [threading.Thread(target=inject, args=(p,)) for p in plans]
    start = time.perf_counter()
    try:
        for w in workers:
            w.start()
        for w in workers:
            w.join()
        deadline = time.monotonic() + 30
        while len(seen) < total and time.monotonic() < deadline:
            time.sleep(0.01)
        elapsed = time.perf_counter() - start
    finally:
        plat.shutdown()
    counts = {k: 0 for k in KINDS}
    last: dict = {}
    order_bad = 0
    for pp in seen:
        v = pp.value
        counts[v.schema] += 1
        if v.schema == "position":
            tag, k = int(v.get("x")), int(v.get("y"))
        elif v.schema == "qrCodeRead":
            tag, k = map(int, v.get("qrCode").split(":"))
        else:
            continue
        key = (pp.priority, tag)
        order_bad += last.get(key, -1) >= k
        last[key] = k
    expected = {k: total // 4 for k in KINDS}
    ok = counts == expected and order_bad == 0 and len(seen) == total
    verdict(9, ok, f"{threads} threads x {per} notifyEvent: handled {len(seen)}, counts {counts}, {order_bad} order violations", elapsed, 30.0)
