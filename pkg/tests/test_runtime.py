import threading

import pytest

from perceptlang import corpus_text
from perceptlang.errors import BehaviourError, PerceptRejected, SpawnError
from perceptlang.frontend import nodes as n
from perceptlang.runtime import RuntimeConfig, State, Trace
from perceptlang.runtime.interp import match_value
from perceptlang.values import Aid, make_value

from conftest import compile_src, fresh_platform

ONTO = corpus_text("robome_ontology.jas")

WATCHER = ONTO + """
agent Watcher uses ontology RoboMeApplication
	property count = 0
	property lastPriority = 0
	on create do
		activate behaviour First
		activate behaviour Second

cyclic behaviour First for agent Watcher
	on percept when content matches position(x, y) do
		log "first position"
	on percept do
		log "first any"
		lastPriority of agent = priority of content

cyclic behaviour Second for agent Watcher
	on percept when content matches position(x, y) and x > 0.0 do
		log "second position"
	on percept when content matches falling do
		log "second falling"
		count of agent = count of agent + 1
"""


@pytest.fixture(scope="module")
def watcher():
    return compile_src(WATCHER)


def spawn(typed, type_name="Watcher", args=None, **kw):
    plat = fresh_platform(typed, **kw)
    return plat, plat.spawn(type_name, "w", args or {})


def logs(agent):
    return [text for _, _, text in agent.trace.logs]


def percepts(agent):
    return [line[3] for line in agent.trace.select("percept")]


class TestPerceptLoop:
    def test_priority_order(self, watcher, robome):
        _, a = spawn(watcher)
        t = a.table
        for v in (make_value("obstacle", [], t), make_value("falling", [], t), make_value("position", [1, 2], t)):
            a.notify_event(v)
        report = a.step()
        assert report.percepts_handled == 3
        assert percepts(a) == ["(falling)", "(obstacle)", "(position (x 1.0) (y 2.0))"]

    def test_fifo_tie_break(self, watcher):
        _, a = spawn(watcher)
        for x in (1, 2, 3):
            a.notify_event(make_value("position", [x, 0], a.table))
        a.step()
        assert percepts(a) == [f"(position (x {x}.0) (y 0.0))" for x in (1, 2, 3)]

    def test_all_applicable_handlers_in_registration_order(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("position", [1, 0], a.table))
        a.notify_event(make_value("falling", [], a.table))
        a.step()
        assert logs(a) == ["first any", "second falling", "first position", "first any", "second position"]
        assert a.props["count"] == 1

    def test_when_guard_false_skips_handler(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("position", [-1, 0], a.table))
        a.step()
        assert logs(a) == ["first position", "first any"]

    def test_priority_override_visible(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("position", [1, 0], a.table), 9)
        a.notify_event(make_value("obstacle", [], a.table))
        a.step()
        assert percepts(a)[0].startswith("(position")
        assert [line[4] for line in a.trace.select("percept")] == ["9", "8"]
        assert a.props["lastPriority"] == 8

    def test_registered_handlers_follow_activation(self, watcher, robome):
        _, a = spawn(watcher)
        assert [(i.type_name, len(i.info.percept_handlers)) for i in a.active] == [("First", 2), ("Second", 2)]
        assert len(a.registered_handlers) == 4
        a.deactivate(a.active[0].id)
        assert len(a.registered_handlers) == 2
        a.notify_event(make_value("falling", [], a.table))
        a.step()
        assert logs(a) == ["second falling"]

    def test_robome_handlers_registered(self, robome):
        plat = fresh_platform(robome)
        from perceptlang.robosim import World, bind_foreign_interface, load_scenario

        _, handle = bind_foreign_interface(World(load_scenario()), plat)
        a = plat.spawn("RoboMe", "r", {"interface": handle})
        assert [i.type_name for i in a.active] == ["HandlePercepts"]
        assert len(a.registered_handlers) == 3

    def test_non_percepts_skipped_and_retained(self, watcher):
        _, a = spawn(watcher)
        a.put_o2a("not a percept")
        a.put_o2a(make_value("falling", [], a.table))
        a.step()
        assert a.skipped_non_percepts == 1 and a.retained_o2a == ["not a percept"]
        assert a.props["count"] == 1

    def test_idle_agent_waits(self):
        typed = compile_src("agent Idle\n\tproperty x = 1\n")
        _, a = spawn(typed, "Idle")
        assert a.active == []
        report = a.step()
        assert (report.percepts_handled, report.behaviour_ran) == (0, None)
        assert a.state is State.WAITING

    def test_handler_only_behaviour_waits(self, shapes):
        plat = fresh_platform(shapes)
        provider = plat.spawn("ShapeProvider", "provider")
        report = provider.step()
        assert report.behaviour_ran is None and provider.state is State.WAITING


class TestNotifyEvent:
    def test_default_priority(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("falling", [], a.table))
        assert a._o2a[0].priority == 10

    def test_rejections(self, watcher, shapes):
        _, a = spawn(watcher)
        sh = make_value("shape", [make_value("position", [0, 0], shapes.table), 1.0], shapes.table)
        with pytest.raises(PerceptRejected):
            a.notify_event(make_value("shapeCreated", [sh], shapes.table))
        for bad in (-1, 1.5, True):
            with pytest.raises(PerceptRejected):
                a.notify_event(make_value("falling", [], a.table), bad)
        a.destroy()
        with pytest.raises(PerceptRejected):
            a.notify_event(make_value("falling", [], a.table))

    def test_override_has_no_upper_bound(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("position", [1, 1], a.table), 10**12)
        a.step()
        assert a.trace.select("percept")[0][4] == str(10**12)

    def test_rejected_from_agent_thread(self):
        src = ONTO + """
agent Selfie uses ontology RoboMeApplication
	property h as any
	on create with h as any do
		h of agent = h
		invoke "poke" on h
"""
        typed = compile_src(src)
        plat = fresh_platform(typed, deterministic=False)
        outcome = []

        class Poker:
            agent = None

            def poke(self):
                try:
                    self.agent.notify_event(make_value("falling", [], typed.table))
                    outcome.append("accepted")
                except PerceptRejected:
                    outcome.append("rejected")

        poker = Poker()
        handle = plat.foreign.register(poker)
        # The agent object exists before on-create runs on its thread.
        orig = plat._make_agent

        def capture(*a, **kw):
            agent = orig(*a, **kw)
            poker.agent = agent
            return agent

        plat._make_agent = capture
        try:
            plat.spawn("Selfie", "s", {"h": handle})
        finally:
            plat.shutdown()
        assert outcome == ["rejected"]


class TestBehaviours:
    def test_shapes_steps(self, shapes):
        plat = fresh_platform(shapes)
        provider = plat.spawn("ShapeProvider", "provider")
        req = plat.spawn("ShapeRequester", "requester", {"providerName": "provider", "x": 1.0, "y": 2.0})
        assert [i.type_name for i in req.active] == ["HandleShapeCreated", "RequestNewShape"]
        r = req.step()
        assert r.behaviour_ran == "RequestNewShape"
        assert [i.type_name for i in req.active] == ["HandleShapeCreated"]
        assert len(provider._incoming) == 1
        provider.step()
        req.step()
        assert req.props["myShape"].encoded() == "(shape (p (position (x 1.0) (y 2.0))) (area 1.0))"
        assert not req.message_queue

    def test_unmatched_message_stays_queued(self, shapes):
        plat = fresh_platform(shapes)
        req = plat.spawn("ShapeRequester", "requester", {"providerName": "nobody", "x": 1.0, "y": 2.0})
        from perceptlang.runtime import AclMessage

        msg = AclMessage("request", Aid("x", plat.platform_id), (req.aid,), make_value("createShape", [make_value("position", [0, 0], shapes.table)], shapes.table), "Shapes")
        req.deliver(msg)
        req.step()  # runs RequestNewShape
        for _ in range(3):
            req.step()
        assert list(req.message_queue).count(msg) == 1

    def test_one_shot_runs_once(self):
        src = "agent A\n\ton create do\n\t\tactivate behaviour Once\n\none shot behaviour Once\n\tdo\n\t\tlog \"once\"\n"
        _, a = spawn(compile_src(src), "A")
        for _ in range(5):
            a.step()
        assert logs(a) == ["once"] and a.active == []

    def test_round_robin(self):
        src = (
            "agent A\n\ton create do\n\t\tactivate behaviour B1\n\t\tactivate behaviour B2\n\n"
            "cyclic behaviour B1\n\tdo\n\t\tlog \"1\"\n\ncyclic behaviour B2\n\tdo\n\t\tlog \"2\"\n"
        )
        _, a = spawn(compile_src(src), "A")
        for _ in range(5):
            a.step()
        assert logs(a) == ["1", "2", "1", "2", "1"]

    def test_self_deactivation_deferred(self):
        src = (
            "agent A\n\ton create do\n\t\tactivate behaviour Quit\n\n"
            "cyclic behaviour Quit\n\tdo\n\t\tdeactivate this\n\t\tlog \"after\"\n"
        )
        _, a = spawn(compile_src(src), "A")
        a.step()
        assert logs(a) == ["after"] and a.active == []
        a.step()
        assert logs(a) == ["after"]

    def test_deactivate_twice(self, watcher):
        _, a = spawn(watcher)
        iid = a.active[0].id
        a.deactivate(iid)
        with pytest.raises(BehaviourError):
            a.deactivate(iid)

    def test_for_agent_mismatch(self, shapes):
        plat = fresh_platform(shapes)
        provider = plat.spawn("ShapeProvider", "provider")
        with pytest.raises(BehaviourError, match="for-agent"):
            provider.activate("HandleShapeCreated", {})

    def test_missing_activation_argument(self, shapes):
        plat = fresh_platform(shapes)
        provider = plat.spawn("ShapeProvider", "provider")
        with pytest.raises(BehaviourError, match="missing"):
            provider.activate("RequestNewShape", {"shapeProvider": Aid("x", "p1")})


class TestLifecycle:
    def test_spawn_missing_argument(self, shapes):
        plat = fresh_platform(shapes)
        with pytest.raises(SpawnError):
            plat.spawn("ShapeRequester", "r", {"x": 1.0, "y": 2.0})

    def test_spawn_name_collision(self, shapes):
        plat = fresh_platform(shapes)
        plat.spawn("ShapeProvider", "provider")
        with pytest.raises(SpawnError):
            plat.spawn("ShapeProvider", "provider")

    def test_destroy(self, watcher):
        src = "agent A\n\ton destroy do\n\t\tlog \"bye\"\n"
        plat, a = spawn(compile_src(src), "A")
        a.destroy()
        seq_log = a.trace.logs[0][0]
        dereg = [int(line.split("\t")[0]) for line in a.trace.lines if line.endswith("deregistered\t-")]
        assert a.trace.logs[0][2] == "bye" and seq_log < dereg[0]
        a.destroy()  # no-op
        assert sum(1 for line in a.trace.lines if "destroyed" in line) == 1

    def test_destroy_discards_queued_percepts(self, watcher):
        _, a = spawn(watcher)
        a.notify_event(make_value("falling", [], a.table))
        a.destroy()
        assert not a._o2a and not a.priority_queue
        assert a.step().percepts_handled == 0


class TestEvaluation:
    PROG = ONTO + """
agent E uses ontology RoboMeApplication
	property worldMap = {} as map of position to text
	property r = 0.0
	property n = 0
	property big = 9223372036854775807
	property h as any
	on create with h as any do
		h of agent = h
		worldMap[position(1, 2)] = "a"
		worldMap[position(1.0, 2.0)] = "b"
		r = x of position(3.0, 4.0)
		n = 7 / 2

	procedure divide with d as integer do
		n = 1 / d

	procedure overflow do
		big = big + 1

	procedure missing do
		log worldMap[position(9, 9)]

	procedure turn do
		invoke "callTurnLeft" on h

	procedure fly do
		invoke "callFly" on h
"""

    @pytest.fixture
    def agent(self):
        from perceptlang.robosim import World, bind_foreign_interface, load_scenario

        typed = compile_src(self.PROG)
        plat = fresh_platform(typed)
        world = World(load_scenario())
        _, handle = bind_foreign_interface(world, plat)
        a = plat.spawn("E", "e", {"h": handle})
        a.world = world
        return a

    def test_map_deep_keys(self, agent):
        (key,) = agent.props["worldMap"]
        assert agent.props["worldMap"][key] == "b"

    def test_of_and_division(self, agent):
        assert agent.props["r"] == 3.0 and agent.props["n"] == 3

    @pytest.mark.parametrize("proc, args, fragment", [("divide", {"d": 0}, "division by zero"), ("overflow", {}, "overflow"), ("missing", {}, "key"), ("fly", {}, "callFly")])
    def test_errors_are_isolated(self, agent, proc, args, fragment):
        agent._guarded(proc, lambda: agent.call_procedure(proc, args))
        assert fragment in agent.handler_errors[-1]
        assert agent.alive

    def test_invoke_reaches_simulator(self, agent):
        agent.call_procedure("turn", {})
        assert list(agent.world._commands) == ["turnLeft"]

    def test_dead_handle(self, agent):
        agent.foreign.release(agent.props["h"])
        agent._guarded("turn", lambda: agent.call_procedure("turn", {}))
        assert "dead handle" in agent.handler_errors[-1]


class TestMatchValue:
    def test_examples(self, shapes, robome):
        st_ = shapes.table
        sh = make_value("shape", [make_value("position", [1, 2], st_), 6.0], st_)
        assert match_value(n.SchemaPattern("shapeCreated", [n.BindVar("s")]), make_value("shapeCreated", [sh], st_), st_) == {"s": sh}
        rt = robome.table
        assert match_value(n.BindVar("obstacle"), make_value("falling", [], rt), rt) is None
        assert match_value(n.SchemaPattern("position", [n.BindVar("x"), n.BindVar("y")]), make_value("position", [3.5, 4.5], rt), rt) == {"x": 3.5, "y": 4.5}
        assert match_value(n.SchemaPattern("percept", []), make_value("falling", [], rt), rt) == {}


def test_percepts_preempt_messages_knob(shapes, robome):
    src = ONTO + """
agent M uses ontology RoboMeApplication
	on create do
		activate behaviour Talk

cyclic behaviour Talk for agent M
	on inform do
		log "message"
	on percept do
		log "percept"
"""
    typed = compile_src(src)
    for preempt, expected in ((True, []), (False, ["message"])):
        plat = fresh_platform(typed, config=RuntimeConfig(percepts_preempt_messages=preempt))
        a = plat.spawn("M", "m")
        a.deliver(__import__("perceptlang.runtime", fromlist=["AclMessage"]).AclMessage("inform", a.aid, (a.aid,), make_value("falling", [], typed.table), "RoboMeApplication"))
        a.notify_event(make_value("falling", [], typed.table))
        original_drain = a._drain_o2a

        def drain_then_inject():
            original_drain()
            a.put_o2a(make_value("obstacle", [], typed.table))

        a._drain_o2a = drain_then_inject
        a.step()
        assert [x for x in logs(a) if x == "message"] == expected


def test_live_agent_wakes_on_percept(watcher):
    plat = fresh_platform(watcher, deterministic=False)
    try:
        a = plat.spawn("Watcher", "w")
        done = threading.Event()
        a.percept_observer = lambda pp: done.set()
        a.notify_event(make_value("falling", [], a.table))
        assert done.wait(2.0)
    finally:
        plat.shutdown()


def test_deterministic_runs_identical(shapes):
    texts = []
    for _ in range(2):
        trace = Trace()
        plat = fresh_platform(shapes, trace=trace)
        plat.spawn("ShapeProvider", "provider")
        plat.spawn("ShapeRequester", "requester", {"providerName": "provider", "x": 1.0, "y": 2.0})
        plat.run(20)
        texts.append(trace.text().replace(plat.platform_id, "P"))
    assert texts[0] == texts[1]
