import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perceptlang import corpus_text
from perceptlang.errors import SemaError
from perceptlang.frontend import nodes as n, parse_source
from perceptlang.frontend.nodes import walk
from perceptlang.sema import check_pattern, check_program, collect_diagnostics, infer_type, resolve_ontologies
from perceptlang.sema import types as t

RB_ONTO = corpus_text("robome_ontology.jas")


def diags(src):
    return [d.message for d in collect_diagnostics(parse_source(src, "t.jas"), "t.jas")]


def assert_error(src, fragment):
    msgs = diags(src)
    assert any(fragment in m for m in msgs), msgs


class TestOntologies:
    def test_percept_priorities(self, robome):
        table = robome.table
        got = {s: table.default_priority(s) for s in ("falling", "obstacle", "qrCodeRead", "position")}
        assert got == {"falling": 10, "obstacle": 8, "qrCodeRead": 4, "position": 2}
        assert all(table.is_percept(s) for s in got)

    def test_root_default_zero(self):
        table = resolve_ontologies(parse_source("ontology O\n\tproposition p extends percept\n"))
        assert table.default_priority("p") == 0 and table.default_priority("percept") == 0

    def test_inherited_priority(self):
        src = "ontology O\n\tproposition p extends percept with priority = 5\n\tproposition q extends p\n"
        assert resolve_ontologies(parse_source(src)).default_priority("q") == 5

    @pytest.mark.parametrize(
        "src, fragment",
        [
            ("ontology O\n\tconcept a extends b\n\tconcept b extends a\n", "cycl"),
            ("ontology O\n\tconcept a\n\tconcept a\n", "duplicate schema"),
            ("ontology O\n\tconcept a extends nope\n", "unknown"),
            ("ontology O\n\tproposition p extends percept with priority = -1\n", "priority"),
            ("ontology O\n\tconcept a(x as integer)\n\tconcept b extends a with y = 1\n", "y"),
        ],
    )
    def test_resolution_errors(self, src, fragment):
        assert_error(src, fragment)

    def test_derived_schema_has_base_properties(self):
        src = "ontology O\n\tconcept a(x as integer)\n\tconcept b(y as text) extends a\n"
        info = resolve_ontologies(parse_source(src)).get("b")
        assert info.property_names() == ["x", "y"]

    def test_subtyping_is_partial_order(self, robome, shapes):
        for table in (robome.table, shapes.table):
            names = list(table.entries)
            types = [t.schema(x) for x in names] + [t.TOP]
            for a in types:
                assert t.is_subtype(a, a, table)
            for a, b in itertools.product(types, repeat=2):
                if a != b and t.is_subtype(a, b, table):
                    assert not t.is_subtype(b, a, table)
            for a, b, c in itertools.product(types, repeat=3):
                if t.is_subtype(a, b, table) and t.is_subtype(b, c, table):
                    assert t.is_subtype(a, c, table)


class TestChecker:
    def test_corpus_clean(self, shapes, robome):
        assert shapes.warnings == [] and robome.warnings == []

    def test_pattern_variable_typed(self, shapes):
        beh = shapes.behaviours["HandleShapeCreated"]
        (handler,) = beh.message_handlers
        assert handler.when.bindings == {"s": t.schema("shape")}

    def test_every_expression_typed(self, shapes, robome):
        # Ontology with-clauses hold declaration constants, not expressions.
        for typed in (shapes, robome):
            decls = [d for d in typed.program.decls if not isinstance(d, n.OntologyDecl)]
            for node in (x for d in decls for x in walk(d)):
                if isinstance(node, n.Expr):
                    assert node.ty is not None and node.ty != t.ERROR, node

    def test_recheck_is_idempotent(self):
        prog = parse_source(corpus_text("shapes.jas"))
        first = check_program(prog)
        before = [(type(x).__name__, x.ty) for x in walk(first.program) if isinstance(x, n.Expr)]
        second = check_program(prog)
        after = [(type(x).__name__, x.ty) for x in walk(second.program) if isinstance(x, n.Expr)]
        assert before == after

    def test_for_agent_required_for_agent_property(self):
        src = corpus_text("shapes.jas").replace("cyclic behaviour HandleShapeCreated for agent ShapeRequester", "cyclic behaviour HandleShapeCreated uses ontology Shapes")
        assert_error(src, "agent property access requires for-agent")

    def test_verbatim_for_agent_provider_rejected(self):
        # With the provider as for-agent, myShape is not an agent property.
        src = corpus_text("shapes.jas").replace("HandleShapeCreated for agent ShapeRequester", "HandleShapeCreated for agent ShapeProvider")
        msgs = diags(src)
        assert any("myShape" in m for m in msgs), msgs

    def test_type_mismatch(self):
        src = RB_ONTO + '\nagent A uses ontology RoboMeApplication\n\tproperty s = "x"\n\ton create do\n\t\ts = position(0, 0)\n'
        assert_error(src, "type mismatch")

    def test_empty_collection_needs_annotation(self):
        src = RB_ONTO + "\nagent A uses ontology RoboMeApplication\n\tproperty worldMap = {}\n"
        assert_error(src, "empty collection literal requires as-annotation")

    def test_content_outside_handler(self):
        src = RB_ONTO + "\nagent A uses ontology RoboMeApplication\n\ton create do\n\t\tlog content\n"
        assert diags(src)

    def test_unknown_identifier(self):
        assert_error("agent A\n\ton create do\n\t\tlog nope\n", "unknown identifier")

    def test_arity_mismatch(self):
        src = RB_ONTO + "\nagent A uses ontology RoboMeApplication\n\tproperty p = position(1.0)\n"
        assert_error(src, "arity")

    def test_activate_argument_errors(self, shapes):
        base = corpus_text("shapes.jas")
        missing = base.replace("shapeProvider = aid(providerName),\n\t\t\t", "")
        assert_error(missing, "missing")
        extra = base.replace("shapeProvider = aid(providerName)", "shapeProvder = aid(providerName)")
        assert_error(extra, "no on-create parameter")

    def test_on_percept_needs_percept_ontology(self):
        src = corpus_text("shapes.jas") + "\ncyclic behaviour P uses ontology Shapes\n\ton percept do\n\t\tlog \"p\"\n"
        assert_error(src, "on percept handler requires an ontology with percept schemas")

    def test_pattern_variable_collision(self):
        src = RB_ONTO + (
            "\ncyclic behaviour B uses ontology RoboMeApplication\n\tproperty x = 1.0\n"
            "\ton percept when content matches position(x, y) do\n\t\tlog \"p\"\n"
        )
        assert_error(src, "collides")

    def test_bound_twice(self):
        src = RB_ONTO + "\ncyclic behaviour B uses ontology RoboMeApplication\n\ton percept when content matches position(x, x) do\n\t\tlog \"p\"\n"
        assert_error(src, "bound twice")

    def test_behaviour_property_shadowing_rejected(self):
        src = RB_ONTO + (
            "\nagent A uses ontology RoboMeApplication\n\tproperty n = 1\n"
            "cyclic behaviour B for agent A\n\tproperty n = 2\n\tdo\n\t\tlog n\n"
        )
        assert_error(src, "shadows agent property")

    def test_check_program_raises(self):
        with pytest.raises(SemaError) as exc:
            check_program(parse_source("agent A\n\ton create do\n\t\tlog nope\n", "x.jas"), file="x.jas")
        rendered = str(exc.value)
        assert rendered.startswith("x.jas:3:")
        assert ": error: " in rendered

    def test_diagnostics_in_source_order(self):
        src = "agent A\n\ton create do\n\t\tlog b\n\t\tlog a\n\t\tlog c\n"
        ds = collect_diagnostics(parse_source(src, "t.jas"), "t.jas")
        assert [d.line for d in ds] == sorted(d.line for d in ds) and len(ds) == 3


class TestInference:
    def test_property_initializer(self, robome):
        assert robome.agents["RoboMe"].properties["currentPosition"].type == t.schema("position")
        assert robome.agents["RoboMe"].properties["worldMap"].type == t.map_of(t.schema("position"), t.TEXT)
        assert robome.agents["RoboMe"].properties["roboMeInterface"].type == t.FOREIGN

    def test_literals_and_aid(self, shapes):
        table = shapes.table
        assert infer_type(n.Literal(1, "integer"), table, {}) == t.INTEGER
        assert infer_type(n.Literal(1.5, "double"), table, {}) == t.DOUBLE
        assert infer_type(n.Literal("a", "text"), table, {}) == t.TEXT
        assert infer_type(n.Call("aid", [n.Literal("provider", "text")]), table, {}) == t.AID
        assert infer_type(n.Call("position", [n.Literal(0, "integer"), n.Literal(0, "integer")]), table, {}) == t.schema("position")


class TestPatterns:
    def test_shape_created_pattern(self, shapes):
        assert check_pattern(n.SchemaPattern("shapeCreated", [n.BindVar("s")]), t.TOP, shapes.table) == {"s": t.schema("shape")}

    def test_robome_percept_patterns(self, robome):
        table = robome.table
        assert check_pattern(n.SchemaPattern("position", [n.BindVar("x"), n.BindVar("y")]), t.TOP, table) == {"x": t.DOUBLE, "y": t.DOUBLE}
        assert check_pattern(n.BindVar("obstacle"), t.TOP, table) == {}
        assert check_pattern(n.SchemaPattern("qrCodeRead", [n.BindVar("qrCode")]), t.TOP, table) == {"qrCode": t.TEXT}

    @pytest.mark.parametrize(
        "pattern",
        [
            n.SchemaPattern("nope", []),
            n.SchemaPattern("position", [n.BindVar("x")]),
            n.SchemaPattern("position", [n.BindVar("x"), n.BindVar("x")]),
        ],
    )
    def test_errors(self, robome, pattern):
        with pytest.raises(SemaError):
            check_pattern(pattern, t.TOP, robome.table)

    def test_incompatible_scrutinee(self, shapes):
        with pytest.raises(SemaError):
            check_pattern(n.SchemaPattern("createShape", [n.Wildcard()]), t.schema("shape"), shapes.table)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_bindings_are_exactly_fresh_variables(shapes, robome, data):
    table = data.draw(st.sampled_from([shapes.table, robome.table]))
    schema = data.draw(st.sampled_from(table.user_schemas()))
    counter = itertools.count()

    def build(name, depth):
        subs = []
        for _, pty in table.get(name).properties:
            pick = data.draw(st.integers(0, 2))
            if pick == 2 and pty.kind == "schema" and depth < 3:
                subs.append(build(pty.name, depth + 1))
            elif pick == 1:
                subs.append(n.Wildcard())
            else:
                subs.append(n.BindVar(f"v{next(counter)}"))
        return n.SchemaPattern(name, subs)

    pattern = build(schema, 0)
    fresh = {node.name for node in walk(pattern) if isinstance(node, n.BindVar)}
    assert set(check_pattern(pattern, t.TOP, table)) == fresh
