"""Recursive-descent parser producing :mod:`nodes` trees."""

from __future__ import annotations

from ..errors import ParseError
from . import nodes as n
from .lexer import Kind, Token, tokenize, unquote

# FIPA ACL communicative acts, spelled as DSL identifiers.
PERFORMATIVES = frozenset(
    """
    accept_proposal agree cancel cfp confirm disconfirm failure inform inform_if
    inform_ref not_understood propagate propose proxy query_if query_ref refuse
    reject_proposal request request_when request_whenever subscribe
    """.split()
)

SCHEMA_KINDS = ("concept", "proposition", "predicate", "action")
PRIMITIVE_TYPES = ("boolean", "integer", "float", "double", "text", "string", "any", "aid")
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>"):
        self.toks = tokens
        self.pos = 0
        self.file = file

    # -- token helpers --------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind is not Kind.EOF:
            self.pos += 1
        return t

    def error(self, message: str, expected=(), tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        found = t.lexeme or t.kind.value
        if t.kind is Kind.NEWLINE:
            found = "end of line"
        msg = f"{message} (found {found!r})"
        if expected:
            msg += "; expected one of: " + ", ".join(sorted(set(expected)))
        return ParseError(msg, t.line, t.col, self.file, expected)

    def expect_kw(self, word: str) -> Token:
        if not self.tok.is_kw(word):
            raise self.error(f"expected '{word}'", [word])
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            raise self.error(f"expected '{op}'", [op])
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if self.tok.kind is not Kind.IDENT:
            raise self.error(f"expected {what}", [what])
        return self.advance()

    def expect_newline(self) -> None:
        if self.tok.kind is not Kind.NEWLINE:
            raise self.error("expected end of line", ["newline"])
        self.advance()

    def accept_kw(self, word: str) -> bool:
        if self.tok.is_kw(word):
            self.advance()
            return True
        return False

    def accept_op(self, op: str) -> bool:
        if self.tok.is_op(op):
            self.advance()
            return True
        return False

    def begin_block(self) -> None:
        self.expect_newline()
        if self.tok.kind is not Kind.INDENT:
            raise self.error("expected indented block", ["indent"])
        self.advance()

    def at_block_end(self) -> bool:
        return self.tok.kind in (Kind.DEDENT, Kind.EOF)

    def end_block(self) -> None:
        if self.tok.kind is Kind.DEDENT:
            self.advance()
        elif self.tok.kind is not Kind.EOF:
            raise self.error("expected end of block", ["dedent"])

    def at(self, node: n.Node, tok: Token):
        node.line, node.col = tok.line, tok.col
        return node

    # -- program --------------------------------------------------------

    def parse_program(self) -> n.Program:
        start = self.tok
        module = None
        if self.tok.is_kw("module"):
            self.advance()
            module = self.qualified_name()
            self.expect_newline()
        decls = []
        while self.tok.kind is not Kind.EOF:
            decls.append(self.declaration())
        return self.at(n.Program(module, decls, [self.file] * len(decls)), start)

    def qualified_name(self) -> str:
        parts = [self.expect_ident("module name").lexeme]
        while self.accept_op("."):
            parts.append(self.expect_ident("module name").lexeme)
        return ".".join(parts)

    def declaration(self):
        t = self.tok
        if t.is_kw("ontology"):
            return self.ontology()
        if t.is_kw("agent"):
            return self.agent()
        if t.is_kw("cyclic"):
            self.advance()
            return self.behaviour("cyclic", t)
        if t.is_kw("one"):
            self.advance()
            self.expect_kw("shot")
            return self.behaviour("oneshot", t)
        raise self.error("expected a declaration", ["ontology", "agent", "cyclic", "one"])

    # -- ontologies -----------------------------------------------------

    def ontology(self) -> n.OntologyDecl:
        start = self.expect_kw("ontology")
        name = self.expect_ident("ontology name").lexeme
        base = self.expect_ident("ontology name").lexeme if self.accept_kw("extends") else None
        self.begin_block()
        schemas = []
        while not self.at_block_end():
            schemas.append(self.schema())
        self.end_block()
        return self.at(n.OntologyDecl(name, base, schemas), start)

    def schema(self) -> n.SchemaDecl:
        start = self.tok
        if not start.is_kw(*SCHEMA_KINDS):
            raise self.error("expected a schema declaration", SCHEMA_KINDS)
        kind = self.advance().lexeme
        name = self.expect_ident("schema name").lexeme
        params = []
        if self.accept_op("("):
            if not self.tok.is_op(")"):
                params = self.params()
            self.expect_op(")")
        base = None
        if self.accept_kw("extends"):
            base = self.expect_ident("schema name").lexeme
        withs = []
        if self.tok.is_kw("with"):
            withs = self.with_clauses()
            self.expect_newline()
        elif self.tok.kind is Kind.NEWLINE and self.peek().kind is Kind.INDENT and self.peek(2).is_kw("with"):
            # `with` clause continued on a more-indented line
            self.advance()
            self.advance()
            withs = self.with_clauses()
            self.expect_newline()
            if self.tok.kind is not Kind.DEDENT:
                raise self.error("expected end of continuation", ["dedent"])
            self.advance()
        else:
            self.expect_newline()
        return self.at(n.SchemaDecl(kind, name, params, base, withs), start)

    def with_clauses(self) -> list:
        self.expect_kw("with")
        clauses = [self.with_clause()]
        while self.accept_op(","):
            clauses.append(self.with_clause())
        return clauses

    def with_clause(self):
        name = self.expect_ident("property name").lexeme
        self.expect_op("=")
        return (name, self.literal(allow_negative=True))

    def literal(self, allow_negative: bool = False) -> n.Literal:
        t = self.tok
        sign = 1
        if allow_negative and t.is_op("-") and self.peek().kind in (Kind.INT, Kind.FLOAT):
            self.advance()
            sign = -1
        t2 = self.tok
        if t2.kind is Kind.INT:
            self.advance()
            return self.at(n.Literal(sign * int(t2.lexeme), "integer"), t)
        if t2.kind is Kind.FLOAT:
            self.advance()
            return self.at(n.Literal(sign * float(t2.lexeme), "double"), t)
        if sign == 1 and t2.kind is Kind.TEXT:
            self.advance()
            return self.at(n.Literal(unquote(t2.lexeme), "text"), t)
        if sign == 1 and t2.is_kw("true", "false"):
            self.advance()
            return self.at(n.Literal(t2.lexeme == "true", "boolean"), t)
        raise self.error("expected a literal", ["literal"])

    def params(self) -> list:
        out = [self.param()]
        while self.accept_op(","):
            out.append(self.param())
        return out

    def param(self) -> n.Param:
        t = self.expect_ident("parameter name")
        self.expect_kw("as")
        return self.at(n.Param(t.lexeme, self.type_expr()), t)

    def type_expr(self):
        t = self.tok
        if t.is_kw("list"):
            self.advance()
            self.expect_kw("of")
            return self.at(n.ListType(self.type_expr()), t)
        if t.is_kw("map"):
            self.advance()
            self.expect_kw("of")
            key = self.type_expr()
            self.expect_kw("to")
            return self.at(n.MapType(key, self.type_expr()), t)
        if t.is_kw(*PRIMITIVE_TYPES) or t.kind is Kind.IDENT:
            self.advance()
            return self.at(n.NamedType(t.lexeme), t)
        raise self.error("expected a type", PRIMITIVE_TYPES + ("list", "map", "schema name"))

    # -- agents and behaviours -----------------------------------------

    def uses_clause(self) -> list:
        self.expect_kw("uses")
        self.expect_kw("ontology")
        names = [self.expect_ident("ontology name").lexeme]
        while self.accept_op(","):
            names.append(self.expect_ident("ontology name").lexeme)
        return names

    def agent(self) -> n.AgentDecl:
        start = self.expect_kw("agent")
        decl = self.at(n.AgentDecl(self.expect_ident("agent name").lexeme), start)
        if self.accept_kw("extends"):
            decl.extends = self.expect_ident("agent name").lexeme
        if self.tok.is_kw("uses"):
            decl.ontologies = self.uses_clause()
        self.begin_block()
        while not self.at_block_end():
            t = self.tok
            if t.is_kw("property"):
                decl.properties.append(self.property_decl())
            elif t.is_kw("procedure"):
                decl.procedures.append(self.procedure())
            elif t.is_kw("on") and self.peek().lexeme == "create":
                if decl.on_create is not None:
                    raise self.error("duplicate on create handler")
                decl.on_create = self.on_create()
            elif t.is_kw("on") and self.peek().lexeme == "destroy":
                if decl.on_destroy is not None:
                    raise self.error("duplicate on destroy handler")
                self.advance()
                self.advance()
                self.expect_kw("do")
                decl.on_destroy = self.at(n.OnDestroy(self.block()), t)
            else:
                raise self.error("expected an agent member", ["property", "procedure", "on create", "on destroy"])
        self.end_block()
        return decl

    def behaviour(self, kind: str, start: Token) -> n.BehaviourDecl:
        self.expect_kw("behaviour")
        decl = self.at(n.BehaviourDecl(kind, self.expect_ident("behaviour name").lexeme), start)
        while True:
            if self.accept_kw("extends"):
                decl.extends = self.expect_ident("behaviour name").lexeme
            elif self.tok.is_kw("for"):
                self.advance()
                self.expect_kw("agent")
                decl.for_agent = self.expect_ident("agent name").lexeme
            elif self.tok.is_kw("uses"):
                decl.ontologies.extend(self.uses_clause())
            else:
                break
        self.begin_block()
        while not self.at_block_end():
            t = self.tok
            if t.is_kw("property"):
                decl.properties.append(self.property_decl())
            elif t.is_kw("do"):
                if decl.do_action is not None:
                    raise self.error("a behaviour declares at most one do block")
                self.advance()
                decl.do_action = self.block()
            elif t.is_kw("on"):
                what = self.peek()
                if what.lexeme == "create":
                    if decl.on_create is not None:
                        raise self.error("duplicate on create handler")
                    decl.on_create = self.on_create()
                elif what.kind is Kind.IDENT and what.lexeme == "percept":
                    self.advance()
                    self.advance()
                    when = self.expr() if self.accept_kw("when") else None
                    self.expect_kw("do")
                    decl.percept_handlers.append(self.at(n.OnPercept(when, self.block()), t))
                elif what.kind is Kind.IDENT and what.lexeme in PERFORMATIVES:
                    self.advance()
                    self.advance()
                    when = self.expr() if self.accept_kw("when") else None
                    self.expect_kw("do")
                    decl.message_handlers.append(self.at(n.OnMessage(what.lexeme, when, self.block()), t))
                else:
                    self.advance()
                    raise self.error("expected an event name", ["create", "percept", "performative"])
            else:
                raise self.error("expected a behaviour member", ["property", "do", "on"])
        self.end_block()
        return decl

    def property_decl(self) -> n.PropertyDecl:
        start = self.expect_kw("property")
        name = self.expect_ident("property name").lexeme
        ty = self.type_expr() if self.accept_kw("as") else None
        init = self.expr() if self.accept_op("=") else None
        if ty is None and init is None:
            raise self.error("property needs a type or an initializer", ["as", "="])
        self.expect_newline()
        return self.at(n.PropertyDecl(name, ty, init), start)

    def procedure(self) -> n.ProcedureDecl:
        start = self.expect_kw("procedure")
        name = self.expect_ident("procedure name").lexeme
        params = self.params() if self.accept_kw("with") else []
        self.expect_kw("do")
        return self.at(n.ProcedureDecl(name, params, self.block()), start)

    def on_create(self) -> n.OnCreate:
        start = self.expect_kw("on")
        self.advance()  # 'create'
        params = self.params() if self.accept_kw("with") else []
        self.expect_kw("do")
        return self.at(n.OnCreate(params, self.block()), start)

    # -- statements -----------------------------------------------------

    def block(self) -> list:
        self.begin_block()
        stmts = []
        while not self.at_block_end():
            stmts.append(self.statement())
        self.end_block()
        return stmts

    def statement(self):
        t = self.tok
        if t.is_kw("activate"):
            self.advance()
            self.expect_kw("behaviour")
            name = self.expect_ident("behaviour name").lexeme
            args = self.trailing_named_args()
            return self.at(n.Activate(name, args), t)
        if t.is_kw("deactivate"):
            self.advance()
            self.expect_kw("this")
            self.expect_newline()
            return self.at(n.Deactivate(), t)
        if t.is_kw("send"):
            self.advance()
            perf = self.expect_ident("performative")
            if perf.lexeme not in PERFORMATIVES:
                raise self.error("unknown performative", ["performative"], perf)
            content = self.expr()
            self.expect_kw("to")
            to = self.expr()
            self.expect_newline()
            return self.at(n.Send(perf.lexeme, content, to), t)
        if t.is_kw("do"):
            self.advance()
            name = self.expect_ident("procedure name").lexeme
            args = self.trailing_named_args()
            return self.at(n.DoCall(name, args), t)
        if t.is_kw("invoke"):
            self.advance()
            if self.tok.kind is not Kind.TEXT:
                raise self.error("expected method name text literal", ["text-literal"])
            method = unquote(self.advance().lexeme)
            self.expect_kw("on")
            target = self.expr()
            args = []
            if self.accept_kw("with"):
                args.append(self.expr())
                while self.accept_op(","):
                    args.append(self.expr())
            self.expect_newline()
            return self.at(n.Invoke(method, target, args), t)
        if t.is_kw("if"):
            return self.if_stmt()
        if t.is_kw("while"):
            self.advance()
            cond = self.expr()
            self.expect_kw("do")
            return self.at(n.While(cond, self.block()), t)
        if t.is_kw("log"):
            self.advance()
            value = self.expr()
            self.expect_newline()
            return self.at(n.Log(value), t)
        target = self.of_expr()
        if not isinstance(target, (n.Name, n.OfAccess, n.Index)):
            raise self.error("expected a statement", ["statement"], t)
        if not self.tok.is_op("="):
            raise self.error("expected '=' in assignment", ["="])
        self.advance()
        value = self.expr()
        self.expect_newline()
        return self.at(n.Assign(target, value), t)

    def if_stmt(self) -> n.If:
        t = self.expect_kw("if")
        cond = self.expr()
        self.expect_kw("do")
        then = self.block()
        orelse = []
        if self.tok.is_kw("else"):
            self.advance()
            if self.tok.is_kw("if"):
                orelse = [self.if_stmt()]
            else:
                self.expect_kw("do")
                orelse = self.block()
        return self.at(n.If(cond, then, orelse), t)

    def trailing_named_args(self) -> list:
        """Parse an optional ``with a = e, b = e`` list ending the statement.

        The list may continue on more-indented lines, one or more arguments
        per line, with a comma ending every line but the last.
        """
        if not self.accept_kw("with"):
            self.expect_newline()
            return []
        if self.tok.kind is Kind.NEWLINE and self.peek().kind is Kind.INDENT:
            self.advance()
            self.advance()
            args = [self.named_arg()]
            while self.accept_op(","):
                if self.tok.kind is Kind.NEWLINE:
                    self.advance()
                args.append(self.named_arg())
            self.expect_newline()
            if self.tok.kind is not Kind.DEDENT:
                raise self.error("expected end of argument list", ["dedent"])
            self.advance()
            return args
        args = [self.named_arg()]
        while self.accept_op(","):
            args.append(self.named_arg())
        self.expect_newline()
        return args

    def named_arg(self):
        name = self.expect_ident("argument name").lexeme
        self.expect_op("=")
        return (name, self.expr())

    # -- expressions ----------------------------------------------------

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.tok.is_kw("or"):
            t = self.advance()
            left = self.at(n.Binary("or", left, self.and_expr()), t)
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.tok.is_kw("and"):
            t = self.advance()
            left = self.at(n.Binary("and", left, self.not_expr()), t)
        return left

    def not_expr(self):
        if self.tok.is_kw("not"):
            t = self.advance()
            return self.at(n.Unary("not", self.not_expr()), t)
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.add_expr()
        if self.tok.is_op(*COMPARISONS):
            t = self.advance()
            return self.at(n.Binary(t.lexeme, left, self.add_expr()), t)
        if self.tok.is_kw("matches"):
            t = self.advance()
            return self.at(n.Matches(left, self.pattern()), t)
        return left

    def add_expr(self):
        left = self.mul_expr()
        while self.tok.is_op("+", "-"):
            t = self.advance()
            left = self.at(n.Binary(t.lexeme, left, self.mul_expr()), t)
        return left

    def mul_expr(self):
        left = self.unary_expr()
        while self.tok.is_op("*", "/"):
            t = self.advance()
            left = self.at(n.Binary(t.lexeme, left, self.unary_expr()), t)
        return left

    def unary_expr(self):
        if self.tok.is_op("-"):
            if self.peek().kind in (Kind.INT, Kind.FLOAT):
                return self.literal(allow_negative=True)
            t = self.advance()
            return self.at(n.Unary("-", self.unary_expr()), t)
        return self.of_expr()

    def of_expr(self):
        t = self.tok
        left = self.postfix()
        if self.tok.is_kw("of"):
            if not isinstance(left, n.Name):
                raise self.error("expected a property name before 'of'", ["identifier"], t)
            self.advance()
            return self.at(n.OfAccess(left.name, self.of_expr()), t)
        return left

    def postfix(self):
        node = self.primary()
        while self.tok.is_op("["):
            t = self.advance()
            idx = self.expr()
            self.expect_op("]")
            node = self.at(n.Index(node, idx), t)
        return node

    def primary(self):
        t = self.tok
        if t.kind in (Kind.INT, Kind.FLOAT, Kind.TEXT) or t.is_kw("true", "false"):
            return self.literal()
        if t.is_kw("content", "sender", "performative", "agent", "this"):
            self.advance()
            return self.at(n.SpecialRef(t.lexeme), t)
        if t.kind is Kind.IDENT or t.is_kw("aid"):
            self.advance()
            if self.tok.is_op("("):
                self.advance()
                args = []
                if not self.tok.is_op(")"):
                    args.append(self.expr())
                    while self.accept_op(","):
                        args.append(self.expr())
                self.expect_op(")")
                return self.at(n.Call(t.lexeme, args), t)
            if t.is_kw("aid"):
                raise self.error("expected '(' after aid", ["("])
            return self.at(n.Name(t.lexeme), t)
        if t.is_op("("):
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        if t.is_op("["):
            self.advance()
            items = []
            if not self.tok.is_op("]"):
                items.append(self.expr())
                while self.accept_op(","):
                    items.append(self.expr())
            self.expect_op("]")
            ann = self.type_expr() if self.accept_kw("as") else None
            return self.at(n.ListLit(items, ann), t)
        if t.is_op("{"):
            self.advance()
            entries = []
            if not self.tok.is_op("}"):
                entries.append(self.map_entry())
                while self.accept_op(","):
                    entries.append(self.map_entry())
            self.expect_op("}")
            ann = self.type_expr() if self.accept_kw("as") else None
            return self.at(n.MapLit(entries, ann), t)
        raise self.error("expected an expression", ["expression"])

    def map_entry(self):
        key = self.expr()
        self.expect_op(":")
        return (key, self.expr())

    # -- patterns -------------------------------------------------------

    def pattern(self):
        t = self.tok
        if t.kind is Kind.IDENT:
            self.advance()
            if t.lexeme == "_":
                return self.at(n.Wildcard(), t)
            if self.accept_op("("):
                subs = []
                if not self.tok.is_op(")"):
                    subs.append(self.pattern())
                    while self.accept_op(","):
                        subs.append(self.pattern())
                self.expect_op(")")
                return self.at(n.SchemaPattern(t.lexeme, subs), t)
            return self.at(n.BindVar(t.lexeme), t)
        if t.kind in (Kind.INT, Kind.FLOAT, Kind.TEXT) or t.is_kw("true", "false") or t.is_op("-"):
            lit = self.literal(allow_negative=True)
            return self.at(n.LiteralPattern(lit.value, lit.kind), t)
        raise self.error("expected a pattern", ["identifier", "literal", "_"])


def parse(tokens: list[Token], file: str = "<input>") -> n.Program:
    if not tokens or tokens[-1].kind is not Kind.EOF:
        raise ParseError("token stream must end with eof", file=file)
    return Parser(tokens, file).parse_program()


def parse_source(source: str, file: str = "<input>") -> n.Program:
    return parse(tokenize(source, file), file)
