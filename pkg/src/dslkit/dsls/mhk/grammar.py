"""The mini-Hakaru expression language.

The grammar is the ``expr``/``pat`` excerpt of the Hakaru IR plus two loop
forms: ``for`` builds an array of ``hi - lo`` elements and ``summate`` adds
up its body over ``[lo, hi)``. Types are plain data: ``nat``, ``int``,
``real``, ``bool``, ``(array T)`` and ``(constant v)`` for an element type
whose every value is ``v``.

A program file is ``(mhk <name> ((param type) ...) <expr>)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from ...astdef import Node, grammar_from_text, make_node, parse_node, pretty
from ...sexpr import Symbol, dumps, read_all

GRAMMAR_TEXT = """
(define-ast hakaru
  (expr [val (type v)]
        [if (type tst:expr thn:expr els:expr)]
        [app (type rator:expr rands:expr ...)]
        [bucket (type s:expr e:expr r:reducer)]
        [match (type tst:expr branches:expr ...)]
        [branch (p:pat body:expr)]
        [intrf (sym)]
        [var (type sym info)]
        [for (type i lo:expr hi:expr body:expr)]
        [summate (type i lo:expr hi:expr body:expr)])
  (reducer [(index (n:expr i:expr a:reducer))]
           [(nop ())])
  (pat [(pair (a:pat b:pat))]
       [(pvar (sym))]))
"""

HAKARU = grammar_from_text(GRAMMAR_TEXT)

NAT, INT, REAL, BOOL = Symbol("nat"), Symbol("int"), Symbol("real"), Symbol("bool")
SCALAR_TYPES = (NAT, INT, REAL, BOOL)

# primitive operators reachable through (intrf op)
ARITH = ("+", "-", "*", "/")
COMPARE = ("<", "<=", "==")
UNARY = ("neg", "real", "exp", "log", "sqrt")
ARRAY_OPS = ("index", "size", "array-literal", "constant-value-array")
PRIMITIVES = ARITH + COMPARE + UNARY + ARRAY_OPS


class MhkError(ValueError):
    pass


class UnsupportedConstruct(MhkError):
    pass


def array_t(elem):
    return (Symbol("array"), elem)


def constant_t(v):
    return (Symbol("constant"), v)


def is_array_type(t) -> bool:
    return isinstance(t, tuple) and len(t) == 2 and t[0] == "array"


def is_constant_type(t) -> bool:
    return isinstance(t, tuple) and len(t) == 2 and t[0] == "constant"


def elem_type(t):
    if not is_array_type(t):
        raise MhkError(f"not an array type: {dumps(t)}")
    return t[1]


def scalar_kind(t):
    """``int`` for nat/int, ``real`` for real and constants of a float,
    ``bool`` for bool."""
    if is_constant_type(t):
        return "real" if isinstance(t[1], float) else "int"
    if t in (NAT, INT):
        return "int"
    if t == REAL:
        return "real"
    if t == BOOL:
        return "bool"
    raise MhkError(f"not a scalar type: {dumps(t)}")


def parse_type(d):
    if isinstance(d, Symbol) and d in SCALAR_TYPES:
        return d
    if isinstance(d, (list, tuple)) and len(d) == 2 and d[0] == "array":
        return array_t(parse_type(d[1]))
    if isinstance(d, (list, tuple)) and len(d) == 2 and d[0] == "constant":
        return constant_t(d[1])
    raise MhkError(f"bad type {dumps(d) if isinstance(d, (list, tuple)) else d!r}")


# -- constructors ---------------------------------------------------------------


def val(t, v):
    return make_node(HAKARU, "val", t, v)


def var(t, name):
    return make_node(HAKARU, "var", t, Symbol(name), ())


def intrf(op):
    return make_node(HAKARU, "intrf", Symbol(op))


def app(t, op, *rands):
    return make_node(HAKARU, "app", t, intrf(op), tuple(rands))


def if_(t, tst, thn, els):
    return make_node(HAKARU, "if", t, tst, thn, els)


def pvar(name):
    return make_node(HAKARU, "pvar", Symbol(name))


def branch(p, body):
    return make_node(HAKARU, "branch", p, body)


def let(name, rhs, body):
    """``let name = rhs in body``, a match with a single variable pattern."""
    return make_node(HAKARU, "match", type_of(body), rhs, (branch(pvar(name), body),))


def for_(i, lo, hi, body, elem=None):
    return make_node(HAKARU, "for", array_t(elem or type_of(body)), Symbol(i), lo, hi, body)


def summate(i, lo, hi, body):
    return make_node(HAKARU, "summate", type_of(body), Symbol(i), lo, hi, body)


def index(a, i):
    return app(elem_type(type_of(a)), "index", a, i)


def size(a):
    return app(NAT, "size", a)


def type_of(e: Node):
    if e.production in ("branch", "intrf") or e.group != "expr":
        raise MhkError(f"{e.production} has no type")
    return e.values[0]


def let_parts(e: Node):
    """``(name, rhs, body)`` when ``e`` is a single-variable match, else None."""
    if e.production != "match" or len(e.branches) != 1:
        return None
    b = e.branches[0]
    if b.production != "branch" or b.p.production != "pvar":
        return None
    return str(b.p.sym), e.tst, b.body


def op_of(e: Node):
    """The primitive name of an ``app`` whose rator is an ``intrf``."""
    if e.production == "app" and e.rator.production == "intrf":
        return str(e.rator.sym)
    return None


def is_atomic(e: Node) -> bool:
    return e.production in ("val", "var")


def free_vars(e: Node) -> frozenset:
    p = e.production
    if p == "var":
        return frozenset({str(e.sym)})
    if p == "val" or p == "intrf":
        return frozenset()
    if p == "match":
        out = set(free_vars(e.tst))
        for b in e.branches:
            out |= free_vars(b.body) - pattern_vars(b.p)
        return frozenset(out)
    if p in ("for", "summate"):
        return free_vars(e.lo) | free_vars(e.hi) | (free_vars(e.body) - {str(e.i)})
    if p == "if":
        return free_vars(e.tst) | free_vars(e.thn) | free_vars(e.els)
    if p == "app":
        out = set(free_vars(e.rator))
        for r in e.rands:
            out |= free_vars(r)
        return frozenset(out)
    if p == "bucket":
        return free_vars(e.s) | free_vars(e.e)
    if p == "branch":
        return free_vars(e.body) - pattern_vars(e.p)
    return frozenset()


def pattern_vars(p: Node) -> frozenset:
    if p.production == "pvar":
        return frozenset({str(p.sym)})
    return pattern_vars(p.a) | pattern_vars(p.b)


def all_names(e: Node) -> set:
    """Every variable, pattern and index name occurring in ``e``."""
    from ...astdef import walk
    out = set()
    for n in walk(e):
        if n.production in ("var", "pvar"):
            out.add(str(n.sym))
        elif n.production in ("for", "summate"):
            out.add(str(n.i))
    return out


def has_loop(e: Node) -> bool:
    from ...astdef import walk
    return any(n.production in ("for", "summate") for n in walk(e))


def parse_expr(text: str) -> Node:
    return parse_node(HAKARU, text, "expr")


# -- programs -------------------------------------------------------------------


@dataclass(frozen=True)
class MhkProgram:
    name: str
    params: tuple  # ((name, type), ...)
    body: Node

    def __post_init__(self):
        object.__setattr__(self, "params", tuple((str(n), t) for n, t in self.params))
        names = [n for n, _ in self.params]
        if len(set(names)) != len(names):
            raise MhkError(f"duplicate parameter in {names}")
        missing = free_vars(self.body) - set(names)
        if missing:
            raise MhkError(f"unbound variables {sorted(missing)}")

    def with_body(self, body):
        return MhkProgram(self.name, self.params, body)

    def text(self) -> str:
        params = " ".join(f"({n} {dumps(t) if isinstance(t, tuple) else t})" for n, t in self.params)
        return f"(mhk {self.name} ({params}) {pretty(self.body)})"


def parse_program(text: str) -> MhkProgram:
    forms = read_all(text)
    if len(forms) != 1:
        raise MhkError("expected a single (mhk name (params) expr) form")
    d = forms[0]
    if not (isinstance(d, list) and len(d) == 4 and d[0] == "mhk" and isinstance(d[2], list)):
        raise MhkError("expected (mhk <name> ((<param> <type>) ...) <expr>)")
    params = []
    for p in d[2]:
        if not (isinstance(p, list) and len(p) == 2 and isinstance(p[0], Symbol)):
            raise MhkError(f"bad parameter {p!r}")
        params.append((str(p[0]), parse_type(p[1])))
    from ...astdef import node_from_datum
    body = node_from_datum(HAKARU, d[3])
    if body.group != "expr":
        raise MhkError("program body must be an expression")
    return MhkProgram(str(d[1]), tuple(params), body)


def load_program(path) -> MhkProgram:
    with open(path) as fh:
        return parse_program(fh.read())
