"""Grammar-driven AST definitions.

A ``Grammar`` is a runtime value built from groups of productions. Each
production lists named fields with a pattern (``Single``, ``Repeat``,
``Multiple`` or ``Terminal``). ``make_node`` validates children against the
pattern; ``map_children``, ``rewrite_bottom_up``/``rewrite_top_down`` and
``pretty``/``parse_node`` are generic over every grammar.

Text form::

    (define-ast LC
      (expr [lambda ((x:expr.sym ...) body:expr)]
            [letrec (((ids:expr.sym vals:expr) ...) body:expr)]
            [app (rator:expr rand:expr ...)]
            [n #:terminal number?]
            [sym #:terminal symbol?]))

``name:ref`` is a child node (``ref`` names a group, a production or
``group.production``); ``name:pred?`` is a terminal checked by a registered
predicate; a bare ``name`` is a terminal accepting any datum; ``...`` repeats
the preceding pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

from .sexpr import Symbol, dumps, read, read_all


class AstError(Exception):
    pass


class DanglingReference(AstError):
    pass


class DuplicateName(AstError):
    pass


class UnknownTerminalPredicate(AstError):
    pass


class InvalidGrammar(AstError):
    pass


class UnknownProduction(AstError):
    pass


class ArityMismatch(AstError):
    pass


class ChildMismatch(AstError):
    pass


class TerminalPredicateFailed(AstError):
    def __init__(self, field, value):
        self.field, self.value = field, value
        super().__init__(f"field {field!r}: terminal predicate rejected {value!r}")


class ResultShapeMismatch(AstError):
    pass


# -- patterns -----------------------------------------------------------------


@dataclass(frozen=True)
class Single:
    ref: str


@dataclass(frozen=True)
class Repeat:
    inner: "Pattern"


@dataclass(frozen=True)
class Multiple:
    inners: tuple


@dataclass(frozen=True)
class Terminal:
    predicate: str


Pattern = Union[Single, Repeat, Multiple, Terminal]


@dataclass(frozen=True)
class Production:
    name: str
    fields: tuple  # ((field_name, Pattern), ...)

    @property
    def field_names(self):
        return tuple(f for f, _ in self.fields)


@dataclass(frozen=True)
class Group:
    name: str
    productions: tuple


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


DEFAULT_PREDICATES: dict[str, Callable] = {
    "number?": _is_number,
    "symbol?": lambda v: isinstance(v, Symbol),
    "string?": lambda v: isinstance(v, str) and not isinstance(v, Symbol),
    "boolean?": lambda v: isinstance(v, bool),
    "any?": lambda v: True,
}


def register_predicate(name: str, fn: Callable, *, replace=False):
    """Make ``name`` available to grammars defined afterwards."""
    if name in DEFAULT_PREDICATES and not replace:
        raise DuplicateName(name)
    DEFAULT_PREDICATES[name] = fn


class Grammar:
    def __init__(self, name, groups, predicates=None):
        self.name = str(name)
        self.groups = tuple(groups)
        self.predicates = dict(DEFAULT_PREDICATES)
        if predicates:
            self.predicates.update(predicates)
        self._groups = {}
        self._productions = {}
        self._group_of = {}
        for g in self.groups:
            if g.name in self._groups or g.name in self._productions:
                raise DuplicateName(g.name)
            if not g.productions:
                raise InvalidGrammar(f"group {g.name!r} has no productions")
            self._groups[g.name] = g
            for p in g.productions:
                if p.name in self._productions or p.name in self._groups:
                    raise DuplicateName(p.name)
                if len(set(p.field_names)) != len(p.fields):
                    raise DuplicateName(f"{p.name}: duplicate field name")
                self._productions[p.name] = p
                self._group_of[p.name] = g.name
        for p in self._productions.values():
            for _, pat in p.fields:
                self._check_pattern(pat)

    def _check_pattern(self, pat):
        if isinstance(pat, Single):
            self.resolve(pat.ref)
        elif isinstance(pat, Repeat):
            self._check_pattern(pat.inner)
        elif isinstance(pat, Multiple):
            for p in pat.inners:
                self._check_pattern(p)
        elif isinstance(pat, Terminal):
            if pat.predicate not in self.predicates:
                raise UnknownTerminalPredicate(pat.predicate)
        else:
            raise InvalidGrammar(f"not a pattern: {pat!r}")

    def resolve(self, ref):
        """Return ``("group", name)`` or ``("production", name)`` for ``ref``."""
        if "." in ref:
            gname, pname = ref.split(".", 1)
            if self._group_of.get(pname) == gname:
                return ("production", pname)
            raise DanglingReference(ref)
        if ref in self._groups:
            return ("group", ref)
        if ref in self._productions:
            return ("production", ref)
        raise DanglingReference(ref)

    def production(self, name) -> Production:
        try:
            return self._productions[name]
        except KeyError:
            raise UnknownProduction(name) from None

    def group_of(self, production_name) -> str:
        return self._group_of[production_name]

    @property
    def production_names(self):
        return tuple(self._productions)

    def accepts(self, ref, node) -> bool:
        if not isinstance(node, Node) or node.grammar is not self:
            return False
        kind, name = self.resolve(ref)
        if kind == "group":
            return self._group_of[node.production] == name
        return node.production == name

    def __repr__(self):
        return f"<Grammar {self.name}: {', '.join(g.name for g in self.groups)}>"

    def __getattr__(self, name):
        # g.letrec(...) as a constructor shorthand
        prods = self.__dict__.get("_productions")
        if prods is not None and name in prods:
            return lambda *a, **kw: make_node(self, name, *a, **kw)
        raise AttributeError(name)


def define_grammar(name, groups, predicates=None) -> Grammar:
    """Build a grammar from structured data.

    ``groups`` is either a sequence of ``Group`` or a mapping
    ``group -> {production -> [(field, pattern), ...]}``.
    """
    if isinstance(groups, Mapping):
        built = []
        for gname, prods in groups.items():
            built.append(Group(str(gname), tuple(
                Production(str(pname), tuple((str(f), p) for f, p in fields))
                for pname, fields in prods.items())))
        groups = built
    return Grammar(name, groups, predicates)


# -- nodes ----------------------------------------------------------------------


def _freeze(v):
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    if isinstance(v, tuple) and not isinstance(v, Node):
        return tuple(_freeze(x) for x in v)
    return v


class Node:
    __slots__ = ("grammar", "production", "values", "_hash")

    def __init__(self, grammar, production, values):
        object.__setattr__(self, "grammar", grammar)
        object.__setattr__(self, "production", production)
        object.__setattr__(self, "values", tuple(values))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("nodes are immutable")

    @property
    def group(self):
        return self.grammar.group_of(self.production)

    @property
    def fields(self):
        names = self.grammar.production(self.production).field_names
        return dict(zip(names, self.values))

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        names = self.grammar.production(self.production).field_names
        try:
            return self.values[names.index(name)]
        except ValueError:
            raise AttributeError(f"{self.production} has no field {name!r}") from None

    def __getitem__(self, name):
        return self.fields[name]

    def replace(self, **changes):
        fields = self.fields
        unknown = set(changes) - set(fields)
        if unknown:
            raise ArityMismatch(f"{self.production}: unknown fields {sorted(unknown)}")
        fields.update(changes)
        return make_node(self.grammar, self.production, **fields)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        return (self.production == other.production
                and self.grammar.name == other.grammar.name
                and self.values == other.values)

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.grammar.name, self.production, self.values)))
        return self._hash

    def __repr__(self):
        return pretty(self)


def _check(grammar, field, pat, value):
    if isinstance(pat, Single):
        if not grammar.accepts(pat.ref, value):
            raise ChildMismatch(f"field {field!r}: expected {pat.ref}, got {value!r}")
    elif isinstance(pat, Terminal):
        if isinstance(value, Node) or not grammar.predicates[pat.predicate](value):
            raise TerminalPredicateFailed(field, value)
    elif isinstance(pat, Repeat):
        if not isinstance(value, tuple) or isinstance(value, Node):
            raise ArityMismatch(f"field {field!r}: expected a list")
        for v in value:
            _check(grammar, field, pat.inner, v)
    elif isinstance(pat, Multiple):
        if not isinstance(value, tuple) or isinstance(value, Node) or len(value) != len(pat.inners):
            raise ArityMismatch(f"field {field!r}: expected {len(pat.inners)} elements")
        for p, v in zip(pat.inners, value):
            _check(grammar, field, p, v)


def make_node(grammar: Grammar, production: str, *children, **named) -> Node:
    """Validated constructor. Children go positionally in field order or by name."""
    prod = grammar.production(production)
    names = prod.field_names
    if children and named:
        raise ArityMismatch("pass children either positionally or by name")
    if named:
        missing = [n for n in names if n not in named]
        extra = [n for n in named if n not in names]
        if missing or extra:
            raise ArityMismatch(f"{production}: missing {missing}, unexpected {extra}")
        children = tuple(named[n] for n in names)
    if len(children) != len(names):
        raise ArityMismatch(f"{production} takes {len(names)} fields, got {len(children)}")
    values = tuple(_freeze(c) for c in children)
    for (fname, pat), v in zip(prod.fields, values):
        _check(grammar, fname, pat, v)
    return Node(grammar, production, values)


def check_shape(grammar: Grammar, production: str, children) -> bool:
    try:
        make_node(grammar, production, *children)
    except AstError:
        return False
    return True


# -- traversal ------------------------------------------------------------------


def _select(f, child):
    if isinstance(f, Mapping):
        return f.get(child.group)
    return f


def _map_pattern(grammar, f, field, pat, value):
    if isinstance(pat, Single):
        fn = _select(f, value)
        if fn is None:
            return value
        out = fn(value)
        if not grammar.accepts(pat.ref, out):
            raise ResultShapeMismatch(f"field {field!r}: {out!r} is not a {pat.ref}")
        return out
    if isinstance(pat, Repeat):
        return tuple(_map_pattern(grammar, f, field, pat.inner, v) for v in value)
    if isinstance(pat, Multiple):
        return tuple(_map_pattern(grammar, f, field, p, v) for p, v in zip(pat.inners, value))
    return value


def map_children(f, node: Node) -> Node:
    """Apply ``f`` to every child node (a callable, or ``{group: callable}``).

    Terminals are left alone; list fields are mapped elementwise.
    """
    g = node.grammar
    prod = g.production(node.production)
    values = tuple(_map_pattern(g, f, fname, pat, v)
                   for (fname, pat), v in zip(prod.fields, node.values))
    return Node(g, node.production, values)


def _iter_pattern(pat, value):
    if isinstance(pat, Single):
        yield value
    elif isinstance(pat, Repeat):
        for v in value:
            yield from _iter_pattern(pat.inner, v)
    elif isinstance(pat, Multiple):
        for p, v in zip(pat.inners, value):
            yield from _iter_pattern(p, v)


def children(node: Node):
    """Child nodes in field order."""
    prod = node.grammar.production(node.production)
    for (_, pat), v in zip(prod.fields, node.values):
        yield from _iter_pattern(pat, v)


def walk(node: Node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(list(children(n))))


def fold(f, node: Node):
    """``f(node, [fold(child) ...])`` bottom-up."""
    return f(node, [fold(f, c) for c in children(node)])


def _rules_for(rules, node):
    if isinstance(rules, Mapping):
        return rules.get(node.group, ())
    return rules


def _fire(rules, node):
    for rule in _rules_for(rules, node):
        out = rule(node)
        if out is not None:
            if not isinstance(out, Node) or out.grammar is not node.grammar or out.group != node.group:
                raise ResultShapeMismatch(f"rule {getattr(rule, '__name__', rule)} left group {node.group}")
            return out
    return node


def rewrite_bottom_up(rules, node: Node) -> Node:
    """Single post-order pass: children first, then the first rule that
    returns a node (not ``None``) replaces the current node."""

    def visit(n):
        return _fire(rules, map_children(visit, n))

    return visit(node)


def rewrite_top_down(rules, node: Node) -> Node:
    """Single pre-order pass: fire at most one rule, then descend into the result."""

    def visit(n):
        return map_children(visit, _fire(rules, n))

    return visit(node)


# -- printing / reading ---------------------------------------------------------


def _spliced_field(prod):
    """Index of the one list field printed inline, if unambiguous."""
    reps = [i for i, (_, p) in enumerate(prod.fields) if isinstance(p, Repeat)]
    return reps[0] if len(reps) == 1 else None


def _datum(pat, value):
    if isinstance(pat, Single):
        return _node_datum(value)
    if isinstance(pat, Repeat):
        return [_datum(pat.inner, v) for v in value]
    if isinstance(pat, Multiple):
        return [_datum(p, v) for p, v in zip(pat.inners, value)]
    return value


def _node_datum(node):
    prod = node.grammar.production(node.production)
    out = [Symbol(node.production)]
    spliced = _spliced_field(prod)
    for i, ((_, pat), v) in enumerate(zip(prod.fields, node.values)):
        d = _datum(pat, v)
        if i == spliced:
            out.extend(d)
        else:
            out.append(d)
    return out


def pretty(node: Node) -> str:
    """Canonical text ``(production child ...)``."""
    return dumps(_node_datum(node))


def _from_datum(grammar, field, pat, d):
    if isinstance(pat, Single):
        node = node_from_datum(grammar, d)
        if not grammar.accepts(pat.ref, node):
            raise ChildMismatch(f"field {field!r}: expected {pat.ref}, got {node.production}")
        return node
    if isinstance(pat, Repeat):
        if not isinstance(d, list):
            raise ArityMismatch(f"field {field!r}: expected a list")
        return tuple(_from_datum(grammar, field, pat.inner, x) for x in d)
    if isinstance(pat, Multiple):
        if not isinstance(d, list) or len(d) != len(pat.inners):
            raise ArityMismatch(f"field {field!r}: expected {len(pat.inners)} elements")
        return tuple(_from_datum(grammar, field, p, x) for p, x in zip(pat.inners, d))
    return _freeze(d)


def node_from_datum(grammar: Grammar, d) -> Node:
    if not isinstance(d, list) or not d or not isinstance(d[0], Symbol):
        raise ChildMismatch(f"not a node: {d!r}")
    prod = grammar.production(str(d[0]))
    items = d[1:]
    spliced = _spliced_field(prod)
    if spliced is not None:
        fixed = len(prod.fields) - 1
        n = len(items) - fixed
        if n < 0:
            raise ArityMismatch(f"{prod.name}: too few fields")
        items = items[:spliced] + [items[spliced:spliced + n]] + items[spliced + n:]
    if len(items) != len(prod.fields):
        raise ArityMismatch(f"{prod.name} takes {len(prod.fields)} fields, got {len(items)}")
    values = [_from_datum(grammar, f, p, x) for (f, p), x in zip(prod.fields, items)]
    return make_node(grammar, prod.name, *values)


def parse_node(grammar: Grammar, text: str, ref: str | None = None) -> Node:
    node = node_from_datum(grammar, read(text))
    if ref is not None and not grammar.accepts(ref, node):
        raise ChildMismatch(f"expected {ref}, got {node.production}")
    return node


# -- grammar text ---------------------------------------------------------------


def _leaf_pattern(ref):
    return Terminal(ref) if ref.endswith("?") else Single(ref)


def _parse_fields(items) -> list:
    out = []
    i = 0
    while i < len(items):
        item = items[i]
        repeated = i + 1 < len(items) and items[i + 1] == "..."
        if isinstance(item, Symbol):
            if item == "...":
                raise InvalidGrammar("'...' must follow a pattern")
            if ":" in item:
                name, ref = item.split(":", 1)
                pat = _leaf_pattern(ref)
            else:
                name, pat = str(item), Terminal("any?")
            sub = [(name, pat)]
        elif isinstance(item, list) and item and item[0] == "#:multiple":
            if len(item) < 2 or not isinstance(item[1], Symbol):
                raise InvalidGrammar(f"bad multiple pattern {dumps(item)}")
            sub = [(str(item[1]), Multiple(tuple(_leaf_pattern(str(r)) for r in item[2:])))]
        elif isinstance(item, list):
            sub = _parse_fields(item)
        else:
            raise InvalidGrammar(f"bad pattern element {item!r}")
        if repeated:
            sub = [(n, Repeat(p)) for n, p in sub]
            i += 1
        out.extend(sub)
        i += 1
    return out


def _parse_production(form) -> Production:
    if isinstance(form, list) and len(form) == 1 and isinstance(form[0], list):
        form = form[0]
    if not isinstance(form, list) or not form or not isinstance(form[0], Symbol):
        raise InvalidGrammar(f"bad production {form!r}")
    name, rest = str(form[0]), form[1:]
    if rest and rest[0] == "#:terminal":
        if len(rest) != 2:
            raise InvalidGrammar(f"{name}: #:terminal takes one predicate")
        fields = [("value", Terminal(str(rest[1])))]
    elif len(rest) == 1 and isinstance(rest[0], list):
        fields = _parse_fields(rest[0])
    else:
        fields = _parse_fields(rest)
    return Production(name, tuple(fields))


def grammar_from_datum(d, predicates=None) -> Grammar:
    if not isinstance(d, list) or len(d) < 2 or d[0] != "define-ast":
        raise InvalidGrammar("expected (define-ast <name> <group> ...)")
    groups = []
    for gform in d[2:]:
        if not isinstance(gform, list) or not gform or not isinstance(gform[0], Symbol):
            raise InvalidGrammar(f"bad group {gform!r}")
        groups.append(Group(str(gform[0]), tuple(_parse_production(p) for p in gform[1:])))
    return Grammar(str(d[1]), groups, predicates)


def grammar_from_text(text: str, predicates=None) -> Grammar:
    return grammar_from_datum(read(text), predicates)


def load_grammar(path, predicates=None) -> Grammar:
    with open(path) as fh:
        forms = read_all(fh.read())
    if len(forms) != 1:
        raise InvalidGrammar(f"{path}: expected a single define-ast form")
    return grammar_from_datum(forms[0], predicates)


def productions_text(grammar: Grammar) -> Iterable[str]:
    for g in grammar.groups:
        for p in g.productions:
            yield f"{g.name}.{p.name}"
