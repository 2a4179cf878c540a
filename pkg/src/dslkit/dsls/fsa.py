"""Finite-state automata compiled to HIR.

Two code shapes for the same machine:

* ``functions``: one function per state taking ``(inp, pos, len)``; every
  transition is a tail call, and a top-level entry calls the start state at
  position 0.
* ``blocks``: a single function with one label per state; transitions bump
  ``pos`` and jump.

Both return ``true`` at end of input exactly when the state is final.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..hir.build import (add1, app, array_ref, block, expr_stmt, function, icmp_eq, icmp_ult,
                         if_, jump, label, let, ret, rkt_bool, set_, switch, sym, ui64, var)
from ..hir.nodes import make_module
from ..hir.types import BOOL, I64, SYM, PtrT
from ..sexpr import Symbol, read_all

SYM_ARRAY = PtrT(SYM)


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class FsaSpec:
    name: str
    start: str
    finals: frozenset
    transitions: dict = field(default_factory=dict)  # state -> ((input, next), ...)

    def __post_init__(self):
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "transitions",
                           {str(s): tuple((str(i), str(n)) for i, n in ts)
                            for s, ts in dict(self.transitions).items()})
        self.validate()

    @property
    def states(self):
        return tuple(self.transitions)

    def validate(self):
        states = set(self.transitions)
        if self.start not in states:
            raise InvalidSpec(f"start state {self.start!r} is not declared")
        for f in self.finals:
            if f not in states:
                raise InvalidSpec(f"final state {f!r} is not declared")
        if self.name in states:
            raise InvalidSpec(f"machine name {self.name!r} clashes with a state")
        for s, ts in self.transitions.items():
            seen = set()
            for inp, nxt in ts:
                if inp in seen:
                    raise InvalidSpec(f"state {s!r} has two transitions on {inp!r}")
                seen.add(inp)
                if nxt not in states:
                    raise InvalidSpec(f"state {s!r} goes to undeclared state {nxt!r}")

    def accepts(self, word) -> bool:
        """Reference run of the machine on ``word``, in Python."""
        state = self.start
        for c in word:
            nxt = dict(self.transitions[state]).get(str(c))
            if nxt is None:
                return False
            state = nxt
        return state in self.finals


CADR = FsaSpec("M", "init", {"end"},
               {"init": [("c", "more")], "more": [("a", "more"), ("d", "more"), ("r", "end")],
                "end": []})


def parse_fsa(text: str) -> FsaSpec:
    """``(fsa name start (final ...) (state ((input next) ...)) ...)``; the
    head may also be ``define-fsa``."""
    forms = read_all(text)
    if len(forms) != 1:
        raise InvalidSpec("expected exactly one fsa form")
    d = forms[0]
    if not (isinstance(d, list) and len(d) >= 4 and d[0] in ("fsa", "define-fsa")):
        raise InvalidSpec("expected (fsa <name> <start> (<final> ...) <state> ...)")
    name, start, finals = d[1], d[2], d[3]
    if not isinstance(finals, list):
        raise InvalidSpec("final states must be a list")
    transitions = {}
    for clause in d[4:]:
        if not (isinstance(clause, list) and len(clause) == 2 and isinstance(clause[0], Symbol)
                and isinstance(clause[1], list)):
            raise InvalidSpec(f"bad state clause {clause!r}")
        state = str(clause[0])
        if state in transitions:
            raise InvalidSpec(f"state {state!r} declared twice")
        ts = []
        for t in clause[1]:
            if not (isinstance(t, list) and len(t) == 2):
                raise InvalidSpec(f"bad transition {t!r} in state {state!r}")
            ts.append((str(t[0]), str(t[1])))
        transitions[state] = ts
    return FsaSpec(str(name), str(start), frozenset(str(f) for f in finals), transitions)


def load_fsa(path) -> FsaSpec:
    with open(path) as fh:
        return parse_fsa(fh.read())


# -- code generation -----------------------------------------------------------------


def _state_function(spec: FsaSpec, state):
    inp, pos, ln = var("inp"), var("pos"), var("len")
    cases = [(sym(i), ret(app(nxt, inp, add1(pos), ln))) for i, nxt in spec.transitions[state]]
    return function(state, [("inp", SYM_ARRAY), ("pos", I64), ("len", I64)], BOOL,
                    if_(icmp_ult(pos, ln),
                        switch(array_ref(inp, pos), cases, ret(rkt_bool(False))),
                        ret(rkt_bool(state in spec.finals))))


def _functions_style(spec: FsaSpec):
    entry = function(spec.name, [("inp", SYM_ARRAY), ("len", I64)], BOOL,
                     ret(app(spec.start, var("inp"), ui64(0), var("len"))))
    return [entry] + [_state_function(spec, s) for s in spec.states]


def _blocks_style(spec: FsaSpec):
    if "entry" in spec.transitions:
        raise InvalidSpec("a state named 'entry' collides with the entry block in blocks style")
    inp, pos, ln = var("inp"), var("pos"), var("len")
    order = [spec.start] + [s for s in spec.states if s != spec.start]
    labels = []
    for s in order:
        cases = [(sym(i), block(set_("pos", add1(pos)), jump(nxt))) for i, nxt in spec.transitions[s]]
        labels.append(label(s, if_(icmp_ult(pos, ln),
                                   switch(array_ref(inp, pos), cases, ret(rkt_bool(False))),
                                   ret(rkt_bool(s in spec.finals)))))
    body = expr_stmt(let([("pos", ui64(0), I64)], block(*labels)))
    return [function(spec.name, [("inp", SYM_ARRAY), ("len", I64)], BOOL, body)]


STYLES = ("functions", "blocks")


def compile_fsa(spec: FsaSpec, style="functions"):
    """HIR module whose entry function is named after the machine."""
    if style == "functions":
        fns = _functions_style(spec)
    elif style == "blocks":
        fns = _blocks_style(spec)
    else:
        raise InvalidSpec(f"unknown style {style!r}; expected one of {STYLES}")
    return make_module(spec.name, fns)


def fsa_match(cm, word, name=None) -> bool:
    """Run a compiled machine on ``word`` (a string or a sequence of symbols)."""
    name = name or cm.lmodule.name
    value, _ = cm.apply(name, [str(c) for c in word])
    return value


# -- always-inline chain ------------------------------------------------------------------


def build_more_chain(length: int):
    """``more-0 ... more-(length-1)``, all always-inline, accepting
    ``(a|d)^(length-1) r``. ``more-i`` looks at element ``i``."""
    if length < 1:
        raise ValueError("length must be at least 1")
    names = [f"more-{i}" for i in range(length)]
    inp = var("inp")
    fns = []
    for i, name in enumerate(names):
        if i == length - 1:
            cases = [(sym("r"), ret(rkt_bool(True)))]
        else:
            nxt = ret(app(names[i + 1], inp))
            cases = [(sym("a"), nxt), (sym("d"), nxt)]
        fns.append(function(name, [("inp", SYM_ARRAY)], BOOL,
                            switch(array_ref(inp, ui64(i)), cases, ret(rkt_bool(False))),
                            attrs={"always-inline"}))
    return fns


def more_chain_module(length: int):
    """The chain plus an entry ``more-chain(inp, len)`` that checks the length
    before entering ``more-0``."""
    entry = function("more-chain", [("inp", SYM_ARRAY), ("len", I64)], BOOL,
                     if_(icmp_eq(var("len"), ui64(length)),
                         ret(app("more-0", var("inp"))),
                         ret(rkt_bool(False))))
    return make_module("more-chain", [entry] + build_more_chain(length))
