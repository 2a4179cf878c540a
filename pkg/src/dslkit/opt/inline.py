"""Inlining of ``always-inline`` functions.

A call ``f(a, b)`` becomes a ``let`` binding the callee's parameters to the
arguments. Callees with a single trailing ``return`` inline as
``(let ((p a) ...) body' e)``; otherwise every ``return`` turns into a
``set!`` of a fresh result variable and a jump to a fresh end label.
A call in tail position, ``return f(a, b)``, needs neither: the callee body
is spliced in and its returns become the caller's.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from ..hir.nodes import (App, Block, Defined, ExprStmt, HFunction, Jump, Label, Let, Return,
                         Set, SVoid, Var)
from ..hir.types import VOID
from .hirutil import map_expr, map_stmt, walk_stmts, zero_literal


class InlineCycle(Exception):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__("always-inline cycle: " + " -> ".join(self.names))


def _calls(fn):
    from .dce import callees
    return callees(fn)


def find_cycle(m, names):
    """Return a call cycle among ``names`` (a list of names) or None."""
    names = set(names)
    color = {}
    path = []

    def visit(n):
        color[n] = 1
        path.append(n)
        for c in sorted(_calls(m.functions[n])):
            if c not in names:
                continue
            if color.get(c) == 1:
                return path[path.index(c):] + [c]
            if c not in color:
                r = visit(c)
                if r:
                    return r
        path.pop()
        color[n] = 2
        return None

    for n in sorted(names):
        if n not in color:
            r = visit(n)
            if r:
                return r
    return None


def _returns(s):
    return [x for x in walk_stmts(s) if isinstance(x, Return)]


def _rename_labels(s, mapping):
    def fs(x):
        x = map_stmt(x, fe, fs)
        if isinstance(x, Label):
            return replace(x, name=mapping.get(x.name, x.name))
        if isinstance(x, Jump):
            return replace(x, name=mapping.get(x.name, x.name))
        return x

    def fe(e):
        return map_expr(e, fe, fs)

    return fs(s)


def _replace_returns(s, ret_var, end):
    def fs(x):
        if isinstance(x, Return):
            if x.value is None:
                return Jump(end)
            return Block((Set(ret_var, x.value), Jump(end)))
        return map_stmt(x, fe, fs)

    def fe(e):
        return map_expr(e, fe, fs)

    return fs(s)


class Inliner:
    def __init__(self, counter=None):
        self.counter = counter if counter is not None else itertools.count()

    def can_inline(self, callee: HFunction):
        return callee.ret == VOID or zero_literal(callee.ret) is not None

    def _prepare(self, callee: HFunction, app: App):
        k = next(self.counter)
        body = callee.body
        labels = {x.name for x in walk_stmts(body) if isinstance(x, Label)}
        if labels:
            body = _rename_labels(body, {n: f"{n}.{k}" for n in labels})
        bindings = [(p, a, t) for (p, t), a in zip(callee.params, app.args)]
        return k, body, bindings

    def inline_tail_call(self, callee: HFunction, app: App):
        """``return f(args)``: the callee's own returns become the caller's."""
        _, body, bindings = self._prepare(callee, app)
        return ExprStmt(Let(tuple(bindings), body, None, VOID))

    def inline_call(self, callee: HFunction, app: App):
        k, body, bindings = self._prepare(callee, app)
        rets = _returns(body)
        if not rets and callee.ret == VOID:
            return Let(tuple(bindings), body, None, VOID)
        # single trailing return: no result variable needed
        last = body.stmts[-1] if isinstance(body, Block) else body
        if len(rets) == 1 and isinstance(last, Return) and last is rets[0]:
            head = Block(body.stmts[:-1]) if isinstance(body, Block) else SVoid()
            if callee.ret == VOID:
                return Let(tuple(bindings), head, None, VOID)
            return Let(tuple(bindings), head, last.value, callee.ret)
        end = f"{callee.name}.end.{k}"
        if callee.ret == VOID:
            body = _replace_returns(body, None, end)
            return Let(tuple(bindings), Block((body, Label(end, SVoid()))), None, VOID)
        ret_var = f"{callee.name}.ret.{k}"
        bindings.append((ret_var, zero_literal(callee.ret), callee.ret))
        body = _replace_returns(body, ret_var, end)
        return Let(tuple(bindings), Block((body, Label(end, SVoid()))),
                   Var(ret_var, callee.ret), callee.ret)


def inline_calls(fn: HFunction, should_inline, inliner: Inliner) -> HFunction:
    """Replace every call for which ``should_inline(app)`` returns a callee."""

    def fe(e):
        e = map_expr(e, fe, fs)
        if isinstance(e, App) and isinstance(e.rator, Defined):
            callee = should_inline(e)
            if callee is not None and inliner.can_inline(callee):
                return inliner.inline_call(callee, e)
        return e

    def fs(s):
        if (isinstance(s, Return) and isinstance(s.value, App) and isinstance(s.value.rator, Defined)
                and s.value.rator.name != fn.name):
            callee = should_inline(s.value)
            if callee is not None and callee.ret == fn.ret:
                app = replace(s.value, args=tuple(fe(a) for a in s.value.args))
                return inliner.inline_tail_call(callee, app)
        return map_stmt(s, fe, fs)

    return replace(fn, body=fs(fn.body))


def inline_always(m, inliner: Inliner | None = None):
    always = {n for n, f in m.functions.items() if "always-inline" in f.attrs}
    if not always:
        return m
    cyc = find_cycle(m, always)
    if cyc:
        raise InlineCycle(cyc)
    inliner = inliner or Inliner()
    funcs = dict(m.functions)

    def pick(app):
        return funcs[app.rator.name] if app.rator.name in always else None

    # callees first, so each always-inline body is already flat when copied
    for n in _topo(m, always):
        funcs[n] = inline_calls(funcs[n], pick, inliner)
    for n in m.functions:
        if n not in always:
            funcs[n] = inline_calls(funcs[n], pick, inliner)
    return m.with_functions(funcs)


def _topo(m, names):
    out, seen = [], set()

    def visit(n):
        seen.add(n)
        for c in sorted(_calls(m.functions[n])):
            if c in names and c not in seen:
                visit(c)
        out.append(n)

    for n in sorted(names):
        if n not in seen:
            visit(n)
    return out
