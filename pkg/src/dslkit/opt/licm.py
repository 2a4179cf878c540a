"""Loop-invariant code motion on HIR ``while`` loops.

Candidates are maximal subexpressions that do at least one operation, are
pure by :func:`hirutil.is_pure` (no loads, no trapping arithmetic, calls only
to math intrinsics or ``pure`` functions), contain no ``let``, and whose free
variables are neither assigned nor bound anywhere in the loop. They are
bound once in a ``let`` around the loop. When every candidate comes from the
body and the condition is pure, the ``let`` is guarded by the condition so a
loop that runs zero times evaluates nothing extra.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

from ..hir.nodes import (BoolLit, ExprStmt, FloatLit, GlobalRef, HFunction, If, IntLit, Let,
                         SVoid, SymLit, Var, While)
from ..hir.types import VOID
from .hirutil import (bound_vars_expr, bound_vars_stmt, contains_labels, free_vars, is_pure,
                      map_expr, map_stmt, set_vars, stmt_exprs, sub_exprs, walk_expr,
                      walk_stmts_shallow)

_ATOMS = (Var, IntLit, FloatLit, SymLit, BoolLit, GlobalRef)


class _Licm:
    def __init__(self, module):
        self.module = module
        self.counter = itertools.count()

    def hoistable(self, e, variant):
        if isinstance(e, _ATOMS):
            return False
        if any(isinstance(x, Let) for x in walk_expr(e)):
            return False
        if not is_pure(e, self.module):
            return False
        return not (free_vars(e) & variant)

    def collect(self, e, variant, out):
        if self.hoistable(e, variant):
            if e not in out:
                out.append(e)
            return
        for c in sub_exprs(e):
            self.collect(c, variant, out)
        if isinstance(e, Let):
            self.collect_stmt(e.body, variant, out)

    def collect_stmt(self, s, variant, out):
        for st in walk_stmts_shallow(s):
            for e in stmt_exprs(st):
                self.collect(e, variant, out)

    def stmt(self, s):
        s = map_stmt(s, self.expr, self.stmt)
        if isinstance(s, While):
            return self.loop(s)
        return s

    def expr(self, e):
        return map_expr(e, self.expr, self.stmt)

    def loop(self, w: While):
        if contains_labels(w.body):
            return w
        variant = set_vars(w.body) | set_vars(ExprStmt(w.cond))
        variant |= bound_vars_stmt(w.body) | bound_vars_expr(w.cond)
        from_cond, from_body = [], []
        self.collect(w.cond, variant, from_cond)
        self.collect_stmt(w.body, variant, from_body)
        cands = from_cond + [e for e in from_body if e not in from_cond]
        if not cands:
            return w
        names = {e: f"licm.{next(self.counter)}" for e in cands}

        def fe(e):
            if e in names:
                return Var(names[e], e.ty)
            return map_expr(e, fe, fs)

        def fs(s):
            return map_stmt(s, fe, fs)

        new_loop = While(fe(w.cond), fs(w.body))
        bindings = tuple((names[e], e, e.ty) for e in cands)
        hoisted = ExprStmt(Let(bindings, new_loop, None, VOID))
        if not from_cond and is_pure(w.cond, self.module):
            return If(w.cond, hoisted, SVoid())
        return hoisted

    def function(self, fn: HFunction) -> HFunction:
        return replace(fn, body=self.stmt(fn.body))


def licm_function(fn: HFunction, module=None) -> HFunction:
    return _Licm(module).function(fn)


def licm(m):
    return m.with_functions({n: licm_function(f, m) for n, f in m.functions.items()})
