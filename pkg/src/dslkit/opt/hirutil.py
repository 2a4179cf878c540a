"""Generic traversal and analysis helpers for HIR passes."""

from __future__ import annotations

from dataclasses import replace

from ..hir.intrinsics import PURE_INTRINSICS
from ..hir.nodes import (App, Block, BoolLit, Cast, Defined, ExprStmt, FloatLit, Gep, GlobalRef,
                         If, IntLit, Intrinsic, Jump, Label, Let, Load, PrimOp, Return, Set,
                         Store, Switch, SymLit, Var, While, is_literal)
from ..hir.types import F32, F64, I1, BOOL, SYM, IntT, is_float


def map_expr(e, fe, fs):
    """Rebuild ``e`` with ``fe`` applied to child expressions and ``fs`` to
    child statements."""
    if isinstance(e, (PrimOp, App)):
        return replace(e, args=tuple(fe(a) for a in e.args))
    if isinstance(e, Let):
        return replace(e, bindings=tuple((n, fe(i), t) for n, i, t in e.bindings),
                       body=fs(e.body), result=None if e.result is None else fe(e.result))
    if isinstance(e, Gep):
        return replace(e, base=fe(e.base), indices=tuple(fe(i) for i in e.indices))
    if isinstance(e, Load):
        return replace(e, addr=fe(e.addr))
    if isinstance(e, Cast):
        return replace(e, arg=fe(e.arg))
    return e


def map_stmt(s, fe, fs):
    if isinstance(s, ExprStmt):
        return replace(s, expr=fe(s.expr))
    if isinstance(s, Block):
        return replace(s, stmts=tuple(fs(x) for x in s.stmts))
    if isinstance(s, Return):
        return s if s.value is None else replace(s, value=fe(s.value))
    if isinstance(s, While):
        return replace(s, cond=fe(s.cond), body=fs(s.body))
    if isinstance(s, If):
        return replace(s, cond=fe(s.cond), then=fs(s.then), else_=fs(s.else_))
    if isinstance(s, Set):
        return replace(s, value=fe(s.value))
    if isinstance(s, Store):
        return replace(s, value=fe(s.value), addr=fe(s.addr))
    if isinstance(s, Switch):
        return replace(s, scrutinee=fe(s.scrutinee),
                       cases=tuple((c, fs(b)) for c, b in s.cases), default=fs(s.default))
    if isinstance(s, Label):
        return replace(s, body=fs(s.body))
    return s


def sub_exprs(e):
    if isinstance(e, (PrimOp, App)):
        return list(e.args)
    if isinstance(e, Let):
        return [i for _, i, _ in e.bindings] + ([] if e.result is None else [e.result])
    if isinstance(e, Gep):
        return [e.base, *e.indices]
    if isinstance(e, Load):
        return [e.addr]
    if isinstance(e, Cast):
        return [e.arg]
    return []


def walk_expr(e):
    """Yield every expression node inside ``e`` (including statements' expressions)."""
    yield e
    for c in sub_exprs(e):
        yield from walk_expr(c)
    if isinstance(e, Let):
        yield from walk_stmt_exprs(e.body)


def stmt_children(s):
    if isinstance(s, Block):
        return list(s.stmts)
    if isinstance(s, While):
        return [s.body]
    if isinstance(s, If):
        return [s.then, s.else_]
    if isinstance(s, Switch):
        return [b for _, b in s.cases] + [s.default]
    if isinstance(s, Label):
        return [s.body]
    return []


def stmt_exprs(s):
    if isinstance(s, ExprStmt):
        return [s.expr]
    if isinstance(s, Return):
        return [] if s.value is None else [s.value]
    if isinstance(s, (While, If)):
        return [s.cond]
    if isinstance(s, Set):
        return [s.value]
    if isinstance(s, Store):
        return [s.value, s.addr]
    if isinstance(s, Switch):
        return [s.scrutinee]
    return []


def walk_stmts(s):
    """Yield every statement in ``s``, descending into Let bodies too."""
    yield s
    for e in stmt_exprs(s):
        for x in walk_expr(e):
            if isinstance(x, Let):
                yield from walk_stmts(x.body)
    for c in stmt_children(s):
        yield from walk_stmts(c)


def walk_stmt_exprs(s):
    for st in walk_stmts_shallow(s):
        for e in stmt_exprs(st):
            yield from walk_expr(e)


def walk_stmts_shallow(s):
    yield s
    for c in stmt_children(s):
        yield from walk_stmts_shallow(c)


def all_exprs(s):
    """Every expression reachable from statement ``s``."""
    for st in walk_stmts_shallow(s):
        for e in stmt_exprs(st):
            yield from walk_expr(e)


def node_count(s) -> int:
    n = 0
    for st in walk_stmts(s):
        n += 1
        for e in stmt_exprs(st):
            n += sum(1 for _ in _walk_no_let_body(e))
    return n


def _walk_no_let_body(e):
    yield e
    for c in sub_exprs(e):
        yield from _walk_no_let_body(c)


def module_size(m) -> int:
    return sum(node_count(f.body) for f in m.functions.values())


def set_vars(s) -> set:
    return {st.name for st in walk_stmts(s) if isinstance(st, Set)}


def bound_vars_stmt(s) -> set:
    out = set()
    for e in all_exprs(s):
        if isinstance(e, Let):
            out.update(n for n, _, _ in e.bindings)
    return out


def bound_vars_expr(e) -> set:
    out = set()
    for x in walk_expr(e):
        if isinstance(x, Let):
            out.update(n for n, _, _ in x.bindings)
    return out


def free_vars(e) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Let):
        out = set()
        for _, i, _ in e.bindings:
            out |= free_vars(i)
        inner = free_vars_stmt(e.body)
        if e.result is not None:
            inner |= free_vars(e.result)
        return out | (inner - {n for n, _, _ in e.bindings})
    out = set()
    for c in sub_exprs(e):
        out |= free_vars(c)
    return out


def free_vars_stmt(s) -> set:
    out = set()
    if isinstance(s, Set):
        out.add(s.name)
    for e in stmt_exprs(s):
        out |= free_vars(e)
    for c in stmt_children(s):
        out |= free_vars_stmt(c)
    return out


def contains_labels(s) -> bool:
    return any(isinstance(x, (Label,)) for x in walk_stmts(s))


def contains_control_exit(s) -> bool:
    return any(isinstance(x, (Return, Jump, Label)) for x in walk_stmts(s))


def _nonzero_literal(e):
    return isinstance(e, IntLit) and e.value != 0


def is_pure(e, module=None, *, allow_load=False) -> bool:
    """No side effects and no possible trap: evaluating ``e`` zero or many
    times is unobservable. Calls qualify only for math intrinsics and
    functions tagged ``pure``."""
    if isinstance(e, (Var, IntLit, FloatLit, SymLit, BoolLit, GlobalRef)):
        return True
    if isinstance(e, PrimOp):
        if e.op in ("udiv", "sdiv", "urem", "srem") and not _nonzero_literal(e.args[1]):
            return False
        if e.op == "sub-nuw":
            return False
        return all(is_pure(a, module, allow_load=allow_load) for a in e.args)
    if isinstance(e, Cast):
        return is_pure(e.arg, module, allow_load=allow_load)
    if isinstance(e, Gep):
        return all(is_pure(a, module, allow_load=allow_load) for a in (e.base, *e.indices))
    if isinstance(e, Load):
        return allow_load and is_pure(e.addr, module, allow_load=allow_load)
    if isinstance(e, App):
        if not all(is_pure(a, module, allow_load=allow_load) for a in e.args):
            return False
        r = e.rator
        if isinstance(r, Intrinsic):
            return r.name in PURE_INTRINSICS
        if isinstance(r, Defined) and module is not None and r.name in module.functions:
            return "pure" in module.functions[r.name].attrs
        return False
    return False


def zero_literal(t):
    if isinstance(t, IntT):
        return IntLit(0, t)
    if is_float(t):
        return FloatLit(0.0, t)
    if t == BOOL:
        return BoolLit(False)
    if t == SYM:
        return SymLit("")
    return None


def literal_of(value, t):
    """Literal node for a host constant of type ``t`` (None if impossible)."""
    if isinstance(t, IntT):
        if isinstance(value, bool) and t != I1:
            return None
        if not isinstance(value, int):
            return None
        return IntLit(value, t, value < 0)
    if t in (F32, F64):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        return FloatLit(float(value), t)
    if t == BOOL:
        return BoolLit(value) if isinstance(value, bool) else None
    if t == SYM:
        return SymLit(str(value)) if isinstance(value, str) else None
    return None


def substitute(s, mapping):
    """Replace free ``Var`` occurrences in statement ``s`` per ``mapping``
    (name -> expression), respecting shadowing by inner lets."""
    return _subst_stmt(s, mapping)


def _subst_expr(e, mp):
    if not mp:
        return e
    if isinstance(e, Var):
        return mp.get(e.name, e)
    if isinstance(e, Let):
        bindings = tuple((n, _subst_expr(i, mp), t) for n, i, t in e.bindings)
        inner = {k: v for k, v in mp.items() if k not in {n for n, _, _ in e.bindings}}
        return replace(e, bindings=bindings, body=_subst_stmt(e.body, inner),
                       result=None if e.result is None else _subst_expr(e.result, inner))
    return map_expr(e, lambda x: _subst_expr(x, mp), lambda x: _subst_stmt(x, mp))


def _subst_stmt(s, mp):
    if not mp:
        return s
    return map_stmt(s, lambda x: _subst_expr(x, mp), lambda x: _subst_stmt(x, mp))


def substitute_expr(e, mapping):
    return _subst_expr(e, mapping)


def is_literal_expr(e):
    return is_literal(e)
