"""Deterministic s-expression dump of HIR modules."""

from __future__ import annotations

from ..sexpr import Symbol as S
from ..sexpr import dumps
from .nodes import (App, Block, BoolLit, Cast, Defined, ExprStmt, External, FloatLit, Gep,
                    GlobalRef, HFunction, HModule, Host, If, IntLit, Intrinsic, Jump, Label,
                    Let, Load, PrimOp, Return, Set, Store, SVoid, Switch, SymLit, Var, While)
from .types import type_datum


def expr_datum(e):
    if isinstance(e, Var):
        return S(e.name)
    if isinstance(e, IntLit):
        return [S(f"{'s' if e.signed else 'u'}i{e.ty.width}"), e.value]
    if isinstance(e, FloatLit):
        return [S(repr(e.ty)), e.value]
    if isinstance(e, SymLit):
        return [S("quote"), S(e.text)]
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, GlobalRef):
        return [S("global"), S(e.name)]
    if isinstance(e, PrimOp):
        return [S(e.op)] + [expr_datum(a) for a in e.args]
    if isinstance(e, App):
        r = e.rator
        if isinstance(r, Defined):
            head = [S("call"), S(r.name)]
        else:
            kind = {Intrinsic: "intrinsic", External: "external", Host: "host"}[type(r)]
            head = [S(kind), S(r.name), type_datum(r.ty)]
        return head + [expr_datum(a) for a in e.args]
    if isinstance(e, Let):
        out = [S("let"), [[S(n), expr_datum(i), type_datum(t)] for n, i, t in e.bindings],
               stmt_datum(e.body)]
        if e.result is not None:
            out.append(expr_datum(e.result))
        return out
    if isinstance(e, Gep):
        return [S("gep"), expr_datum(e.base)] + [expr_datum(i) for i in e.indices]
    if isinstance(e, Load):
        return [S("load"), expr_datum(e.addr)]
    if isinstance(e, Cast):
        return [S("cast"), S(e.kind), type_datum(e.ty), expr_datum(e.arg)]
    raise TypeError(f"not an HIR expression: {e!r}")


def stmt_datum(s):
    if isinstance(s, ExprStmt):
        return [S("expr"), expr_datum(s.expr)]
    if isinstance(s, Block):
        return [S("block")] + [stmt_datum(x) for x in s.stmts]
    if isinstance(s, SVoid):
        return [S("void")]
    if isinstance(s, Return):
        return [S("return")] + ([] if s.value is None else [expr_datum(s.value)])
    if isinstance(s, While):
        return [S("while"), expr_datum(s.cond), stmt_datum(s.body)]
    if isinstance(s, If):
        return [S("if"), expr_datum(s.cond), stmt_datum(s.then), stmt_datum(s.else_)]
    if isinstance(s, Set):
        return [S("set!"), S(s.name), expr_datum(s.value)]
    if isinstance(s, Store):
        return [S("store"), expr_datum(s.value), expr_datum(s.addr)]
    if isinstance(s, Switch):
        return [S("switch"), expr_datum(s.scrutinee),
                [[expr_datum(c), stmt_datum(b)] for c, b in s.cases], stmt_datum(s.default)]
    if isinstance(s, Label):
        return [S("label"), S(s.name), stmt_datum(s.body)]
    if isinstance(s, Jump):
        return [S("jump"), S(s.name)]
    raise TypeError(f"not an HIR statement: {s!r}")


def function_datum(f: HFunction):
    return [S("define"), S(f.name), [[S(n), type_datum(t)] for n, t in f.params],
            type_datum(f.ret), [S(a) for a in sorted(f.attrs)], stmt_datum(f.body)]


def _indent(d, depth=0):
    """Break top-level statement forms onto their own lines for readability."""
    text = dumps(d)
    if len(text) + depth * 2 <= 90 or not isinstance(d, list) or not d:
        return "  " * depth + text
    head = []
    rest = list(d)
    while rest and not isinstance(rest[0], list):
        head.append(rest.pop(0))
    first = "  " * depth + "(" + " ".join(dumps(h) for h in head)
    lines = [first] + [_indent(x, depth + 1) for x in rest]
    return "\n".join(lines) + ")"


def dump_function(f: HFunction) -> str:
    return _indent(function_datum(f))


def dump_module(m: HModule) -> str:
    lines = [f"(module {m.name}"]
    for g in m.globals:
        init = [] if g.init is None else [list(g.init)]
        lines.append("  " + dumps([S("global"), S(g.name), type_datum(g.ty)] + init))
    for name in sorted(m.functions):
        lines.append(_indent(function_datum(m.functions[name]), 1))
    return "\n".join(lines) + ")\n"
