"""Runtime specialization of a function to binding-time information.

``specialize(m, "fill", {"rate": StaticValue(44100.0), "out": StaticAddress(n)})``
adds ``fill@spec0`` without the bound parameters. Bound values become
literals, a static address becomes a module global the engine preallocates,
and a static array size fixes the length parameter that follows a pointer.
The new body is then re-optimized: calls with literal arguments are unfolded
(inlined and folded, under a budget), constant-trip loops of at most
``UNROLL_LIMIT`` iterations are unrolled, and const-fold, licm and dce run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .. import numerics
from ..hir.nodes import (App, Block, Defined, ExprStmt, Global, GlobalRef, HFunction, IntLit, Let,
                         PrimOp, Set, Var, While, is_literal, module_add, module_add_global)
from ..hir.typecheck import typecheck_module
from ..hir.types import VOID, ArrayT, IntT, PtrT
from .constfold import const_fold_function
from .dce import dce_function
from .hirutil import (all_exprs, contains_labels, literal_of, map_expr, map_stmt, set_vars,
                      substitute, walk_stmts)
from .inline import Inliner, inline_calls
from .licm import licm_function

UNROLL_LIMIT = 16
UNFOLD_BUDGET = 64


class SpecializeError(Exception):
    pass


class BindingTypeMismatch(SpecializeError):
    def __init__(self, param, expected, binding):
        self.param = param
        super().__init__(f"binding {binding!r} does not fit parameter {param} : {expected}")


class UnknownParam(SpecializeError):
    def __init__(self, fn, param):
        self.param = param
        super().__init__(f"{fn} has no parameter {param}")


@dataclass(frozen=True)
class StaticValue:
    value: object


@dataclass(frozen=True)
class StaticArraySize:
    count: int


@dataclass(frozen=True)
class StaticAddress:
    """A buffer of ``length`` elements allocated before compilation;
    ``init`` optionally gives its initial contents."""

    length: int
    init: tuple | None = None


def spec_name(m, fn_name):
    i = 0
    while f"{fn_name}@spec{i}" in m.functions:
        i += 1
    return f"{fn_name}@spec{i}"


def _resolve_bindings(fn: HFunction, bindings, new_name):
    """Map parameter name -> replacement expression, plus any new globals."""
    ptypes = dict(fn.params)
    names = list(fn.param_names)
    exprs, globals_ = {}, []
    for p, b in bindings.items():
        if p not in ptypes:
            raise UnknownParam(fn.name, p)
        t = ptypes[p]
        if isinstance(b, StaticValue):
            lit = literal_of(b.value, t)
            if lit is None:
                raise BindingTypeMismatch(p, t, b)
            exprs[p] = lit
        elif isinstance(b, StaticArraySize):
            if isinstance(b.count, bool) or not isinstance(b.count, int) or b.count < 0:
                raise BindingTypeMismatch(p, t, b)
            if isinstance(t, IntT):
                exprs[p] = IntLit(b.count, t)
            elif isinstance(t, PtrT):
                i = names.index(p)
                if i + 1 >= len(names) or not isinstance(ptypes[names[i + 1]], IntT):
                    raise BindingTypeMismatch(p, t, b)
                exprs[names[i + 1]] = IntLit(b.count, ptypes[names[i + 1]])
            else:
                raise BindingTypeMismatch(p, t, b)
        elif isinstance(b, StaticAddress):
            if not isinstance(t, PtrT) or isinstance(b.length, bool) or not isinstance(b.length, int):
                raise BindingTypeMismatch(p, t, b)
            gname = f"{new_name}.{p}.static"
            globals_.append(Global(gname, ArrayT(t.elem, b.length),
                                   None if b.init is None else tuple(b.init)))
            exprs[p] = GlobalRef(gname, t)
        else:
            raise BindingTypeMismatch(p, t, b)
    return exprs, globals_


def _bind(body, exprs, ptypes):
    """Substitute bound params; ones the body assigns get a ``let`` instead."""
    assigned = set_vars(body)
    direct = {p: e for p, e in exprs.items() if p not in assigned}
    body = substitute(body, direct)
    rest = [(p, e, ptypes[p]) for p, e in exprs.items() if p in assigned]
    if rest:
        body = ExprStmt(Let(tuple(rest), body, None, VOID))
    return body


def unfold_literal_calls(fn: HFunction, module, budget=UNFOLD_BUDGET, counter=None):
    """Polyvariant unfolding: inline calls that pass a literal argument, fold,
    and repeat while the budget lasts."""
    inliner = Inliner(counter)
    left = [budget]

    def pick(app):
        if left[0] <= 0 or not any(is_literal(a) for a in app.args):
            return None
        callee = module.functions.get(app.rator.name)
        if callee is None or "noinline" in callee.attrs:
            return None
        left[0] -= 1
        return callee

    cur = fn
    while left[0] > 0:
        has_call = any(isinstance(e, App) and isinstance(e.rator, Defined)
                       and any(is_literal(a) for a in e.args) for e in all_exprs(cur.body))
        if not has_call:
            break
        nxt = dce_function(const_fold_function(inline_calls(cur, pick, inliner), module), module)
        if nxt == cur:
            break
        cur = nxt
    return cur


# -- unrolling ------------------------------------------------------------------

_CMP_OPS = ("icmp-ult", "icmp-ule", "icmp-slt", "icmp-sle", "icmp-ne", "icmp-ugt")


def _trip_count(init, op, bound, step, width):
    v, n = init, 0
    while numerics.compare(op, v, bound, width):
        n += 1
        if n > UNROLL_LIMIT:
            return None
        v = numerics.wrap(v + step, width)
    return n


def _unrollable(w: While, known):
    c = w.cond
    if not (isinstance(c, PrimOp) and c.op in _CMP_OPS and isinstance(c.args[0], Var)
            and isinstance(c.args[1], IntLit)):
        return None
    i = c.args[0].name
    if i not in known or contains_labels(w.body):
        return None
    body = w.body.stmts if isinstance(w.body, Block) else (w.body,)
    last = body[-1]
    if not (isinstance(last, Set) and last.name == i and isinstance(last.value, PrimOp)
            and last.value.op == "add" and last.value.args[0] == Var(i, last.value.ty)
            and isinstance(last.value.args[1], IntLit)):
        return None
    if sum(1 for s in walk_stmts(w.body) if isinstance(s, Set) and s.name == i) != 1:
        return None
    width = c.args[1].ty.width
    return _trip_count(known[i], c.op, c.args[1].value, last.value.args[1].value, width)


def unroll_loops(fn: HFunction) -> HFunction:
    """Fully unroll ``while`` loops whose counter starts at a known literal,
    is compared against a literal and advances by a literal step at the end
    of the body."""

    def seq(stmts, known):
        out = []
        for s in stmts:
            if isinstance(s, While):
                n = _unrollable(s, known)
                if n is not None:
                    out.append(Block((s.body,) * n) if n else Block(()))
                    known = {}
                    continue
            s = fs(s)
            if isinstance(s, Set) and isinstance(s.value, IntLit):
                known = {**known, s.name: s.value.value}
            else:
                known = {k: v for k, v in known.items() if k not in set_vars(s)}
                if contains_labels(s):
                    known = {}
            out.append(s)
        return out

    def fs(s):
        if isinstance(s, Block):
            return Block(tuple(seq(s.stmts, {})))
        return map_stmt(s, fe, fs)

    def fe(e):
        if isinstance(e, Let):
            known = {n: i.value for n, i, _ in e.bindings if isinstance(i, IntLit)}
            body = e.body.stmts if isinstance(e.body, Block) else (e.body,)
            inits = tuple((n, fe(i), t) for n, i, t in e.bindings)
            return replace(e, bindings=inits, body=Block(tuple(seq(body, known))),
                           result=None if e.result is None else fe(e.result))
        return map_expr(e, fe, fs)

    return replace(fn, body=fs(fn.body))


def optimize_specialized(fn: HFunction, module) -> HFunction:
    fn = const_fold_function(fn, module)
    fn = unfold_literal_calls(fn, module)
    fn = unroll_loops(fn)
    fn = const_fold_function(fn, module)
    fn = licm_function(fn, module)
    fn = const_fold_function(fn, module)
    return dce_function(fn, module)


def specialize_function(m, fn_name, bindings):
    """Return ``(module, new_name)``."""
    if fn_name not in m.functions:
        raise UnknownParam(fn_name, "<function>")
    fn = m.functions[fn_name]
    new_name = spec_name(m, fn_name)
    exprs, globals_ = _resolve_bindings(fn, dict(bindings), new_name)
    ptypes = dict(fn.params)
    params = tuple((p, t) for p, t in fn.params if p not in exprs)
    body = _bind(fn.body, exprs, ptypes)
    attrs = frozenset(a for a in fn.attrs if a != "always-inline")
    new = HFunction(new_name, params, fn.ret, body, attrs)
    for g in globals_:
        m = module_add_global(m, g, replace_existing=True)
    m = module_add(m, new)
    m = typecheck_module(m)
    new = optimize_specialized(m.functions[new_name], m)
    m = module_add(m, new, replace_existing=True)
    return typecheck_module(m), new_name


def specialize(m, fn_name, bindings):
    return specialize_function(m, fn_name, bindings)[0]
