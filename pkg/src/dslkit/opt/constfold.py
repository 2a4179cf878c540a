"""Constant folding and propagation for both IR levels.

HIR: literal operands are folded with exactly the interpreter's arithmetic,
constants flow forward through straight-line code (``let`` and ``set!``),
branches on constant conditions collapse, and the integer identities
``x*1``, ``x+0``, ``x-0`` and ``x*0`` (for trap-free ``x``) apply.
Operations that would trap (division by zero, a wrapping ``sub-nuw``) are
left in place so the runtime error is preserved.

LIR: the same folding over registers defined by ``const``.
"""

from __future__ import annotations

from dataclasses import replace

from .. import numerics
from ..hir.intrinsics import PURE_INTRINSICS
from ..hir.nodes import (App, Block, BoolLit, Cast, ExprStmt, FloatLit, HFunction, If, IntLit,
                         Intrinsic, Label, Let, PrimOp, Return, Set, Store, SVoid, Switch, SymLit,
                         Var, While, FLOAT_BINOPS, FLOAT_CMPS, INT_BINOPS, INT_CMPS)
from ..hir.typecheck import terminates
from ..hir.types import F32, I1, IntT, is_float
from ..lir import Block as LBlock
from ..lir import Instr, LFunction
from .hirutil import contains_labels, is_pure, map_expr, set_vars

_MISSING = object()


def _lit_value(e):
    if isinstance(e, (IntLit, FloatLit, BoolLit)):
        return e.value
    if isinstance(e, SymLit):
        return e.text
    return _MISSING


def fold_primop(op, a, b, ty, arg_ty):
    """Fold ``op`` over constant operands; ``None`` when it must stay
    (a trap would be raised at run time)."""
    try:
        if op in INT_BINOPS:
            return numerics.int_binop(op, a, b, ty.width, nuw_check=True)
        if op in FLOAT_BINOPS:
            return numerics.float_binop(op, a, b, ty == F32)
        if op in INT_CMPS:
            width = arg_ty.width if isinstance(arg_ty, IntT) else 64
            if op in ("icmp-eq", "icmp-ne"):
                return int((a == b) == (op == "icmp-eq"))
            return numerics.compare(op, a, b, width)
        if op in FLOAT_CMPS:
            return numerics.compare(op, a, b)
    except numerics.ArithmeticTrap:
        return None
    return None


def fold_cast(kind, v, src, dst):
    fw = src.width if isinstance(src, IntT) else None
    tw = dst.width if isinstance(dst, IntT) else None
    return numerics.cast(kind, v, fw, tw, dst == F32)


def _make_lit(v, ty):
    if isinstance(ty, IntT):
        return IntLit(v, ty)
    if is_float(ty):
        return FloatLit(v, ty)
    return None


class _HirFolder:
    def __init__(self, module):
        self.module = module

    # expressions ------------------------------------------------------------
    def expr(self, e, env):
        if isinstance(e, Var):
            v = env.get(e.name)
            return v if v is not None else e
        if isinstance(e, Let):
            return self.let(e, env)
        e = map_expr(e, lambda x: self.expr(x, env), lambda s: s)
        if isinstance(e, PrimOp):
            return self.primop(e)
        if isinstance(e, Cast):
            v = _lit_value(e.arg)
            if v is not _MISSING and not isinstance(e.arg, (SymLit, BoolLit)) and e.kind != "ptrcast":
                lit = _make_lit(fold_cast(e.kind, v, e.arg.ty, e.ty), e.ty)
                if lit is not None:
                    return lit
            return e
        if isinstance(e, App) and isinstance(e.rator, Intrinsic) and e.rator.name in PURE_INTRINSICS:
            if len(e.args) == 1 and isinstance(e.args[0], FloatLit):
                return FloatLit(numerics.math_intrinsic(e.rator.name, e.args[0].value), e.rator.ty.ret)
        return e

    def primop(self, e):
        a, b = e.args
        va, vb = _lit_value(a), _lit_value(b)
        if va is not _MISSING and vb is not _MISSING:
            r = fold_primop(e.op, va, vb, e.ty, a.ty)
            if r is not None:
                return IntLit(r, I1) if e.ty == I1 and e.op in INT_CMPS + FLOAT_CMPS else _make_lit(r, e.ty)
            return e
        if isinstance(e.ty, IntT) and e.op in ("add", "sub", "mul", "or", "xor", "shl", "lshr", "ashr"):
            if e.op == "mul":
                if vb == 1:
                    return a
                if va == 1:
                    return b
                if vb == 0 and is_pure(a, self.module):
                    return IntLit(0, e.ty)
                if va == 0 and is_pure(b, self.module):
                    return IntLit(0, e.ty)
            elif e.op in ("add", "or", "xor"):
                if vb == 0:
                    return a
                if va == 0:
                    return b
            elif vb == 0:
                return a
        return e

    def let(self, e, env):
        inits = [(n, self.expr(i, env), t) for n, i, t in e.bindings]
        saved = {n: env.get(n, _MISSING) for n, _, _ in inits}
        assigned = set_vars(e.body)
        kept = []
        for n, i, t in inits:
            if _lit_value(i) is not _MISSING:
                env[n] = i
                if n in assigned:
                    kept.append((n, i, t))
            else:
                env.pop(n, None)
                kept.append((n, i, t))
        # names whose binding was dropped stay constant whatever control flow
        # follows; labels only clear the flow-sensitive facts
        stable = {n for n, i, _ in inits if _lit_value(i) is not _MISSING and n not in assigned}
        self.stable.append(stable)
        body = self.stmt(e.body, env)
        result = None if e.result is None else self.expr(e.result, env)
        self.stable.pop()
        for n, old in saved.items():
            if old is _MISSING:
                env.pop(n, None)
            else:
                env[n] = old
        body = _flatten(body)
        if not kept and isinstance(body, SVoid) and result is not None:
            return result
        return replace(e, bindings=tuple(kept), body=body, result=result)

    # statements -------------------------------------------------------------
    def clear(self, env):
        keep = {n: env[n] for s in self.stable for n in s if n in env}
        env.clear()
        env.update(keep)

    def kill(self, env, names):
        stable = set().union(*self.stable) if self.stable else set()
        for n in names:
            if n not in stable:
                env.pop(n, None)

    def stmt(self, s, env):
        if isinstance(s, ExprStmt):
            e = self.expr(s.expr, env)
            if isinstance(e, Let) and e.result is None and not e.bindings:
                return e.body
            if _lit_value(e) is not _MISSING or isinstance(e, Var):
                return SVoid()
            return ExprStmt(e)
        if isinstance(s, Block):
            out = [self.stmt(x, env) for x in s.stmts]
            return _flatten(Block(tuple(out)))
        if isinstance(s, Return):
            return s if s.value is None else Return(self.expr(s.value, env))
        if isinstance(s, Set):
            v = self.expr(s.value, env)
            if _lit_value(v) is not _MISSING:
                env[s.name] = v
            else:
                self.kill(env, [s.name])
            return Set(s.name, v)
        if isinstance(s, While):
            first = self.expr(s.cond, dict(env))
            if _lit_value(first) in (0, False) and not contains_labels(s.body):
                return SVoid()
            killed = set_vars(s.body) | set_vars(ExprStmt(s.cond))
            if contains_labels(s.body):
                self.clear(env)
            self.kill(env, killed)
            cond = self.expr(s.cond, dict(env))
            body = self.stmt(s.body, dict(env))
            return While(cond, body)
        if isinstance(s, If):
            cond = self.expr(s.cond, env)
            v = _lit_value(cond)
            if v is not _MISSING:
                chosen, dropped = (s.then, s.else_) if v else (s.else_, s.then)
                if not contains_labels(dropped):
                    return self.stmt(chosen, env)
            branches = [s.then, s.else_]
            return self.join(env, branches, lambda bs: If(cond, bs[0], bs[1]))
        if isinstance(s, Switch):
            scrut = self.expr(s.scrutinee, env)
            v = _lit_value(scrut)
            if v is not _MISSING:
                chosen = s.default
                for c, b in s.cases:
                    if _lit_value(c) == v:
                        chosen = b
                        break
                others = [b for _, b in s.cases if b is not chosen] + ([s.default] if chosen is not s.default else [])
                if not any(contains_labels(o) for o in others):
                    return self.stmt(chosen, env)
            bodies = [b for _, b in s.cases] + [s.default]
            return self.join(env, bodies, lambda bs: Switch(scrut, tuple(
                (c, b) for (c, _), b in zip(s.cases, bs[:-1])), bs[-1]))
        if isinstance(s, Label):
            self.clear(env)
            return Label(s.name, self.stmt(s.body, env))
        if isinstance(s, Store):
            return replace(s, value=self.expr(s.value, env), addr=self.expr(s.addr, env))
        return s

    def join(self, env, branches, build):
        if any(contains_labels(b) for b in branches):
            self.clear(env)
        outs, folded = [], []
        for b in branches:
            e2 = dict(env)
            fb = self.stmt(b, e2)
            folded.append(fb)
            if not terminates(fb):
                outs.append(e2)
        env.clear()
        if outs:
            first = outs[0]
            for k, v in first.items():
                if all(k in o and o[k] == v for o in outs[1:]):
                    env[k] = v
        if any(contains_labels(b) for b in branches):
            self.clear(env)
        return build(folded)

    def function(self, fn: HFunction) -> HFunction:
        self.stable = []
        return replace(fn, body=_flatten(self.stmt(fn.body, {})))


def _flatten(s):
    if not isinstance(s, Block):
        return s
    out = []
    for x in s.stmts:
        x = _flatten(x)
        if isinstance(x, Block):
            out.extend(x.stmts)
        elif not isinstance(x, SVoid):
            out.append(x)
    if not out:
        return SVoid()
    if len(out) == 1:
        return out[0]
    return Block(tuple(out))


def const_fold_function(fn: HFunction, module=None) -> HFunction:
    folder = _HirFolder(module)
    cur = fn
    for _ in range(16):
        nxt = folder.function(cur)
        if nxt == cur:
            break
        cur = nxt
    return cur


def const_fold_hir(m):
    return m.with_functions({n: const_fold_function(f, m) for n, f in m.functions.items()})


# -- LIR ------------------------------------------------------------------------


def _resolve(alias, r):
    while r in alias:
        r = alias[r]
    return r


def const_fold_lir_function(fn: LFunction) -> LFunction:
    consts = {}
    types = dict(fn.params)
    for b in fn.blocks:
        for i in b.instrs:
            if i.dest:
                types[i.dest] = i.ty
            if i.op == "const" and not hasattr(i.ty, "elem"):
                consts[i.dest] = i.attr[0]
    alias = {}
    changed = True
    blocks = list(fn.blocks)
    while changed:
        changed = False
        new_blocks = []
        for b in blocks:
            instrs = []
            for ins in b.instrs:
                ins = replace(ins, args=tuple(_resolve(alias, a) for a in ins.args))
                if ins.dest in alias:
                    continue
                out = _fold_instr(ins, consts, types, alias)
                if out is not ins:
                    changed = True
                if out is None:
                    continue
                if out.op == "const" and ins.op != "const":
                    consts[out.dest] = out.attr[0]
                instrs.append(out)
            term = b.term
            if term is not None:
                term = replace(term, args=tuple(_resolve(alias, a) for a in term.args))
                t2 = _fold_term(term, consts)
                if t2 is not term:
                    changed = True
                term = t2
            new_blocks.append(LBlock(b.label, tuple(instrs), term))
        blocks = new_blocks
    return replace(fn, blocks=tuple(blocks))


def _fold_instr(ins, consts, types, alias):
    op = ins.op
    if op in ("binop", "cmp"):
        a, b = ins.args
        o = ins.attr[0]
        if a in consts and b in consts:
            r = fold_primop(o, consts[a], consts[b], ins.ty, types.get(a))
            if r is None:
                return ins
            return Instr("const", ins.dest, ins.ty, (), (r,))
        if op == "binop" and isinstance(ins.ty, IntT):
            ca, cb = consts.get(a, _MISSING), consts.get(b, _MISSING)
            if o == "mul":
                if cb == 1:
                    alias[ins.dest] = a
                    return None
                if ca == 1:
                    alias[ins.dest] = b
                    return None
                if ca == 0 or cb == 0:
                    return Instr("const", ins.dest, ins.ty, (), (0,))
            elif o in ("add", "or", "xor"):
                if cb == 0:
                    alias[ins.dest] = a
                    return None
                if ca == 0:
                    alias[ins.dest] = b
                    return None
            elif o in ("sub", "shl", "lshr", "ashr") and cb == 0:
                alias[ins.dest] = a
                return None
        return ins
    if op == "cast":
        a = ins.args[0]
        if a in consts and ins.attr[0] != "ptrcast":
            v = consts[a]
            if isinstance(v, (str, bool)):
                return ins
            return Instr("const", ins.dest, ins.ty, (), (fold_cast(ins.attr[0], v, types[a], ins.ty),))
        return ins
    if op == "call" and ins.attr[0] == "intrinsic" and ins.attr[1] in PURE_INTRINSICS:
        if len(ins.args) == 1 and ins.args[0] in consts:
            v = numerics.math_intrinsic(ins.attr[1], consts[ins.args[0]])
            return Instr("const", ins.dest, ins.ty, (), (numerics.f32(v) if ins.ty == F32 else v,))
    return ins


def _fold_term(term, consts):
    if term.op == "condbr" and term.args[0] in consts:
        v = consts[term.args[0]]
        return Instr("br", attr=(term.attr[0] if v else term.attr[1],))
    if term.op == "condbr" and term.attr[0] == term.attr[1]:
        return Instr("br", attr=(term.attr[0],))
    if term.op == "switch" and term.args[0] in consts:
        v = consts[term.args[0]]
        for c, t in term.attr[0]:
            if c == v and type(c) is type(v):
                return Instr("br", attr=(t,))
        return Instr("br", attr=(term.attr[1],))
    return term


def const_fold_lir(m):
    return replace(m, functions={n: const_fold_lir_function(f) for n, f in m.functions.items()})


