"""Lowering mini-Hakaru (in A-normal form) to one HIR module.

Every value lives in a function-level local assigned with ``set!``; arrays
travel as a ``(pointer, length)`` pair. ``for`` allocates its output and
fills it in a ``while`` loop, ``summate`` keeps an accumulator.

With ``fuse`` on, a chain of ``let``-bound loops over the same ``(lo, hi)``
atoms, none reading another's result, becomes one loop that updates every
accumulator and output. With ``helpers`` on, each remaining ``summate``
whose body has no loop is emitted as a separate function tagged ``pure``,
so HIR LICM can hoist the call out of an enclosing loop. The pure tag
assumes in-bounds indexing, the same contract the language itself has.
"""

from __future__ import annotations

from dataclasses import dataclass

from ...hir.build import function, intrinsic
from ...hir.nodes import (App, Block, Cast, Defined, ExprStmt, FloatLit, Gep, Global, GlobalRef,
                          If, IntLit, Let, Load, PrimOp, Return, Set, Store, Var, While,
                          make_module)
from ...hir.types import F64, I1, I64, VOID, ArrayT, FnT, PtrT
from ...opt.hirutil import all_exprs
from ...sexpr import dumps
from .grammar import (MhkError, UnsupportedConstruct, elem_type, free_vars, has_loop,
                      is_array_type, is_atomic, let_parts, op_of, scalar_kind, type_of)

RESULT_LEN = "result.len"
WORD = 8

_HTYPES = {"int": I64, "real": F64, "bool": I1}


def htype(t):
    """HIR type of a scalar mini-Hakaru type."""
    return _HTYPES[scalar_kind(t)]


def _null_name(ht):
    return f"null.{'f64' if ht == F64 else 'i64' if ht == I64 else 'i1'}"


def _zero(ht):
    """Initial value of a local; pointers start at an empty global."""
    if isinstance(ht, PtrT):
        return GlobalRef(_null_name(ht.elem), ht)
    return FloatLit(0.0, F64) if ht == F64 else IntLit(0, ht)


@dataclass(frozen=True)
class Scalar:
    expr: object
    mtype: object


@dataclass(frozen=True)
class Arr:
    ptr: object
    len: object
    mtype: object  # the array type

    @property
    def elem_htype(self):
        return htype(elem_type(self.mtype))


def _i64(v):
    return IntLit(v, I64)


def _malloc(n_elems, ht):
    size = PrimOp("mul", (n_elems, _i64(WORD)))
    return App(intrinsic("malloc", FnT((I64,), PtrT(ht))), (size,))


class _Names:
    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counts = {}

    def __call__(self, base):
        k = self.counts.get(base, 0)
        while f"{base}.{k}" in self.taken:
            k += 1
        self.counts[base] = k + 1
        name = f"{base}.{k}"
        self.taken.add(name)
        return name


class _Lowerer:
    def __init__(self, fuse, helpers, names, helper_fns):
        self.fuse = fuse
        self.helpers = helpers
        self.names = names
        self.helper_fns = helper_fns
        self.locals = []
        self.out = []

    # -- plumbing --------------------------------------------------------------

    def local(self, base, ht):
        name = self.names(base)
        self.locals.append((name, _zero(ht), ht))
        return Var(name)

    def emit(self, s):
        self.out.append(s)

    def nested(self, thunk):
        """Run ``thunk`` collecting its statements; returns (stmts, value)."""
        saved, self.out = self.out, []
        v = thunk()
        stmts, self.out = self.out, saved
        return stmts, v

    def body(self, stmts, result):
        return ExprStmt(Let(tuple(self.locals), Block(tuple(stmts) + (Return(result),)), None, VOID))

    # -- expressions -----------------------------------------------------------

    def lower(self, e, env):
        p = e.production
        if p == "val":
            return Scalar(self.literal(e.type, e.v), e.type)
        if p == "var":
            name = str(e.sym)
            if name not in env:
                raise MhkError(f"unbound variable {name}")
            return env[name]
        if p == "app":
            return self.app(e, env)
        if p == "if":
            return self.if_(e, env)
        if p == "match":
            return self.match(e, env)
        if p in ("for", "summate"):
            if p == "summate" and self.helpers and not has_loop(e.body):
                return self.helper_call(e, env)
            return self.loops([(None, e)], env)[0]
        if p == "bucket":
            raise UnsupportedConstruct("bucket/reducer forms are not supported")
        raise MhkError(f"cannot lower {p}")

    def literal(self, t, v):
        if is_array_type(t):
            raise MhkError(f"array literal value {v!r}; use array-literal")
        ht = htype(t)
        if ht == F64:
            return FloatLit(float(v), F64)
        if ht == I1:
            return IntLit(1 if v else 0, I1)
        if isinstance(v, bool) or not isinstance(v, int):
            raise MhkError(f"{dumps(t) if isinstance(t, tuple) else t} literal must be an integer, got {v!r}")
        return IntLit(v, I64, signed=True)

    def scalar(self, e, env):
        v = self.lower(e, env)
        if not isinstance(v, Scalar):
            raise MhkError(f"expected a scalar, got an array from {e.production}")
        return v.expr

    def array(self, e, env):
        v = self.lower(e, env)
        if not isinstance(v, Arr):
            raise MhkError(f"expected an array, got a scalar from {e.production}")
        return v

    def app(self, e, env):
        op = op_of(e)
        if op is None:
            raise UnsupportedConstruct("only primitive (intrf) operators can be applied")
        t = e.type
        rands = e.rands
        if op in ("+", "-", "*", "/"):
            a, b = (self.scalar(r, env) for r in rands)
            real = htype(t) == F64
            if op == "/" and not real:
                raise UnsupportedConstruct("integer division is not part of the language")
            name = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[op]
            return Scalar(PrimOp(("f" + name) if real else name, (a, b)), t)
        if op in ("<", "<=", "=="):
            a, b = (self.scalar(r, env) for r in rands)
            if scalar_kind(type_of(rands[0])) == "real":
                cmp = {"<": "fcmp-olt", "<=": "fcmp-ole", "==": "fcmp-oeq"}[op]
            else:
                cmp = {"<": "icmp-slt", "<=": "icmp-sle", "==": "icmp-eq"}[op]
            return Scalar(PrimOp(cmp, (a, b)), t)
        if op == "neg":
            a = self.scalar(rands[0], env)
            if htype(t) == F64:
                return Scalar(PrimOp("fmul", (a, FloatLit(-1.0, F64))), t)
            return Scalar(PrimOp("sub", (_i64(0), a)), t)
        if op == "real":
            a = self.scalar(rands[0], env)
            return Scalar(Cast("si->fp", a, F64), t)
        if op in ("exp", "log", "sqrt"):
            a = self.scalar(rands[0], env)
            return Scalar(App(intrinsic(f"{op}.f64"), (a,)), t)
        if op == "index":
            arr = self.array(rands[0], env)
            i = self.scalar(rands[1], env)
            return Scalar(Load(Gep(arr.ptr, (i,))), t)
        if op == "size":
            return Scalar(self.array(rands[0], env).len, t)
        if op == "array-literal":
            elems = [self.scalar(r, env) for r in rands]
            ht = htype(elem_type(t))
            ptr = self.local("lit", PtrT(ht))
            self.emit(Set(ptr.name, _malloc(_i64(len(elems)), ht)))
            for k, x in enumerate(elems):
                self.emit(Store(x, Gep(ptr, (_i64(k),))))
            return Arr(ptr, _i64(len(elems)), t)
        if op == "constant-value-array":
            n = self.scalar(rands[0], env)
            content = self.scalar(rands[1], env)
            ht = htype(elem_type(t))
            ln = self.local("cva.len", I64)
            self.emit(Set(ln.name, n))
            self.emit(If(PrimOp("icmp-slt", (ln, _i64(0))), Set(ln.name, _i64(0)), Block(())))
            ptr = self.local("cva", PtrT(ht))
            self.emit(Set(ptr.name, _malloc(ln, ht)))
            k = self.local("k", I64)
            self.emit(Set(k.name, _i64(0)))
            self.emit(While(PrimOp("icmp-slt", (k, ln)),
                            Block((Store(content, Gep(ptr, (k,))),
                                   Set(k.name, PrimOp("add", (k, _i64(1))))))))
            return Arr(ptr, ln, t)
        raise UnsupportedConstruct(f"unknown primitive {op}")

    def if_(self, e, env):
        cond = self.scalar(e.tst, env)
        t = e.type
        if is_array_type(t):
            ht = htype(elem_type(t))
            ptr, ln = self.local("if", PtrT(ht)), self.local("if.len", I64)

            def arm(x):
                stmts, v = self.nested(lambda: self.array(x, env))
                return Block(tuple(stmts) + (Set(ptr.name, v.ptr), Set(ln.name, v.len)))

            self.emit(If(cond, arm(e.thn), arm(e.els)))
            return Arr(ptr, ln, t)
        r = self.local("if", htype(t))

        def arm(x):
            stmts, v = self.nested(lambda: self.scalar(x, env))
            return Block(tuple(stmts) + (Set(r.name, v),))

        self.emit(If(cond, arm(e.thn), arm(e.els)))
        return Scalar(r, t)

    def bind(self, name, v, env):
        if isinstance(v, Scalar) and not isinstance(v.expr, (Var, IntLit, FloatLit)):
            x = self.local(name, htype(v.mtype))
            self.emit(Set(x.name, v.expr))
            v = Scalar(x, v.mtype)
        return {**env, name: v}

    def match(self, e, env):
        parts = let_parts(e)
        if parts is None:
            raise UnsupportedConstruct("only single-variable match (let) is supported")
        if self.fuse:
            group, rest = self.fusable_chain(e)
            if len(group) > 1:
                values = self.loops(group, env)
                for (name, _), v in zip(group, values):
                    env = {**env, name: v}
                return self.lower(rest, env)
        name, rhs, body = parts
        env = self.bind(name, self.lower(rhs, env), env)
        return self.lower(body, env)

    # -- loops -----------------------------------------------------------------

    @staticmethod
    def fusable_chain(e):
        """Leading let-bound loops over the same atomic bounds that do not
        read each other's results; returns ``([(name, loop) ...], rest)``."""
        group, bound = [], set()
        key = None
        while True:
            parts = let_parts(e)
            if parts is None:
                break
            name, rhs, body = parts
            if rhs.production not in ("for", "summate") or not (is_atomic(rhs.lo) and is_atomic(rhs.hi)):
                break
            k = (rhs.lo, rhs.hi)
            if key is not None and k != key:
                break
            if free_vars(rhs) & bound:
                break
            key = k
            group.append((name, rhs))
            bound.add(name)
            e = body
        return group, e

    def loops(self, group, env):
        """One ``while`` over the shared bounds running every loop in ``group``."""
        first = group[0][1]
        lo = self.scalar(first.lo, env)
        hi = self.scalar(first.hi, env)
        lo_v, hi_v = self.local("lo", I64), self.local("hi", I64)
        self.emit(Set(lo_v.name, lo))
        self.emit(Set(hi_v.name, hi))
        i = self.local(str(first.i), I64)
        results = []
        for _, loop in group:
            t = loop.type
            if loop.production == "for":
                ht = htype(elem_type(t))
                ln = self.local("for.len", I64)
                out = self.local("for", PtrT(ht))
                self.emit(Set(ln.name, PrimOp("sub", (hi_v, lo_v))))
                self.emit(If(PrimOp("icmp-slt", (ln, _i64(0))), Set(ln.name, _i64(0)), Block(())))
                self.emit(Set(out.name, _malloc(ln, ht)))
                results.append(Arr(out, ln, t))
            else:
                acc = self.local("acc", htype(t))
                self.emit(Set(acc.name, _zero(htype(t))))
                results.append(Scalar(acc, t))

        def body():
            for (_, loop), res in zip(group, results):
                inner = {**env, str(loop.i): Scalar(i, type_of(loop.lo))}
                if loop.production == "for":
                    v = self.scalar(loop.body, inner)
                    self.emit(Store(v, Gep(res.ptr, (PrimOp("sub", (i, lo_v)),))))
                else:
                    v = self.scalar(loop.body, inner)
                    op = "fadd" if htype(loop.type) == F64 else "add"
                    self.emit(Set(res.expr.name, PrimOp(op, (res.expr, v))))
            self.emit(Set(i.name, PrimOp("add", (i, _i64(1)))))

        stmts, _ = self.nested(body)
        self.emit(Set(i.name, lo_v))
        self.emit(While(PrimOp("icmp-slt", (i, hi_v)), Block(tuple(stmts))))
        return results

    def helper_call(self, e, env):
        """Emit ``summate`` as a pure function of its free variables."""
        fv = sorted(free_vars(e))
        params, args, henv = [], [], {}
        for name in fv:
            v = env[name]
            if isinstance(v, Arr):
                p, pl = f"{name}", f"{name}.len"
                params += [(p, PtrT(v.elem_htype)), (pl, I64)]
                args += [v.ptr, v.len]
                henv[name] = Arr(Var(p), Var(pl), v.mtype)
            else:
                params.append((name, htype(v.mtype)))
                args.append(v.expr)
                henv[name] = Scalar(Var(name), v.mtype)
        fname = f"summate.{len(self.helper_fns)}"
        sub = _Lowerer(self.fuse, self.helpers, _Names({p for p, _ in params}), self.helper_fns)
        res = sub.loops([(None, e)], henv)[0]
        fn = function(fname, params, htype(e.type), sub.body(sub.out, res.expr), attrs={"pure"})
        self.helper_fns.append(fn)
        return Scalar(App(Defined(fname), tuple(args)), e.type)


def lower_program(program, fuse=True, helpers=True):
    """HIR module for an ANF program. The entry function is named after the
    program; an array result also stores its length in the ``result.len``
    global."""
    params, env, taken = [], {}, set()
    for name, t in program.params:
        if is_array_type(t):
            ht = htype(elem_type(t))
            params += [(name, PtrT(ht)), (f"{name}.len", I64)]
            env[name] = Arr(Var(name), Var(f"{name}.len"), t)
        else:
            params.append((name, htype(t)))
            env[name] = Scalar(Var(name), t)
    taken = {p for p, _ in params}
    if len(taken) != len(params):
        raise MhkError("parameter names collide after lowering")
    helper_fns = []
    names = _Names(taken)
    lw = _Lowerer(fuse, helpers, names, helper_fns)
    v = lw.lower(program.body, env)
    globals_ = []
    if isinstance(v, Arr):
        lw.emit(Store(v.len, Gep(GlobalRef(RESULT_LEN), (_i64(0),))))
        result, ret = v.ptr, PtrT(v.elem_htype)
        globals_.append(Global(RESULT_LEN, ArrayT(I64, 1)))
    else:
        result, ret = v.expr, htype(v.mtype)
    entry = function(program.name, params, ret, lw.body(lw.out, result))
    fns = [entry] + helper_fns
    nulls = {e.name: e.ty.elem for f in fns for e in all_exprs(f.body)
             if isinstance(e, GlobalRef) and e.name.startswith("null.")}
    for n in sorted(nulls):
        globals_.append(Global(n, ArrayT(nulls[n], 1)))
    return make_module(program.name, fns, globals_=tuple(globals_))
