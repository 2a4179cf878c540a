"""Random small HIR functions for differential testing.

``sub-nuw`` is never generated: it traps on wrap only at opt 0 by design.
Helper functions tagged ``pure`` use only non-trapping integer ops so the
tag is honest.
"""

import random

from dslkit.hir import build as b
from dslkit.hir.nodes import make_module
from dslkit.hir.types import F64, I64

INT_LITS = (0, 1, 2, 3, 7, 64, 255, 1 << 40, (1 << 64) - 1, (1 << 63), 12345)
FLOAT_LITS = (0.0, -0.0, 1.0, -1.5, 0.1, 3.25, 1e300, -7.0)
SAFE_INT_OPS = ("add", "sub", "mul", "and", "or", "xor")
INT_OPS = SAFE_INT_OPS + ("shl", "lshr", "ashr", "udiv", "sdiv", "urem", "srem")
FLOAT_OPS = ("fadd", "fsub", "fmul", "fdiv")
ICMPS = ("icmp-eq", "icmp-ne", "icmp-ult", "icmp-ule", "icmp-ugt", "icmp-slt", "icmp-sle")
FCMPS = ("fcmp-olt", "fcmp-ole", "fcmp-oeq")


class HirGen:
    def __init__(self, rng: random.Random, max_depth=3):
        self.rng = rng
        self.max_depth = max_depth
        self.ints = []
        self.floats = []
        self.helpers = []
        self.k = 0

    def fresh(self, base):
        self.k += 1
        return f"{base}{self.k}"

    def int_expr(self, d, safe=False):
        rng = self.rng
        if d <= 0 or rng.random() < 0.3:
            if self.ints and rng.random() < 0.6:
                return b.var(rng.choice(self.ints))
            return b.ui64(rng.choice(INT_LITS))
        r = rng.random()
        if r < 0.6 or safe:
            op = rng.choice(SAFE_INT_OPS if safe else INT_OPS)
            rhs = self.int_expr(d - 1, safe)
            if op in ("shl", "lshr", "ashr"):
                rhs = b.and_(rhs, b.ui64(63))
            elif op in ("udiv", "sdiv", "urem", "srem") and rng.random() < 0.8:
                rhs = b.or_(rhs, b.ui64(1))  # keep most divisions from trapping
            return b.primop(op, self.int_expr(d - 1, safe), rhs)
        if r < 0.72 and self.helpers:
            h = rng.choice(self.helpers)
            return b.app(h, self.int_expr(d - 1), self.int_expr(d - 1))
        if r < 0.85:
            return b.fp_to_si(self.float_expr(d - 1), I64)
        return b.let([(self.fresh("l"), self.int_expr(d - 1), I64)], b.svoid(), self.int_expr(d - 1))

    def float_expr(self, d):
        rng = self.rng
        if d <= 0 or rng.random() < 0.3:
            if self.floats and rng.random() < 0.6:
                return b.var(rng.choice(self.floats))
            return b.fl64(rng.choice(FLOAT_LITS))
        if rng.random() < 0.7:
            return b.primop(rng.choice(FLOAT_OPS), self.float_expr(d - 1), self.float_expr(d - 1))
        if rng.random() < 0.5:
            return b.si_to_fp(self.int_expr(d - 1), F64)
        return b.ri(rng.choice(("sqrt.f64", "round.f64", "trunc.f64")), self.float_expr(d - 1))

    def cond(self, d):
        if self.rng.random() < 0.7:
            return b.primop(self.rng.choice(ICMPS), self.int_expr(d), self.int_expr(d))
        return b.primop(self.rng.choice(FCMPS), self.float_expr(d), self.float_expr(d))

    def stmts(self, d, counters):
        rng = self.rng
        out = []
        for _ in range(rng.randint(1, 4)):
            r = rng.random()
            if r < 0.4 or d <= 0:
                if self.floats and rng.random() < 0.3:
                    out.append(b.set_(rng.choice(self.floats), self.float_expr(self.max_depth)))
                else:
                    out.append(b.set_(rng.choice(self.ints), self.int_expr(self.max_depth)))
            elif r < 0.6:
                out.append(b.if_(self.cond(2), b.block(*self.stmts(d - 1, counters)),
                                 b.block(*self.stmts(d - 1, counters))))
            elif r < 0.75:
                c = self.fresh("c")
                counters.append(c)
                n = rng.randint(0, 5)
                out.append(b.set_(c, b.ui64(0)))
                out.append(b.while_(b.icmp_ult(b.var(c), b.ui64(n)),
                                    *self.stmts(d - 1, counters),
                                    b.set_(c, b.add(b.var(c), b.ui64(1)))))
            elif r < 0.85:
                out.append(b.if_(self.cond(2), b.ret(self.int_expr(2))))
            else:
                cases = [(b.ui64(v), b.block(*self.stmts(d - 1, counters)))
                         for v in rng.sample(range(6), rng.randint(1, 3))]
                out.append(b.switch(b.and_(self.int_expr(1), b.ui64(7)), cases,
                                    b.block(*self.stmts(d - 1, counters))))
        return out

    def helper(self, name):
        saved, self.ints = self.ints, ["p", "q"]
        body = b.ret(self.int_expr(2, safe=True))
        self.ints = saved
        attrs = self.rng.choice([(), ("pure",), ("always-inline",), ("pure", "always-inline")])
        return b.function(name, [("p", I64), ("q", I64)], I64, body, attrs=attrs)

    def module(self, name="rand"):
        self.helpers = []
        fns = []
        for k in range(self.rng.randint(0, 2)):
            fns.append(self.helper(f"h{k}"))
            self.helpers.append(f"h{k}")
        self.ints, self.floats = ["x", "y"], ["z"]
        names = [self.fresh("v") for _ in range(2)]
        locals_ = [(v, self.int_expr(1), I64) for v in names]
        self.ints += names
        self.floats.append(self.fresh("w"))
        locals_ += [(self.floats[1], b.fl64(0.5), F64)]
        counters = []
        body = self.stmts(2, counters)
        locals_ += [(c, b.ui64(0), I64) for c in counters]
        main = b.function("f", [("x", I64), ("y", I64), ("z", F64)], I64,
                          b.expr_stmt(b.let(locals_, b.block(*body, b.ret(self.int_expr(self.max_depth))))))
        return make_module(name, fns + [main])

    def args(self):
        rng = self.rng
        return (rng.choice(INT_LITS + (rng.getrandbits(64),)), rng.randint(-3, 9),
                rng.choice(FLOAT_LITS + (rng.uniform(-100, 100),)))
