"""Lowering of typed HIR into LIR basic blocks.

Every parameter and ``Let`` binding gets a stack slot allocated in the entry
block; variables are read with loads and written with stores, so no phi
nodes are ever needed. Structured control flow becomes named blocks:
``<fn>.<construct>.<k>`` for generated ones, user labels verbatim.
"""

from __future__ import annotations

from .hir.nodes import (App, Block, BoolLit, Cast, Defined, ExprStmt, External, FloatLit, Gep,
                        GlobalRef, HFunction, HModule, Host, If, IntLit, Intrinsic, Jump, Label,
                        Let, Load, PrimOp, Return, Set, Store, SVoid, Switch, SymLit, Var, While)
from .hir.nodes import FLOAT_CMPS, INT_CMPS
from .hir.typecheck import collect_labels
from .hir.types import I64, VOID, ArrayT, PtrT, StructT
from .layout import elem_stride, layout_of, size_of  # noqa: F401  (re-exported)
from .lir import Block as LBlock
from .lir import Instr, LFunction, LModule

ENTRY = "entry"


class InternalError(Exception):
    pass


class LoweringContext:
    def __init__(self, module: HModule, fn: HFunction):
        self.m = module
        self.fn = fn
        self.regs = 0
        self.counter = 0
        self.allocas = []
        self.blocks = []
        self.cur = ENTRY
        self.code = []
        self.dead = False
        self.order = {ENTRY: 0}
        self.user_labels = {}
        for name in collect_labels(fn.body):
            if name == ENTRY:
                raise InternalError(f"{fn.name}: label name {ENTRY!r} is reserved")
            self.user_labels[name] = name

    # registers and blocks
    def reg(self):
        r = f"%{self.regs}"
        self.regs += 1
        return r

    def new_label(self, construct):
        k = self.counter
        self.counter += 1
        return f"{self.fn.name}.{construct}.{k}"

    def emit(self, op, ty=None, args=(), attr=(), dest=True):
        self.ensure_block()
        d = self.reg() if dest else None
        self.code.append(Instr(op, d, ty, tuple(args), tuple(attr)))
        return d

    def terminate(self, op, args=(), attr=()):
        self.ensure_block()
        self.blocks.append(LBlock(self.cur, tuple(self.code), Instr(op, None, None, tuple(args), tuple(attr))))
        self.code = []
        self.cur = None

    def start(self, label, dead=False):
        if self.cur is not None:
            self.terminate("br", attr=(label,))
        self.cur = label
        self.dead = dead
        self.order.setdefault(label, len(self.order))

    def ensure_block(self):
        """Statements after a terminator go into a fresh (unreachable) block."""
        if self.cur is None:
            self.cur = self.new_label("dead")
            self.dead = True
            self.order.setdefault(self.cur, len(self.order))

    def slot(self, name, ty):
        d = self.reg()
        self.allocas.append(Instr("alloca", d, PtrT(ty), (), (ty, name)))
        return d

    # expressions
    def expr(self, e, env):
        self.ensure_block()
        if isinstance(e, Var):
            slot, ty = env[e.name]
            return self.emit("load", ty, (slot,))
        if isinstance(e, IntLit):
            return self.emit("const", e.ty, attr=(e.value,))
        if isinstance(e, FloatLit):
            return self.emit("const", e.ty, attr=(e.value,))
        if isinstance(e, SymLit):
            return self.emit("const", e.ty, attr=(e.text,))
        if isinstance(e, BoolLit):
            return self.emit("const", e.ty, attr=(e.value,))
        if isinstance(e, GlobalRef):
            return self.emit("const", e.ty, attr=(e.name,))
        if isinstance(e, PrimOp):
            a = self.expr(e.args[0], env)
            b = self.expr(e.args[1], env)
            op = "cmp" if e.op in INT_CMPS or e.op in FLOAT_CMPS else "binop"
            return self.emit(op, e.ty, (a, b), (e.op,))
        if isinstance(e, App):
            args = [self.expr(a, env) for a in e.args]
            r = e.rator
            if isinstance(r, Defined):
                attr = ("defined", r.name, self.m.functions[r.name].type)
            else:
                kind = {Intrinsic: "intrinsic", External: "external", Host: "host"}[type(r)]
                attr = (kind, r.name, r.ty)
            return self.emit("call", e.ty, args, attr, dest=e.ty != VOID)
        if isinstance(e, Let):
            vals = [self.expr(init, env) for _, init, _ in e.bindings]
            inner = dict(env)
            for (name, _, ty), v in zip(e.bindings, vals):
                s = self.slot(name, ty)
                self.ensure_block()
                self.emit("store", None, (v, s), dest=False)
                inner[name] = (s, ty)
            self.stmt(e.body, inner)
            if e.result is None:
                return None
            return self.expr(e.result, inner)
        if isinstance(e, Gep):
            return self.gep(e, env)
        if isinstance(e, Load):
            a = self.expr(e.addr, env)
            return self.emit("load", e.ty, (a,))
        if isinstance(e, Cast):
            a = self.expr(e.arg, env)
            return self.emit("cast", e.ty, (a,), (e.kind,))
        raise InternalError(f"cannot lower {e!r}")

    def index64(self, i, env):
        r = self.expr(i, env)
        if i.ty != I64:
            kind = "sext" if isinstance(i, IntLit) and i.signed else "zext"
            r = self.emit("cast", I64, (r,), (kind,))
        return r

    def gep(self, e, env):
        base = self.expr(e.base, env)
        const_off = 0
        dyn = []  # (register, stride)
        t = e.base.ty.elem
        for k, i in enumerate(e.indices):
            if k == 0:
                stride = elem_stride(t)
            elif isinstance(t, ArrayT):
                t = t.elem
                stride = size_of(t)
            elif isinstance(t, StructT):
                const_off += layout_of(t).offsets[i.value]
                t = t.fields[i.value][1]
                continue
            else:
                raise InternalError(f"gep into {t}")
            if isinstance(i, IntLit):
                v = i.value - (1 << i.ty.width) if i.signed and i.value >> (i.ty.width - 1) else i.value
                const_off += v * stride
            else:
                dyn.append((self.index64(i, env), stride))
        off = None
        for r, stride in dyn:
            if stride != 1:
                s = self.emit("const", I64, attr=(stride,))
                r = self.emit("binop", I64, (r, s), ("mul",))
            off = r if off is None else self.emit("binop", I64, (off, r), ("add",))
        if const_off or off is None:
            c = self.emit("const", I64, attr=(const_off & (2**64 - 1),))
            off = c if off is None else self.emit("binop", I64, (off, c), ("add",))
        return self.emit("gep", e.ty, (base, off))

    # statements
    def stmt(self, s, env):
        if isinstance(s, Block):
            for x in s.stmts:
                self.stmt(x, env)
        elif isinstance(s, ExprStmt):
            self.expr(s.expr, env)
        elif isinstance(s, SVoid):
            pass
        elif isinstance(s, Return):
            self.ensure_block()
            if s.value is None:
                self.terminate("ret")
            else:
                self.terminate("ret", (self.expr(s.value, env),))
        elif isinstance(s, Set):
            v = self.expr(s.value, env)
            self.emit("store", None, (v, env[s.name][0]), dest=False)
        elif isinstance(s, Store):
            v = self.expr(s.value, env)
            a = self.expr(s.addr, env)
            self.emit("store", None, (v, a), dest=False)
        elif isinstance(s, While):
            header, body, exit_ = (self.new_label(c) for c in ("while-header", "while-body", "while-exit"))
            self.start(header)
            c = self.expr(s.cond, env)
            self.terminate("condbr", (c,), (body, exit_))
            self.start(body)
            self.stmt(s.body, env)
            if self.cur is not None:
                self.terminate("br", attr=(header,))
            self.start(exit_)
        elif isinstance(s, If):
            self.if_(s, env)
        elif isinstance(s, Switch):
            self.switch(s, env)
        elif isinstance(s, Label):
            self.start(self.user_labels[s.name])
            self.stmt(s.body, env)
        elif isinstance(s, Jump):
            self.ensure_block()
            self.terminate("br", attr=(self.user_labels[s.name],))
        else:
            raise InternalError(f"cannot lower {s!r}")

    def if_(self, s, env):
        c = self.expr(s.cond, env)
        then = self.new_label("then")
        has_else = not isinstance(s.else_, SVoid)
        else_ = self.new_label("else") if has_else else None
        join = None
        if not has_else:
            join = self.new_label("join")
        self.terminate("condbr", (c,), (then, else_ or join))
        ends = []
        self.start(then)
        self.stmt(s.then, env)
        ends.append(self.pending())
        if has_else:
            self.start(else_)
            self.stmt(s.else_, env)
            ends.append(self.pending())
        if join is None and any(ends):
            join = self.new_label("join")
        self.close(ends, join)

    def pending(self):
        """Detach the current open block (if control can fall out of it)."""
        if self.cur is None:
            return None
        b = (self.cur, self.code)
        self.cur, self.code = None, []
        return b

    def close(self, ends, join):
        for end in ends:
            if end is not None:
                label, code = end
                self.blocks.append(LBlock(label, tuple(code), Instr("br", attr=(join,))))
        if join is not None:
            self.start(join)

    def switch(self, s, env):
        v = self.expr(s.scrutinee, env)
        labels = [self.new_label("case") for _ in s.cases]
        default = self.new_label("default")
        consts = []
        for const, _ in s.cases:
            consts.append(const.text if isinstance(const, SymLit) else const.value)
        # cases with identical bodies (typical after inlining) share one block
        first = {}
        for i, (_, body) in enumerate(s.cases):
            first.setdefault(body, i)
        labels = [labels[first[body]] for _, body in s.cases]
        self.terminate("switch", (v,), (tuple(zip(consts, labels)), default))
        ends = []
        for i, (_, body) in enumerate(s.cases):
            if first[body] != i:
                continue
            self.start(labels[i])
            self.stmt(body, env)
            ends.append(self.pending())
        self.start(default)
        self.stmt(s.default, env)
        ends.append(self.pending())
        join = self.new_label("switch-exit") if any(ends) else None
        self.close(ends, join)

    def run(self) -> LFunction:
        fn = self.fn
        params = tuple((f"%{n}", t) for n, t in fn.params)
        env = {}
        stores = []
        for (n, t), (r, _) in zip(fn.params, params):
            s = self.slot(n, t)
            stores.append(Instr("store", None, None, (r, s)))
            env[n] = (s, t)
        self.stmt(fn.body, env)
        if self.cur is not None:
            if self.dead and not self.code and self.cur != ENTRY:
                self.cur = None
            else:
                self.terminate("ret" if fn.ret == VOID else "unreachable")
        blocks = sorted(self.blocks, key=lambda b: self.order[b.label])
        entry = blocks[0]
        blocks[0] = LBlock(entry.label, tuple(self.allocas) + tuple(stores) + entry.instrs, entry.term)
        return LFunction(fn.name, params, fn.ret, tuple(blocks), fn.attrs)


def lower_function(m: HModule, fn: HFunction) -> LFunction:
    return LoweringContext(m, fn).run()


def lower_module(m: HModule) -> LModule:
    """Lower a typechecked module."""
    return LModule(m.name, {name: lower_function(m, f) for name, f in m.functions.items()},
                   tuple(m.globals))
