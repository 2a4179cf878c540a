"""Translate verified LIR functions into Python functions.

Each LIR block becomes a straight run of Python statements; control moves
through a ``while True`` dispatch on the block index. Counters are bumped
once per executed block with that block's static counts, so the totals equal
what a one-instruction-at-a-time interpreter would report. Allocas whose
address never escapes (only used as the pointer of loads and stores) live in
Python locals; their loads and stores are still counted.
"""

from __future__ import annotations

import math
from functools import partial

from .. import numerics
from ..hir.types import F32, SYM, IntT, PtrT
from ..layout import size_of
from ..lir import LFunction, successors
from .memory import NULL, MemTrap, zero_value

# stats slots
INSTRUCTIONS, LOADS, STORES, CALLS, BACK_EDGES, ALLOCATIONS = range(6)


def back_edges(fn: LFunction):
    """Retreating edges of a depth-first walk from the entry block."""
    succ = successors(fn)
    entry = fn.blocks[0].label
    out = set()
    on_stack, done = {entry}, set()
    stack = [(entry, iter(succ[entry]))]
    while stack:
        label, it = stack[-1]
        for t in it:
            if t not in succ:
                continue
            if t in on_stack:
                out.add((label, t))
            elif t not in done:
                on_stack.add(t)
                stack.append((t, iter(succ[t])))
                break
        else:
            stack.pop()
            on_stack.discard(label)
            done.add(label)
    return out


def _nuw(a, b, m):
    if b > a:
        raise numerics.ArithmeticTrap("nuw-overflow")
    return (a - b) & m


def _sdiv(a, b, w):
    return numerics.int_binop("sdiv", a, b, w)


def _srem(a, b, w):
    return numerics.int_binop("srem", a, b, w)


def _ashr(a, b, w):
    return numerics.int_binop("ashr", a, b, w)


def _gep(p, off):
    if off >= 1 << 63:
        off -= 1 << 64
    return (p[0], p[1] + off)


def _sext(a, fw, tw):
    return numerics.signed(a, fw) & ((1 << tw) - 1)


def _unreachable():
    raise MemTrap("unreachable")


def _fdiv32(a, b):
    return numerics.f32(numerics.fdiv(a, b))


def _frem32(a, b):
    return numerics.f32(numerics.frem(a, b))


BASE_NAMESPACE = {
    "F32": numerics.f32,
    "FDIV": numerics.fdiv,
    "FREM": numerics.frem,
    "FDIV32": _fdiv32,
    "FREM32": _frem32,
    "NUW": _nuw,
    "SDIV": _sdiv,
    "SREM": _srem,
    "ASHR": _ashr,
    "GEP": _gep,
    "SEXT": _sext,
    "SGN": numerics.signed,
    "UI2F32": numerics.int_to_f32,
    "F2I": numerics.float_to_int,
    "UNREACHABLE": _unreachable,
    "NULL": NULL,
    "INF": math.inf,
    "NAN": math.nan,
}


def _lit(v):
    if isinstance(v, bool):
        return repr(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "NAN"
        if math.isinf(v):
            return "INF" if v > 0 else "(-INF)"
        return repr(v)
    return repr(v)


class ModuleCodegen:
    """Shared state while generating all functions of one module: the
    namespace the generated code runs in and helper-name allocation."""

    def __init__(self, lmod, memory, host_fns, global_ptrs, check_nuw):
        self.lmod = lmod
        self.mem = memory
        self.host_fns = host_fns  # name -> callable taking/returning native values
        self.global_ptrs = global_ptrs
        self.check_nuw = check_nuw
        self.ns = dict(BASE_NAMESPACE)
        self.ns["ST"] = [0] * 6
        self.ns["ALLOC"] = memory.alloc
        self.ns["FREE"] = memory.free
        self.ns["RELEASE"] = self._release
        self.fn_names = {name: f"F{i}" for i, name in enumerate(lmod.functions)}
        self._helpers = {}
        self.linemaps = {}

    def _release(self, ptrs):
        bufs = self.mem.bufs
        for bid, _ in ptrs:
            bufs[bid] = None

    def helper(self, key, make):
        name = self._helpers.get(key)
        if name is None:
            name = f"H{len(self._helpers)}"
            self._helpers[key] = name
            self.ns[name] = make()
        return name

    def loader(self, t):
        return self.helper(("ld", t), lambda: self.mem.loader(t))

    def storer(self, t):
        return self.helper(("st", t), lambda: self.mem.storer(t))

    def const_name(self, key, value):
        return self.helper(("const", key), lambda: value)

    def generate(self):
        funcs = {}
        for name, fn in self.lmod.functions.items():
            src, linemap = FunctionCodegen(self, fn).source()
            filename = f"<dslkit {name}>"
            code = compile(src, filename, "exec")
            exec(code, self.ns)
            self.linemaps[filename] = (name, linemap)
            funcs[name] = self.ns[self.fn_names[name]]
        return funcs


class FunctionCodegen:
    def __init__(self, mc: ModuleCodegen, fn: LFunction):
        self.mc = mc
        self.fn = fn
        self.names = {}
        self.lines = []
        self.linemap = {}
        self.block_index = {b.label: i for i, b in enumerate(fn.blocks)}
        self.back = back_edges(fn)
        self.promoted = self._promotable()
        self.stack_allocas = any(i.op == "alloca" and i.dest not in self.promoted
                                 for b in fn.blocks for i in b.instrs)

    def _promotable(self):
        slots = {i.dest for b in self.fn.blocks for i in b.instrs if i.op == "alloca"}
        escaped = set()
        for b in self.fn.blocks:
            for ins in b.instrs + ((b.term,) if b.term else ()):
                for pos, a in enumerate(ins.args):
                    if a not in slots:
                        continue
                    if (ins.op == "load" and pos == 0) or (ins.op == "store" and pos == 1):
                        continue
                    escaped.add(a)
        return slots - escaped

    def v(self, reg):
        n = self.names.get(reg)
        if n is None:
            n = f"v{len(self.names)}"
            self.names[reg] = n
        return n

    def slot(self, reg):
        return "s" + self.v(reg)[1:]

    def emit(self, depth, text, coord=None):
        self.lines.append("    " * depth + text)
        if coord is not None:
            self.linemap[len(self.lines)] = coord

    def source(self):
        fn = self.fn
        params = ", ".join(self.v(r) for r, _ in fn.params)
        self.emit(0, f"def {self.mc.fn_names[fn.name]}({params}):")
        self.emit(1, "S = ST")
        if self.stack_allocas:
            self.emit(1, "stk = []")
        for b in fn.blocks:
            for ins in b.instrs:
                if ins.op == "alloca" and ins.dest in self.promoted:
                    self.emit(1, f"{self.slot(ins.dest)} = {_lit_zero(ins.attr[0])}")
        multi = len(fn.blocks) > 1
        self.block(fn.blocks[0], 1)
        if multi:
            self.emit(1, "while True:")
            for b in fn.blocks[1:]:
                self.emit(2, f"if b == {self.block_index[b.label]}:")
                self.block(b, 3)
                self.emit(3, "continue")
        return "\n".join(self.lines) + "\n", self.linemap

    def block(self, b, d):
        instrs = b.instrs + ((b.term,) if b.term is not None else ())
        n_load = sum(1 for i in instrs if i.op == "load")
        n_store = sum(1 for i in instrs if i.op == "store")
        n_call = sum(1 for i in instrs if i.op == "call")
        n_alloc = sum(1 for i in instrs if i.op == "alloca"
                      or (i.op == "call" and i.attr[0] == "intrinsic" and i.attr[1] == "malloc"))
        bumps = [f"S[{INSTRUCTIONS}] += {len(instrs)}"]
        for slot, n in ((LOADS, n_load), (STORES, n_store), (CALLS, n_call), (ALLOCATIONS, n_alloc)):
            if n:
                bumps.append(f"S[{slot}] += {n}")
        self.emit(d, "; ".join(bumps), (b.label, None))
        for idx, ins in enumerate(instrs):
            self.instr(ins, d, (b.label, idx), b.label)

    def jump(self, src, target, d, coord):
        k = self.block_index[target]
        if (src, target) in self.back:
            self.emit(d, f"b = {k}; S[{BACK_EDGES}] += 1", coord)
        else:
            self.emit(d, f"b = {k}", coord)

    def instr(self, ins, d, coord, label):
        op = ins.op
        mc = self.mc
        a = [self.v(r) if r not in self.promoted else None for r in ins.args]
        dest = self.v(ins.dest) if ins.dest else None
        if op == "alloca":
            if ins.dest in self.promoted:
                return
            tag = mc.const_name(("type", ins.attr[0]), ins.attr[0])
            self.emit(d, f"{dest} = ALLOC({size_of(ins.attr[0])}, {tag}); stk.append({dest})", coord)
        elif op == "load":
            if ins.args[0] in self.promoted:
                self.emit(d, f"{dest} = {self.slot(ins.args[0])}", coord)
            else:
                self.emit(d, f"{dest} = {mc.loader(ins.ty)}({a[0]})", coord)
        elif op == "store":
            if ins.args[1] in self.promoted:
                self.emit(d, f"{self.slot(ins.args[1])} = {a[0]}", coord)
            else:
                self.emit(d, f"{mc.storer(self.fn_type(ins.args[0]))}({a[0]}, {a[1]})", coord)
        elif op == "binop":
            self.emit(d, f"{dest} = {self.binop(ins.attr[0], ins.ty, a[0], a[1])}", coord)
        elif op == "cmp":
            self.emit(d, f"{dest} = {self.cmp(ins.attr[0], a[0], a[1], ins.args[0])}", coord)
        elif op == "cast":
            self.emit(d, f"{dest} = {self.cast(ins.attr[0], a[0], self.fn_type(ins.args[0]), ins.ty)}", coord)
        elif op == "gep":
            self.emit(d, f"{dest} = GEP({a[0]}, {a[1]})", coord)
        elif op == "const":
            self.emit(d, f"{dest} = {self.const(ins.ty, ins.attr[0])}", coord)
        elif op == "call":
            self.emit(d, self.call(ins, dest, a), coord)
        elif op == "ret":
            if self.stack_allocas:
                self.emit(d, "RELEASE(stk)", coord)
            self.emit(d, f"return {a[0]}" if a else "return None", coord)
        elif op == "br":
            self.jump(label, ins.attr[0], d, coord)
        elif op == "condbr":
            self.emit(d, f"if {a[0]}:", coord)
            self.jump(label, ins.attr[0], d + 1, coord)
            self.emit(d, "else:", coord)
            self.jump(label, ins.attr[1], d + 1, coord)
        elif op == "switch":
            table = {}
            for c, t in ins.attr[0]:
                key = self.mc.mem.intern(c) if isinstance(c, str) else c
                table[key] = self.block_index[t]
            name = mc.const_name(("switch", self.fn.name, label), table)
            default = self.block_index[ins.attr[1]]
            self.emit(d, f"b = {name}.get({a[0]}, {default})", coord)
            back = sorted(self.block_index[t] for s, t in self.back if s == label)
            if back:
                self.emit(d, f"if b in {tuple(back)!r}: S[{BACK_EDGES}] += 1", coord)
        elif op == "unreachable":
            self.emit(d, "UNREACHABLE()", coord)
        else:
            raise ValueError(f"unknown opcode {op}")

    def fn_type(self, reg):
        if not hasattr(self, "_types"):
            types = dict(self.fn.params)
            for b in self.fn.blocks:
                for i in b.instrs:
                    if i.dest:
                        types[i.dest] = i.ty
            self._types = types
        return self._types[reg]

    def const(self, ty, value):
        if ty == SYM:
            return repr(self.mc.mem.intern(value))
        if isinstance(ty, PtrT):
            return self.mc.const_name(("global", value), self.mc.global_ptrs[value])
        return _lit(value)

    def binop(self, op, ty, a, b):
        if isinstance(ty, IntT):
            w = ty.width
            m = (1 << w) - 1
            if op == "add":
                return f"({a} + {b}) & {m}"
            if op == "sub":
                return f"({a} - {b}) & {m}"
            if op == "sub-nuw":
                return f"NUW({a}, {b}, {m})" if self.mc.check_nuw else f"({a} - {b}) & {m}"
            if op == "mul":
                return f"({a} * {b}) & {m}"
            if op == "udiv":
                return f"{a} // {b}"
            if op == "urem":
                return f"{a} % {b}"
            if op == "sdiv":
                return f"SDIV({a}, {b}, {w})"
            if op == "srem":
                return f"SREM({a}, {b}, {w})"
            if op == "and":
                return f"{a} & {b}"
            if op == "or":
                return f"{a} | {b}"
            if op == "xor":
                return f"{a} ^ {b}"
            if op == "shl":
                return f"({a} << ({b} % {w})) & {m}"
            if op == "lshr":
                return f"{a} >> ({b} % {w})"
            if op == "ashr":
                return f"ASHR({a}, {b}, {w})"
        else:
            sym = {"fadd": "+", "fsub": "-", "fmul": "*"}.get(op)
            f32 = ty == F32
            if sym:
                return f"F32({a} {sym} {b})" if f32 else f"{a} {sym} {b}"
            if op == "fdiv":
                return f"{'FDIV32' if f32 else 'FDIV'}({a}, {b})"
            if op == "frem":
                return f"{'FREM32' if f32 else 'FREM'}({a}, {b})"
        raise ValueError(f"bad binop {op} on {ty}")

    def cmp(self, op, a, b, areg):
        rel = {"icmp-eq": "==", "icmp-ne": "!=", "icmp-ult": "<", "icmp-ule": "<=",
               "icmp-ugt": ">", "fcmp-olt": "<", "fcmp-ole": "<=", "fcmp-oeq": "=="}.get(op)
        if rel:
            return f"1 if {a} {rel} {b} else 0"
        t = self.fn_type(areg)
        sb = 1 << (t.width - 1)
        rel = {"icmp-slt": "<", "icmp-sle": "<="}[op]
        return f"1 if ({a} ^ {sb}) {rel} ({b} ^ {sb}) else 0"

    def cast(self, kind, a, src, dst):
        if kind == "ui->fp":
            return f"UI2F32({a})" if dst == F32 else f"float({a})"
        if kind == "si->fp":
            return f"UI2F32(SGN({a}, {src.width}))" if dst == F32 else f"float(SGN({a}, {src.width}))"
        if kind in ("fp->ui", "fp->si"):
            return f"F2I({a}, {dst.width})"
        if kind == "trunc":
            return f"{a} & {(1 << dst.width) - 1}"
        if kind == "zext" or kind == "ptrcast":
            return a
        if kind == "sext":
            return f"SEXT({a}, {src.width}, {dst.width})"
        if kind == "fpconv":
            return f"F32({a})" if dst == F32 else f"float({a})"
        raise ValueError(f"bad cast {kind}")

    def call(self, ins, dest, a):
        kind, name, fty = ins.attr
        mc = self.mc
        args = ", ".join(a)
        if kind == "defined":
            target = mc.fn_names[name]
        elif kind == "intrinsic":
            if name == "malloc":
                target = mc.helper(("malloc", fty.ret.elem),
                                   lambda: (lambda n, _a=mc.mem.alloc, _t=fty.ret.elem: _a(n, _t)))
            elif name == "free":
                target = "FREE"
            else:
                target = mc.helper(("intrinsic", name), lambda: partial(numerics.math_intrinsic, name))
        else:
            target = mc.helper(("host", name), lambda: mc.host_fns[name])
        text = f"{target}({args})"
        return f"{dest} = {text}" if dest else text


def _lit_zero(t):
    z = zero_value(t)
    if z is NULL:
        return "NULL"
    return _lit(z)

