"""Low-level IR: basic blocks of single-assignment register instructions over
stack slots, with a verifier, a text form and static metrics.

Registers are strings starting with ``%``. Every block holds a list of
non-terminator instructions followed by exactly one terminator.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .hir.intrinsics import intrinsic_accepts, is_intrinsic
from .hir.nodes import FLOAT_BINOPS, FLOAT_CMPS, INT_BINOPS, INT_CMPS, Global
from .hir.types import (BOOL, I1, SYM, VOID, FnT, PtrT, is_cond, is_float, is_int, is_ptr,
                        type_datum, type_from_datum)
from .sexpr import ParseError, Symbol, dumps, read_all

TERMINATORS = ("ret", "br", "condbr", "switch", "unreachable")
OPCODES = ("alloca", "load", "store", "binop", "cmp", "cast", "gep", "call", "const") + TERMINATORS
CALL_KINDS = ("defined", "intrinsic", "external", "host")


@dataclass(frozen=True)
class Instr:
    """One instruction.

    ``attr`` holds the opcode's static data:
    alloca ``(slot type, name hint)``; binop/cmp ``(op,)``; cast ``(kind,)``;
    call ``(kind, name, fnty)``; const ``(value,)``; br ``(target,)``;
    condbr ``(then, else)``; switch ``(((constant, target), ...), default)``.
    A ``const`` of pointer type holds a global's name.
    """

    op: str
    dest: str | None = None
    ty: object = None
    args: tuple = ()
    attr: tuple = ()

    @property
    def is_terminator(self):
        return self.op in TERMINATORS

    def targets(self):
        if self.op == "br":
            return (self.attr[0],)
        if self.op == "condbr":
            return tuple(self.attr)
        if self.op == "switch":
            return tuple(t for _, t in self.attr[0]) + (self.attr[1],)
        return ()


@dataclass(frozen=True)
class Block:
    label: str
    instrs: tuple
    term: Instr | None


@dataclass(frozen=True)
class LFunction:
    name: str
    params: tuple  # ((register, HType), ...)
    ret: object
    blocks: tuple
    attrs: frozenset = frozenset()

    @property
    def type(self):
        return FnT(tuple(t for _, t in self.params), self.ret)

    def block(self, label) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)


@dataclass(frozen=True)
class LModule:
    name: str
    functions: dict = field(default_factory=dict)
    globals: tuple = ()

    __hash__ = None

    def __getitem__(self, name) -> LFunction:
        return self.functions[name]


# -- verification -----------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    function: str
    block: str | None
    index: int | None
    kind: str
    message: str

    def __str__(self):
        where = self.function
        if self.block is not None:
            where += f"/{self.block}"
        if self.index is not None:
            where += f"#{self.index}"
        return f"{self.kind} at {where}: {self.message}"


class VerifyError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def successors(fn: LFunction):
    return {b.label: (b.term.targets() if b.term is not None else ()) for b in fn.blocks}


def predecessors(fn: LFunction):
    preds = {b.label: [] for b in fn.blocks}
    for b in fn.blocks:
        for t in b.term.targets() if b.term is not None else ():
            if t in preds and b.label not in preds[t]:
                preds[t].append(b.label)
    return preds


def reverse_postorder(fn: LFunction):
    succ = successors(fn)
    seen, order = set(), []
    if not fn.blocks:
        return order
    stack = [(fn.blocks[0].label, iter(succ[fn.blocks[0].label]))]
    seen.add(fn.blocks[0].label)
    while stack:
        label, it = stack[-1]
        for t in it:
            if t in succ and t not in seen:
                seen.add(t)
                stack.append((t, iter(succ[t])))
                break
        else:
            stack.pop()
            order.append(label)
    order.reverse()
    return order


def uses(ins: Instr):
    return ins.args


class _Verifier:
    def __init__(self, m: LModule, fn: LFunction):
        self.m, self.fn = m, fn
        self.diags = []
        self.types = {}

    def err(self, block, index, kind, msg):
        self.diags.append(Diagnostic(self.fn.name, block, index, kind, msg))

    def run(self):
        fn = self.fn
        if not fn.blocks:
            self.err(None, None, "EmptyFunction", "no blocks")
            return self.diags
        labels = [b.label for b in fn.blocks]
        for lab, n in Counter(labels).items():
            if n > 1:
                self.err(lab, None, "DuplicateBlock", f"label {lab} used {n} times")
        label_set = set(labels)
        for reg, ty in fn.params:
            if reg in self.types:
                self.err(None, None, "Redefinition", f"parameter {reg}")
            self.types[reg] = ty
        for b in fn.blocks:
            for i, ins in enumerate(b.instrs):
                if ins.is_terminator:
                    self.err(b.label, i, "MultipleTerminators", f"{ins.op} before end of block")
                self._define(b.label, i, ins)
            if b.term is None:
                self.err(b.label, None, "MissingTerminator", "block does not end in a terminator")
            elif not b.term.is_terminator:
                self.err(b.label, len(b.instrs), "MissingTerminator", f"{b.term.op} is not a terminator")
            else:
                for t in b.term.targets():
                    if t not in label_set:
                        self.err(b.label, len(b.instrs), "UnknownTarget", f"branch to {t}")
                    if t == fn.blocks[0].label:
                        self.err(b.label, len(b.instrs), "EntryHasPredecessors", f"branch to entry {t}")
        self._dataflow()
        for b in fn.blocks:
            for i, ins in enumerate(self._all(b)):
                self._typecheck(b.label, i, ins)
        return self.diags

    def _all(self, b):
        return b.instrs + ((b.term,) if b.term is not None else ())

    def _define(self, label, i, ins):
        if ins.dest is None:
            return
        if ins.dest in self.types:
            self.err(label, i, "Redefinition", f"{ins.dest} assigned more than once")
        self.types[ins.dest] = ins.ty

    def _dataflow(self):
        fn = self.fn
        universe = frozenset(self.types)
        params = frozenset(r for r, _ in fn.params)
        preds = predecessors(fn)
        order = reverse_postorder(fn)
        reachable = set(order)
        defs = {b.label: frozenset(x.dest for x in b.instrs if x.dest) for b in fn.blocks}
        out = {b.label: universe for b in fn.blocks}
        entry = fn.blocks[0].label
        changed = True
        while changed:
            changed = False
            for label in order:
                if label == entry:
                    inn = params
                else:
                    inn = universe
                    for p in preds[label]:
                        if p in reachable:
                            inn = inn & out[p]
                new = inn | defs[label]
                if new != out[label]:
                    out[label] = new
                    changed = True
        for b in fn.blocks:
            if b.label not in reachable:
                continue
            if b.label == entry:
                have = set(params)
            else:
                have = set(universe)
                for p in preds[b.label]:
                    if p in reachable:
                        have &= out[p]
            for i, ins in enumerate(self._all(b)):
                for a in ins.args:
                    if a not in self.types:
                        self.err(b.label, i, "UndefinedRegister", f"{a} is never defined")
                    elif a not in have:
                        self.err(b.label, i, "UseBeforeDef", f"{a} may be used before definition")
                if ins.dest:
                    have.add(ins.dest)

    def _ty(self, r):
        return self.types.get(r)

    def _typecheck(self, label, i, ins):
        def bad(msg):
            self.err(label, i, "TypeMismatch", f"{ins.op}: {msg}")

        a = [self._ty(r) for r in ins.args]
        if any(t is None for t in a):
            return  # reported by dataflow
        op = ins.op
        if op == "alloca":
            if ins.ty != PtrT(ins.attr[0]):
                bad(f"alloca of {ins.attr[0]} typed {ins.ty}")
        elif op == "load":
            if len(a) != 1 or not is_ptr(a[0]) or a[0].elem != ins.ty:
                bad(f"load of {ins.ty} from {a}")
        elif op == "store":
            if len(a) != 2 or not is_ptr(a[1]) or a[1].elem != a[0]:
                bad(f"store of {a[0] if a else None} to {a[1] if len(a) > 1 else None}")
        elif op == "binop":
            o = ins.attr[0]
            kind_ok = (o in INT_BINOPS and is_int(ins.ty)) or (o in FLOAT_BINOPS and is_float(ins.ty))
            if not kind_ok or len(a) != 2 or a[0] != ins.ty or a[1] != ins.ty:
                bad(f"{o} over {a} -> {ins.ty}")
        elif op == "cmp":
            o = ins.attr[0]
            if len(a) != 2 or a[0] != a[1] or ins.ty != I1:
                bad(f"{o} over {a}")
            elif o in FLOAT_CMPS and not is_float(a[0]):
                bad(f"{o} over {a[0]}")
            elif o in INT_CMPS and not (is_int(a[0]) or a[0] in (SYM, BOOL) or is_ptr(a[0])):
                bad(f"{o} over {a[0]}")
        elif op == "cast":
            src, dst, k = a[0] if a else None, ins.ty, ins.attr[0]
            ok = {
                "ui->fp": is_int(src) and is_float(dst),
                "si->fp": is_int(src) and is_float(dst),
                "fp->ui": is_float(src) and is_int(dst),
                "fp->si": is_float(src) and is_int(dst),
                "trunc": is_int(src) and is_int(dst) and dst.width <= src.width,
                "zext": is_int(src) and is_int(dst) and dst.width >= src.width,
                "sext": is_int(src) and is_int(dst) and dst.width >= src.width,
                "ptrcast": is_ptr(src) and is_ptr(dst),
                "fpconv": is_float(src) and is_float(dst),
            }.get(k, False)
            if not ok:
                bad(f"{k} from {src} to {dst}")
        elif op == "gep":
            if len(a) != 2 or not is_ptr(a[0]) or not is_int(a[1]) or not is_ptr(ins.ty):
                bad(f"gep over {a}")
        elif op == "call":
            kind, name, fty = ins.attr
            if kind == "defined":
                callee = self.m.functions.get(name)
                if callee is None:
                    self.err(label, i, "UnknownCallee", name)
                    return
                if callee.type != fty:
                    bad(f"call of {name} with signature {fty}, declared {callee.type}")
            elif kind == "intrinsic" and not (is_intrinsic(name) and intrinsic_accepts(name, fty)):
                bad(f"bad intrinsic {name} {fty}")
            if tuple(a) != tuple(fty.params) or ins.ty != fty.ret:
                bad(f"{name} applied to {a}")
            if (ins.dest is None) != (fty.ret == VOID):
                bad(f"{name}: result register does not match return type")
        elif op == "const":
            if ins.dest is None:
                bad("const without destination")
        elif op == "ret":
            if self.fn.ret == VOID:
                if a:
                    bad("value returned from void function")
            elif len(a) != 1 or a[0] != self.fn.ret:
                bad(f"returns {a}, declared {self.fn.ret}")
        elif op == "condbr":
            if len(a) != 1 or not is_cond(a[0]):
                bad(f"condition of type {a}")
        elif op == "switch":
            keys = [c for c, _ in ins.attr[0]]
            if len(set(keys)) != len(keys):
                self.err(label, i, "DuplicateCase", "switch constants not distinct")
        elif op not in ("br", "unreachable"):
            self.err(label, i, "UnknownOpcode", op)


def verify(m: LModule):
    """Return a list of ``Diagnostic``; empty means the module is well formed."""
    diags = []
    for name in m.functions:
        diags.extend(_Verifier(m, m.functions[name]).run())
    return diags


def verify_function(m: LModule, fn: LFunction):
    return _Verifier(m, fn).run()


def check(m: LModule) -> LModule:
    diags = verify(m)
    if diags:
        raise VerifyError(diags)
    return m


# -- metrics ----------------------------------------------------------------------


def function_instr_count(fn: LFunction) -> Counter:
    c = Counter()
    for b in fn.blocks:
        for ins in b.instrs:
            c[ins.op] += 1
            c["total"] += 1
            if ins.op in ("binop", "cmp", "cast"):
                c[ins.attr[0]] += 1
        if b.term is not None:
            c[b.term.op] += 1
            c["terminators"] += 1
    c["blocks"] += len(fn.blocks)
    return c


def static_instr_count(m) -> dict:
    """Opcode histogram; ``total`` counts non-terminator instructions,
    ``terminators`` the block terminators. Binop/cmp/cast also count under
    their operator name (``mul``, ``icmp-ult``, ``zext``...)."""
    fns = m.functions.values() if isinstance(m, LModule) else [m]
    c = Counter({"total": 0, "terminators": 0})
    for f in fns:
        c.update(function_instr_count(f))
    return dict(c)


def size(m) -> int:
    c = static_instr_count(m)
    return c["total"] + c["terminators"]


# -- text form --------------------------------------------------------------------

S = Symbol


def _const_datum(ty, v):
    if ty == SYM:
        return [S("quote"), S(v)]
    if is_ptr(ty):
        return [S("global"), S(v)]
    return v


def _inner(ins: Instr):
    op, at, args = ins.op, ins.attr, [S(a) for a in ins.args]
    if op == "alloca":
        return [S(op), type_datum(at[0]), S(at[1])]
    if op in ("binop", "cmp", "cast"):
        return [S(op), S(at[0])] + args
    if op == "call":
        return [S(op), S(at[0]), S(at[1]), type_datum(at[2])] + args
    if op == "const":
        return [S(op), _const_datum(ins.ty, at[0])]
    if op == "br":
        return [S(op), S(at[0])]
    if op == "condbr":
        return [S(op)] + args + [S(at[0]), S(at[1])]
    if op == "switch":
        cases = [[[S("quote"), S(c)] if isinstance(c, str) else c, S(t)] for c, t in at[0]]
        return [S(op)] + args + [cases, S(at[1])]
    return [S(op)] + args


def instr_datum(ins: Instr):
    inner = _inner(ins)
    if ins.dest is None:
        return inner
    return [S(ins.dest), type_datum(ins.ty), inner]


def function_datum(fn: LFunction):
    out = [S("function"), S(fn.name), [[S(r), type_datum(t)] for r, t in fn.params],
           type_datum(fn.ret), [S(a) for a in sorted(fn.attrs)]]
    for b in fn.blocks:
        out.append([S("block"), S(b.label)] + [instr_datum(i) for i in b.instrs]
                   + ([instr_datum(b.term)] if b.term is not None else []))
    return out


def dump_text(m: LModule) -> str:
    lines = [f"(module {m.name}"]
    for g in m.globals:
        init = [] if g.init is None else [list(g.init)]
        lines.append("  " + dumps([S("global"), S(g.name), type_datum(g.ty)] + init))
    for name in m.functions:
        fn = m.functions[name]
        head = function_datum(fn)[:5]
        lines.append("  " + dumps(head)[:-1])
        for b in fn.blocks:
            lines.append(f"    (block {b.label}")
            for ins in b.instrs + ((b.term,) if b.term is not None else ()):
                lines.append("      " + dumps(instr_datum(ins)))
            lines[-1] += ")"
        lines[-1] += ")"
    return "\n".join(lines) + ")\n"


def dump_function(fn: LFunction) -> str:
    return dump_text(LModule(fn.name, {fn.name: fn}))


class LirParseError(ParseError):
    pass


def _parse_const(ty, d, where):
    if isinstance(d, list):
        if len(d) == 2 and d[0] in ("quote", "global"):
            return str(d[1])
        raise LirParseError(f"bad constant {dumps(d)} in {where}")
    return d


def _regs(xs, where):
    for x in xs:
        if not isinstance(x, Symbol) or not x.startswith("%"):
            raise LirParseError(f"expected register, got {x!r} in {where}")
    return tuple(str(x) for x in xs)


def _parse_inner(d, dest, ty, where):
    if not isinstance(d, list) or not d or not isinstance(d[0], Symbol):
        raise LirParseError(f"bad instruction {d!r} in {where}")
    op, rest = str(d[0]), d[1:]
    try:
        if op == "alloca":
            return Instr(op, dest, ty, (), (type_from_datum(rest[0]), str(rest[1])))
        if op in ("binop", "cmp", "cast"):
            return Instr(op, dest, ty, _regs(rest[1:], where), (str(rest[0]),))
        if op == "call":
            fty = type_from_datum(rest[2])
            return Instr(op, dest, fty.ret, _regs(rest[3:], where), (str(rest[0]), str(rest[1]), fty))
        if op == "const":
            return Instr(op, dest, ty, (), (_parse_const(ty, rest[0], where),))
        if op == "br":
            return Instr(op, attr=(str(rest[0]),))
        if op == "condbr":
            return Instr(op, args=_regs(rest[:1], where), attr=(str(rest[1]), str(rest[2])))
        if op == "switch":
            cases = tuple((_parse_const(None, c, where), str(t)) for c, t in rest[1])
            return Instr(op, args=_regs(rest[:1], where), attr=(cases, str(rest[2])))
        if op in ("load", "store", "gep", "ret", "unreachable"):
            return Instr(op, dest, ty, _regs(rest, where))
    except (IndexError, ValueError, TypeError) as e:
        raise LirParseError(f"malformed {op} in {where}: {e}") from None
    raise LirParseError(f"unknown opcode {op} in {where}")


def _parse_instr(d, where):
    if isinstance(d, list) and len(d) == 3 and isinstance(d[0], Symbol) and d[0].startswith("%"):
        try:
            ty = type_from_datum(d[1])
        except ValueError as e:
            raise LirParseError(f"{e} in {where}") from None
        return _parse_inner(d[2], str(d[0]), ty, where)
    ins = _parse_inner(d, None, None, where)
    return ins


def parse_text(text: str) -> LModule:
    data = read_all(text)
    if len(data) != 1 or not isinstance(data[0], list) or not data[0] or data[0][0] != "module":
        raise LirParseError("expected a single (module ...) form")
    d = data[0]
    if len(d) < 2:
        raise LirParseError("module needs a name")
    name = str(d[1])
    globals_, funcs = [], {}
    for item in d[2:]:
        if not isinstance(item, list) or not item:
            raise LirParseError(f"unexpected {item!r} in module {name}")
        if item[0] == "global":
            init = tuple(item[3]) if len(item) > 3 else None
            globals_.append(Global(str(item[1]), type_from_datum(item[2]), init))
            continue
        if item[0] != "function" or len(item) < 5:
            raise LirParseError(f"unexpected form {dumps(item)[:40]} in module {name}")
        fname = str(item[1])
        try:
            params = tuple((str(r), type_from_datum(t)) for r, t in item[2])
            ret = type_from_datum(item[3])
        except (ValueError, TypeError) as e:
            raise LirParseError(f"bad signature of {fname}: {e}") from None
        attrs = frozenset(str(a) for a in item[4])
        blocks = []
        for bd in item[5:]:
            if not isinstance(bd, list) or len(bd) < 2 or bd[0] != "block":
                raise LirParseError(f"expected block in {fname}")
            label = str(bd[1])
            ins = [_parse_instr(x, f"{fname}/{label}") for x in bd[2:]]
            term = None
            if ins and ins[-1].is_terminator:
                term = ins.pop()
            blocks.append(Block(label, tuple(ins), term))
        funcs[fname] = LFunction(fname, params, ret, tuple(blocks), attrs)
    return LModule(name, funcs, tuple(globals_))
