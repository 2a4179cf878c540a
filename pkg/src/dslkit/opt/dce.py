"""Dead-code elimination.

HIR: statements after a terminator, pure expression statements, unused pure
``let`` bindings, and always-inline functions nothing calls any more.
LIR: unreachable blocks, unused pure results, empty forwarding blocks and
single-predecessor ``br`` chains. Stores and calls to anything not tagged
``pure`` are never removed.
"""

from __future__ import annotations

from dataclasses import replace

from ..hir.intrinsics import PURE_INTRINSICS
from ..hir.nodes import (App, Block, Defined, ExprStmt, HFunction, If, Jump, Label, Let, Set,
                         SVoid, Switch, Var)
from ..hir.typecheck import terminates
from ..lir import Block as LBlock
from ..lir import Instr, LFunction, predecessors, reverse_postorder
from .hirutil import (all_exprs, bound_vars_expr, bound_vars_stmt, contains_labels, free_vars,
                      free_vars_stmt, is_pure, map_expr, map_stmt, set_vars, substitute,
                      substitute_expr, walk_stmts)


class _HirDce:
    def __init__(self, module):
        self.module = module

    def expr(self, e):
        e = map_expr(e, self.expr, self.stmt)
        if isinstance(e, Let):
            used = free_vars_stmt(e.body) | (free_vars(e.result) if e.result is not None else set())
            kept = tuple(b for b in e.bindings if b[0] in used or not is_pure(b[1], self.module))
            body, result = e.body, e.result
            # copy propagation: (let ((p q)) ...) with neither assigned nor rebound
            assigned = set_vars(body) | bound_vars_stmt(body) | {n for n, _, _ in e.bindings}
            if result is not None:
                assigned |= bound_vars_expr(result)
            copies = {n: i for n, i, _ in kept
                      if isinstance(i, Var) and n not in set_vars(body)
                      and (i.name == n or i.name not in assigned)}
            if copies:
                kept = tuple(b for b in kept if b[0] not in copies)
                body = substitute(body, copies)
                result = None if result is None else substitute_expr(result, copies)
            # (let (... (r 0)) (block ... (set! r v)) r)  =>  (let (...) (block ...) v)
            last = body.stmts[-1] if isinstance(body, Block) else body
            if (isinstance(result, Var) and isinstance(last, Set) and last.name == result.name
                    and any(n == last.name for n, _, _ in kept)):
                body = Block(body.stmts[:-1]) if isinstance(body, Block) else SVoid()
                result = last.value
                if last.name not in free_vars_stmt(body) | free_vars(result):
                    kept = tuple(b for b in kept if b[0] != last.name or not is_pure(b[1], self.module))
                body = self.stmt(body)
            if not kept and isinstance(body, SVoid) and result is not None:
                return result
            e = replace(e, bindings=kept, body=body, result=result)
        return e

    def stmt(self, s):
        s = map_stmt(s, self.expr, self.stmt)
        if isinstance(s, ExprStmt):
            e = s.expr
            if isinstance(e, Let) and e.result is None and not e.bindings:
                return e.body
            if is_pure(e, self.module):
                return SVoid()
            return s
        if isinstance(s, Block):
            out = []
            stmts = s.stmts
            # a jump straight to the label that follows it is a fall-through
            stmts = tuple(x for i, x in enumerate(stmts)
                          if not (isinstance(x, Jump) and i + 1 < len(stmts)
                                  and isinstance(stmts[i + 1], Label) and stmts[i + 1].name == x.name))
            for i, x in enumerate(stmts):
                if isinstance(x, Block):
                    out.extend(x.stmts)
                elif not isinstance(x, SVoid):
                    out.append(x)
                if terminates(x):
                    rest = stmts[i + 1:]
                    if any(contains_labels(r) for r in rest):
                        out.extend(rest)
                    break
            if not out:
                return SVoid()
            return out[0] if len(out) == 1 else Block(tuple(out))
        if isinstance(s, Label) and s.name not in self.targets:
            return s.body
        if isinstance(s, If):
            if isinstance(s.then, SVoid) and isinstance(s.else_, SVoid) and is_pure(s.cond, self.module):
                return SVoid()
        if isinstance(s, Switch):
            if (all(isinstance(b, SVoid) for _, b in s.cases) and isinstance(s.default, SVoid)
                    and is_pure(s.scrutinee, self.module)):
                return SVoid()
        return s

    def function(self, fn: HFunction) -> HFunction:
        cur = fn
        for _ in range(16):
            self.targets = {x.name for x in walk_stmts(cur.body) if isinstance(x, Jump)}
            nxt = replace(cur, body=self.stmt(cur.body))
            if nxt == cur:
                break
            cur = nxt
        return cur


def dce_function(fn: HFunction, module=None) -> HFunction:
    return _HirDce(module).function(fn)


def callees(fn: HFunction) -> set:
    return {e.rator.name for e in all_exprs(fn.body)
            if isinstance(e, App) and isinstance(e.rator, Defined)}


def drop_dead_inline_functions(m):
    """Remove always-inline functions unreachable from any other function."""
    roots = [n for n, f in m.functions.items() if "always-inline" not in f.attrs]
    seen, work = set(roots), list(roots)
    while work:
        for c in callees(m.functions[work.pop()]):
            if c in m.functions and c not in seen:
                seen.add(c)
                work.append(c)
    return m.with_functions({n: f for n, f in m.functions.items() if n in seen})


def dce_hir(m):
    m = m.with_functions({n: dce_function(f, m) for n, f in m.functions.items()})
    return drop_dead_inline_functions(m)


# -- LIR ------------------------------------------------------------------------

_DIVS = ("udiv", "sdiv", "urem", "srem", "sub-nuw")


def _removable(ins, consts, slots, pure_fns):
    op = ins.op
    if op in ("const", "cmp", "cast", "gep", "alloca"):
        return True
    if op == "binop":
        o = ins.attr[0]
        if o == "sub-nuw":
            return False
        if o in _DIVS:
            d = consts.get(ins.args[1])
            return d is not None and d != 0
        return True
    if op == "load":
        return ins.args[0] in slots
    if op == "call":
        kind, name = ins.attr[0], ins.attr[1]
        return (kind == "intrinsic" and name in PURE_INTRINSICS) or (kind == "defined" and name in pure_fns)
    return False


def local_slots(fn: LFunction) -> set:
    """Allocas used only as the pointer operand of loads and stores."""
    allocas = {i.dest for b in fn.blocks for i in b.instrs if i.op == "alloca"}
    for b in fn.blocks:
        for i in b.instrs:
            args = i.args
            if i.op == "load":
                continue
            if i.op == "store":
                args = args[:1]
            for a in args:
                allocas.discard(a)
        if b.term is not None:
            for a in b.term.args:
                allocas.discard(a)
    return allocas


def _remove_unreachable(fn):
    live = set(reverse_postorder(fn))
    return replace(fn, blocks=tuple(b for b in fn.blocks if b.label in live))


def _retarget(term, mapping):
    if term.op == "br":
        return replace(term, attr=(mapping.get(term.attr[0], term.attr[0]),))
    if term.op == "condbr":
        t, e = (mapping.get(x, x) for x in term.attr)
        if t == e:
            return Instr("br", attr=(t,))
        return replace(term, attr=(t, e))
    if term.op == "switch":
        cases, default = term.attr
        return replace(term, attr=(tuple((c, mapping.get(t, t)) for c, t in cases),
                                   mapping.get(default, default)))
    return term


def _thread_empty(fn):
    entry = fn.blocks[0].label
    forward = {}
    for b in fn.blocks:
        if b.label != entry and not b.instrs and b.term.op == "br" and b.term.attr[0] != b.label:
            forward[b.label] = b.term.attr[0]
    if not forward:
        return fn

    def final(t):
        seen = set()
        while t in forward and t not in seen:
            seen.add(t)
            t = forward[t]
        return t

    mapping = {k: final(k) for k in forward}
    # a forwarding cycle (an empty infinite loop) must keep one block
    mapping = {k: v for k, v in mapping.items() if v not in forward}
    blocks = [replace(b, term=_retarget(b.term, mapping)) for b in fn.blocks]
    return replace(fn, blocks=tuple(blocks))


def _merge_chains(fn):
    changed = True
    while changed:
        changed = False
        preds = predecessors(fn)
        by = {b.label: b for b in fn.blocks}
        entry = fn.blocks[0].label
        for b in fn.blocks:
            if b.term.op != "br":
                continue
            t = b.term.attr[0]
            if t == b.label or t == entry or preds.get(t) != [b.label]:
                continue
            nxt = by[t]
            merged = LBlock(b.label, b.instrs + nxt.instrs, nxt.term)
            fn = replace(fn, blocks=tuple(merged if x.label == b.label else x
                                          for x in fn.blocks if x.label != t))
            changed = True
            break
    return fn


def _remove_unused(fn, pure_fns):
    slots = local_slots(fn)
    consts = {i.dest: i.attr[0] for b in fn.blocks for i in b.instrs if i.op == "const"}
    changed = True
    blocks = list(fn.blocks)
    while changed:
        changed = False
        uses = {}
        for b in blocks:
            for i in b.instrs:
                for a in i.args:
                    uses[a] = uses.get(a, 0) + 1
            for a in b.term.args:
                uses[a] = uses.get(a, 0) + 1
        # stores into a slot nothing ever loads are dead as well
        loaded = {i.args[0] for b in blocks for i in b.instrs if i.op == "load"}
        new = []
        for b in blocks:
            keep = []
            for i in b.instrs:
                if i.op == "store" and i.args[1] in slots and i.args[1] not in loaded:
                    changed = True
                    continue
                if i.dest is not None and not uses.get(i.dest) and _removable(i, consts, slots, pure_fns):
                    changed = True
                    continue
                keep.append(i)
            new.append(LBlock(b.label, tuple(keep), b.term))
        blocks = new
    return replace(fn, blocks=tuple(blocks))


def dce_lir_function(fn: LFunction, pure_fns=frozenset()) -> LFunction:
    cur = fn
    for _ in range(32):
        nxt = _remove_unreachable(cur)
        nxt = _thread_empty(nxt)
        nxt = _remove_unreachable(nxt)
        nxt = _merge_chains(nxt)
        nxt = _remove_unused(nxt, pure_fns)
        if nxt == cur:
            break
        cur = nxt
    return cur


def pure_functions(lm) -> frozenset:
    return frozenset(n for n, f in lm.functions.items() if "pure" in f.attrs)


def dce_lir(lm):
    pure = pure_functions(lm)
    return replace(lm, functions={n: dce_lir_function(f, pure) for n, f in lm.functions.items()})
