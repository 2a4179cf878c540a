"""Load/store elimination on LIR.

Works over extended basic blocks: a block with a single predecessor starts
from the facts its predecessor ended with. Allocas whose address never
escapes (see :func:`dce.local_slots`) cannot be touched by calls or by
stores through other pointers, so their facts survive both. Facts about any
other pointer are dropped at every call and every store through a
non-slot pointer.

* store v -> p; load p      : the load becomes v
* load p; load p            : the second load becomes the first
* store p; store p (same block, no load of p between): the first is dead
"""

from __future__ import annotations

from dataclasses import replace

from ..hir.intrinsics import PURE_INTRINSICS
from ..lir import Block, LFunction, predecessors, reverse_postorder
from .dce import local_slots


def _resolve(alias, r):
    while r in alias:
        r = alias[r]
    return r


def lse_function(fn: LFunction) -> LFunction:
    if not fn.blocks:
        return fn
    slots = local_slots(fn)
    types = dict(fn.params)
    for b in fn.blocks:
        for i in b.instrs:
            if i.dest:
                types[i.dest] = i.ty
    preds = predecessors(fn)
    by = {b.label: b for b in fn.blocks}
    out_state = {}
    alias = {}
    new_blocks = {}
    for label in reverse_postorder(fn):
        b = by[label]
        p = preds[label]
        state = dict(out_state[p[0]]) if len(p) == 1 and p[0] in out_state else {}
        pending = {}  # slot -> index in `instrs` of a store not yet read
        instrs = []
        for ins in b.instrs:
            ins = replace(ins, args=tuple(_resolve(alias, a) for a in ins.args))
            if ins.op == "store":
                v, ptr = ins.args
                if ptr in slots:
                    if ptr in pending:
                        instrs[pending[ptr]] = None
                    pending[ptr] = len(instrs)
                else:
                    state = {k: x for k, x in state.items() if k in slots}
                state[ptr] = v
                instrs.append(ins)
                continue
            if ins.op == "load":
                ptr = ins.args[0]
                pending.pop(ptr, None)
                known = state.get(ptr)
                if known is not None and types.get(known) == ins.ty:
                    alias[ins.dest] = known
                    continue
                state[ptr] = ins.dest
                instrs.append(ins)
                continue
            if ins.op == "call" and not (ins.attr[0] == "intrinsic" and ins.attr[1] in PURE_INTRINSICS):
                state = {k: x for k, x in state.items() if k in slots}
            instrs.append(ins)
        term = b.term
        if term is not None:
            term = replace(term, args=tuple(_resolve(alias, a) for a in term.args))
        new_blocks[label] = Block(label, tuple(i for i in instrs if i is not None), term)
        out_state[label] = state
    blocks = []
    for b in fn.blocks:
        nb = new_blocks.get(b.label, b)
        # blocks that came before a later alias was introduced need a final rename
        blocks.append(Block(nb.label,
                            tuple(replace(i, args=tuple(_resolve(alias, a) for a in i.args)) for i in nb.instrs),
                            nb.term if nb.term is None else replace(
                                nb.term, args=tuple(_resolve(alias, a) for a in nb.term.args))))
    return replace(fn, blocks=tuple(blocks))


def load_store_elim(lm):
    return replace(lm, functions={n: lse_function(f) for n, f in lm.functions.items()})
