"""A-normal form: operands of ``app``, the test of ``if`` and loop bounds
become variables or literals, with the nested computations bound by
single-variable matches placed just outside the node that needs them."""

from __future__ import annotations

from ...astdef import map_children
from .grammar import all_names, is_atomic, let, type_of, var


class _Fresh:
    def __init__(self, taken):
        self.taken = set(taken)
        self.k = 0

    def __call__(self):
        while f"t{self.k}" in self.taken:
            self.k += 1
        name = f"t{self.k}"
        self.taken.add(name)
        return name


def _wrap(bindings, core):
    for name, rhs in reversed(bindings):
        core = let(name, rhs, core)
    return core


def anf(e, fresh=None):
    fresh = fresh or _Fresh(all_names(e))

    def atomize(x, bindings):
        x = norm(x)
        if is_atomic(x):
            return x
        name = fresh()
        bindings.append((name, x))
        return var(type_of(x), name)

    def norm(x):
        p = x.production
        if p == "app":
            bs = []
            rands = tuple(atomize(r, bs) for r in x.rands)
            return _wrap(bs, x.replace(rands=rands))
        if p == "if":
            bs = []
            tst = atomize(x.tst, bs)
            return _wrap(bs, x.replace(tst=tst, thn=norm(x.thn), els=norm(x.els)))
        if p in ("for", "summate"):
            bs = []
            lo = atomize(x.lo, bs)
            hi = atomize(x.hi, bs)
            return _wrap(bs, x.replace(lo=lo, hi=hi, body=norm(x.body)))
        if p in ("match", "branch", "bucket"):
            return map_children({"expr": norm}, x)
        return x

    return norm(e)


def is_anf(e) -> bool:
    p = e.production
    if p == "app" and not all(is_atomic(r) for r in e.rands):
        return False
    if p == "if" and not is_atomic(e.tst):
        return False
    if p in ("for", "summate") and not (is_atomic(e.lo) and is_atomic(e.hi)):
        return False
    from ...astdef import children
    return all(is_anf(c) for c in children(e) if c.group == "expr")
