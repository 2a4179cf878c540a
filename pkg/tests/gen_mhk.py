"""Random well-typed, in-bounds mini-Hakaru programs."""

import random

from dslkit.dsls.mhk.grammar import (BOOL, NAT, REAL, MhkProgram, app, array_t, for_, if_,
                                     index, let, size, summate, val, var)

RA = array_t(REAL)
REALS = (0.0, 1.0, -1.0, 0.5, 2.0, -2.5, 3.0, 0.25, 10.0)


class _Scope:
    def __init__(self):
        self.reals = []          # names of real variables
        self.nats = []           # names of nat variables
        self.arrays = {}         # array name -> length class
        self.sizes = {}          # nat var bound to the size of a class
        self.loops = {}          # loop index var -> class it ranges over

    def copy(self):
        s = _Scope()
        s.reals, s.nats = list(self.reals), list(self.nats)
        s.arrays, s.sizes, s.loops = dict(self.arrays), dict(self.sizes), dict(self.loops)
        return s


class MhkGen:
    def __init__(self, rng: random.Random, max_depth=4):
        self.rng = rng
        self.max_depth = max_depth
        self.k = 0

    def fresh(self, base):
        self.k += 1
        return f"{base}{self.k}"

    # -- arrays: (node, class) ------------------------------------------------

    def array(self, sc, d):
        r = self.rng.random()
        names = list(sc.arrays)
        if d <= 0 or r < 0.45:
            n = self.rng.choice(names)
            return var(RA, n), sc.arrays[n]
        if r < 0.75:
            src = self.rng.choice(names)
            cls = sc.arrays[src]
            i = self.fresh("i")
            inner = sc.copy()
            inner.loops[i] = cls
            inner.nats.append(i)
            return for_(i, val(NAT, 0), self.bound(sc, src), self.real(inner, d - 1), REAL), cls
        if r < 0.9:
            n = self.rng.randint(1, 6)
            return app(RA, "array-literal", *[self.real(sc, d - 1) for _ in range(n)]), f"lit{n}"
        src = self.rng.choice(names)
        return app(RA, "constant-value-array", size(var(RA, src)), self.real(sc, d - 1)), sc.arrays[src]

    def bound(self, sc, arr):
        """``size(arr)``, or a nat variable already bound to it."""
        cls = sc.arrays[arr]
        known = [n for n, c in sc.sizes.items() if c == cls]
        if known and self.rng.random() < 0.7:
            return var(NAT, self.rng.choice(known))
        return size(var(RA, arr))

    def safe_index(self, sc, cls):
        """An index valid for every array of ``cls``."""
        loops = [i for i, c in sc.loops.items() if c == cls]
        if loops and self.rng.random() < 0.8:
            return var(NAT, self.rng.choice(loops))
        return val(NAT, 0)

    # -- scalars ----------------------------------------------------------------

    def real(self, sc, d):
        rng = self.rng
        if d <= 0:
            return self.real_leaf(sc)
        r = rng.random()
        if r < 0.15:
            return self.real_leaf(sc)
        if r < 0.40:
            op = rng.choice(["+", "-", "*", "*", "+", "/"])
            return app(REAL, op, self.real(sc, d - 1), self.real(sc, d - 1))
        if r < 0.55:
            arr, cls = self.array(sc, d - 1)
            if arr.production == "var":
                return index(arr, self.safe_index(sc, cls))
            if arr.production == "app" and str(arr.rator.sym) == "array-literal" and rng.random() < 0.5:
                n = len(arr.rands)
                return index(arr, if_(NAT, self.boolean(sc, d - 1), val(NAT, rng.randrange(n)),
                                      val(NAT, rng.randrange(n))))
            return index(arr, val(NAT, 0))
        if r < 0.68:
            src = rng.choice(list(sc.arrays))
            j = self.fresh("j")
            inner = sc.copy()
            inner.loops[j] = sc.arrays[src]
            inner.nats.append(j)
            return summate(j, val(NAT, 0), self.bound(sc, src), self.real(inner, d - 1))
        if r < 0.78:
            return if_(REAL, self.boolean(sc, d - 1), self.real(sc, d - 1), self.real(sc, d - 1))
        if r < 0.90:
            return self.let_real(sc, d)
        if r < 0.95:
            return app(REAL, "real", self.nat(sc, d - 1))
        op = rng.choice(["neg", "exp", "sqrt", "log"])
        return app(REAL, op, self.real(sc, d - 1))

    def let_real(self, sc, d):
        """A let chain, sometimes of two loops over the same bound (fusable)."""
        rng = self.rng
        inner = sc.copy()
        if rng.random() < 0.5:
            src = rng.choice(list(sc.arrays))
            n = self.fresh("n")
            inner.nats.append(n)
            inner.sizes[n] = sc.arrays[src]
            body = self.fusable(inner, src, n, d - 1)
            return let(n, size(var(RA, src)), body)
        x = self.fresh("x")
        rhs = self.real(sc, d - 1)
        inner.reals.append(x)
        return let(x, rhs, self.real(inner, d - 1))

    def fusable(self, sc, src, n, d):
        cls = sc.arrays[src]
        names = []
        rhss = []
        for _ in range(self.rng.randint(1, 3)):
            i = self.fresh("i")
            inner = sc.copy()
            inner.loops[i] = cls
            inner.nats.append(i)
            names.append(self.fresh("s"))
            rhss.append(summate(i, val(NAT, 0), var(NAT, n), self.real(inner, max(d - 1, 0))))
        inner = sc.copy()
        inner.reals.extend(names)
        body = self.real(inner, max(d - 1, 0))
        for name, rhs in reversed(list(zip(names, rhss))):
            body = let(name, rhs, body)
        return body

    def real_leaf(self, sc):
        if sc.reals and self.rng.random() < 0.5:
            return var(REAL, self.rng.choice(sc.reals))
        return val(REAL, self.rng.choice(REALS))

    def nat(self, sc, d):
        rng = self.rng
        r = rng.random()
        if d <= 0 or r < 0.4:
            if sc.nats and rng.random() < 0.6:
                return var(NAT, rng.choice(sc.nats))
            return val(NAT, rng.randint(0, 5))
        if r < 0.6:
            return size(var(RA, rng.choice(list(sc.arrays))))
        return app(NAT, rng.choice(["+", "*", "-"]), self.nat(sc, d - 1), self.nat(sc, d - 1))

    def boolean(self, sc, d):
        if self.rng.random() < 0.7:
            return app(BOOL, self.rng.choice(["<", "<=", "=="]), self.real(sc, d - 1), self.real(sc, d - 1))
        return app(BOOL, self.rng.choice(["<", "<=", "=="]), self.nat(sc, d - 1), self.nat(sc, d - 1))

    # -- programs ---------------------------------------------------------------

    def program(self, name="rand"):
        sc = _Scope()
        sc.arrays = {"a": "a", "b": "b"}
        sc.reals = ["x"]
        d = self.max_depth
        if self.rng.random() < 0.3:
            body, _ = self.array(sc, d)
        else:
            body = self.real(sc, d)
        return MhkProgram(name, (("a", RA), ("b", RA), ("x", REAL)), body)

    def inputs(self):
        rng = self.rng
        return {"a": [rng.choice(REALS) + rng.randint(-3, 3) for _ in range(rng.randint(1, 32))],
                "b": [rng.uniform(-4, 4) for _ in range(rng.randint(1, 32))],
                "x": rng.choice(REALS)}
