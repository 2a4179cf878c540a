"""Static checking of HIR modules. Returns a module whose expressions all
carry their resolved type."""

from __future__ import annotations

from dataclasses import replace

from .intrinsics import intrinsic_accepts, is_intrinsic
from .nodes import (FLOAT_BINOPS, FLOAT_CMPS, INT_BINOPS, INT_CMPS, App, Block, BoolLit,
                    Cast, Defined, ExprStmt, External, FloatLit, Gep, GlobalRef, HFunction,
                    HirError, HModule, Host, If, IntLit, Intrinsic, Jump, Label, Let, Load,
                    PrimOp, Return, Set, Store, SVoid, Switch, SymLit, Var, While)
from .types import (I1, VOID, ArrayT, PtrT, StructT, is_cond, is_float, is_int,
                    is_ptr, is_scalar)
from .types import BOOL, SYM


class TypeMismatch(HirError):
    def __init__(self, site, expected, found):
        self.site, self.expected, self.found = site, expected, found
        super().__init__(f"{site}: expected {expected}, found {found}")


class UnboundVariable(HirError):
    pass


class UnresolvedLabel(HirError):
    pass


class MissingReturn(HirError):
    pass


class UnknownIntrinsic(HirError):
    pass


class UnknownFunction(HirError):
    pass


class DuplicateCase(HirError):
    pass


class DuplicateLabel(HirError):
    pass


class TypecheckError(HirError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{type(e).__name__}: {e}" for e in self.errors))

    def kinds(self):
        return [type(e).__name__ for e in self.errors]


def _site(fn, node):
    text = repr(node)
    return f"{fn}: {text if len(text) < 80 else text[:77] + '...'}"


def terminates(s) -> bool:
    """True when control can never fall off the end of ``s``."""
    if isinstance(s, (Return, Jump)):
        return True
    if isinstance(s, Block):
        return any(terminates(x) for x in s.stmts)
    if isinstance(s, If):
        return terminates(s.then) and terminates(s.else_)
    if isinstance(s, Switch):
        return terminates(s.default) and all(terminates(b) for _, b in s.cases)
    if isinstance(s, Label):
        return terminates(s.body)
    if isinstance(s, ExprStmt) and isinstance(s.expr, Let):
        return terminates(s.expr.body)
    if isinstance(s, While):
        c = s.cond
        return (isinstance(c, BoolLit) and c.value) or (isinstance(c, IntLit) and c.ty == I1 and c.value == 1)
    return False


def collect_labels(s, out=None):
    out = [] if out is None else out
    if isinstance(s, Label):
        out.append(s.name)
        collect_labels(s.body, out)
    elif isinstance(s, Block):
        for x in s.stmts:
            collect_labels(x, out)
    elif isinstance(s, If):
        _labels_in_expr(s.cond, out)
        collect_labels(s.then, out)
        collect_labels(s.else_, out)
    elif isinstance(s, While):
        _labels_in_expr(s.cond, out)
        collect_labels(s.body, out)
    elif isinstance(s, Switch):
        _labels_in_expr(s.scrutinee, out)
        for _, b in s.cases:
            collect_labels(b, out)
        collect_labels(s.default, out)
    elif isinstance(s, ExprStmt):
        _labels_in_expr(s.expr, out)
    elif isinstance(s, (Return, Set)):
        if s.value is not None:
            _labels_in_expr(s.value, out)
    elif isinstance(s, Store):
        _labels_in_expr(s.value, out)
        _labels_in_expr(s.addr, out)
    return out


def _labels_in_expr(e, out):
    if isinstance(e, Let):
        for _, init, _ in e.bindings:
            _labels_in_expr(init, out)
        collect_labels(e.body, out)
        if e.result is not None:
            _labels_in_expr(e.result, out)
    elif isinstance(e, (App, PrimOp)):
        for a in e.args:
            _labels_in_expr(a, out)
    elif isinstance(e, Gep):
        _labels_in_expr(e.base, out)
        for a in e.indices:
            _labels_in_expr(a, out)
    elif isinstance(e, (Load, Cast)):
        _labels_in_expr(e.addr if isinstance(e, Load) else e.arg, out)


class _Checker:
    def __init__(self, module: HModule, fn: HFunction):
        self.m = module
        self.fn = fn
        self.errors = []
        self.labels = set()

    def fail(self, err):
        raise err

    def expect(self, node, expected, found):
        if expected != found:
            raise TypeMismatch(_site(self.fn.name, node), expected, found)

    # expressions
    def expr(self, e, env):
        if isinstance(e, Var):
            if e.name not in env:
                raise UnboundVariable(f"{self.fn.name}: {e.name}")
            return replace(e, ty=env[e.name])
        if isinstance(e, (IntLit, FloatLit, SymLit, BoolLit)):
            return e
        if isinstance(e, GlobalRef):
            try:
                g = self.m.global_named(e.name)
            except KeyError:
                raise UnboundVariable(f"{self.fn.name}: global {e.name}") from None
            elem = g.ty.elem if isinstance(g.ty, ArrayT) else g.ty
            return replace(e, ty=PtrT(elem))
        if isinstance(e, PrimOp):
            return self.primop(e, env)
        if isinstance(e, App):
            return self.app(e, env)
        if isinstance(e, Let):
            return self.let(e, env)
        if isinstance(e, Gep):
            return self.gep(e, env)
        if isinstance(e, Load):
            addr = self.expr(e.addr, env)
            if not is_ptr(addr.ty) or not is_scalar(addr.ty.elem):
                raise TypeMismatch(_site(self.fn.name, e), "pointer to scalar", addr.ty)
            return replace(e, addr=addr, ty=addr.ty.elem)
        if isinstance(e, Cast):
            return self.cast(e, env)
        raise HirError(f"{self.fn.name}: not an expression: {e!r}")

    def primop(self, e, env):
        args = tuple(self.expr(a, env) for a in e.args)
        if len(args) != 2:
            raise TypeMismatch(_site(self.fn.name, e), "2 operands", len(args))
        a, b = args
        op = e.op
        if op in INT_BINOPS:
            if not is_int(a.ty):
                raise TypeMismatch(_site(self.fn.name, e), "integer", a.ty)
            self.expect(e, a.ty, b.ty)
            ty = a.ty
        elif op in FLOAT_BINOPS:
            if not is_float(a.ty):
                raise TypeMismatch(_site(self.fn.name, e), "float", a.ty)
            self.expect(e, a.ty, b.ty)
            ty = a.ty
        elif op in INT_CMPS:
            ok = is_int(a.ty) or (op in ("icmp-eq", "icmp-ne") and (a.ty in (SYM, BOOL) or is_ptr(a.ty)))
            if not ok:
                raise TypeMismatch(_site(self.fn.name, e), "integer", a.ty)
            self.expect(e, a.ty, b.ty)
            ty = I1
        elif op in FLOAT_CMPS:
            if not is_float(a.ty):
                raise TypeMismatch(_site(self.fn.name, e), "float", a.ty)
            self.expect(e, a.ty, b.ty)
            ty = I1
        else:
            raise TypeMismatch(_site(self.fn.name, e), "known primitive", op)
        return replace(e, args=args, ty=ty)

    def app(self, e, env):
        args = tuple(self.expr(a, env) for a in e.args)
        r = e.rator
        if isinstance(r, Defined):
            if r.name not in self.m.functions:
                raise UnknownFunction(f"{self.fn.name}: {r.name}")
            fty = self.m.functions[r.name].type
        elif isinstance(r, Intrinsic):
            if not is_intrinsic(r.name):
                raise UnknownIntrinsic(r.name)
            if not intrinsic_accepts(r.name, r.ty):
                raise TypeMismatch(_site(self.fn.name, e), f"signature of {r.name}", r.ty)
            fty = r.ty
        elif isinstance(r, (External, Host)):
            fty = r.ty
        else:
            raise HirError(f"bad rator {r!r}")
        if len(args) != len(fty.params):
            raise TypeMismatch(_site(self.fn.name, e), f"{len(fty.params)} arguments", len(args))
        for a, pt in zip(args, fty.params):
            self.expect(e, pt, a.ty)
        return replace(e, args=args, ty=fty.ret)

    def let(self, e, env):
        bindings = []
        for name, init, ty in e.bindings:
            init = self.expr(init, env)
            self.expect(e, ty, init.ty)
            bindings.append((name, init, ty))
        inner = dict(env)
        for name, _, ty in bindings:
            inner[name] = ty
        body = self.stmt(e.body, inner)
        result = None if e.result is None else self.expr(e.result, inner)
        return replace(e, bindings=tuple(bindings), body=body, result=result,
                       ty=VOID if result is None else result.ty)

    def gep(self, e, env):
        base = self.expr(e.base, env)
        if not is_ptr(base.ty):
            raise TypeMismatch(_site(self.fn.name, e), "pointer", base.ty)
        idx = []
        t = base.ty.elem
        for k, i in enumerate(e.indices):
            i = self.expr(i, env)
            if not is_int(i.ty):
                raise TypeMismatch(_site(self.fn.name, e), "integer index", i.ty)
            idx.append(i)
            if k == 0:
                continue
            if isinstance(t, ArrayT):
                t = t.elem
            elif isinstance(t, StructT):
                if not isinstance(i, IntLit) or i.value >= len(t.fields):
                    raise TypeMismatch(_site(self.fn.name, e), "constant field index", i)
                t = t.fields[i.value][1]
            else:
                raise TypeMismatch(_site(self.fn.name, e), "aggregate", t)
        return replace(e, base=base, indices=tuple(idx), ty=PtrT(t))

    def cast(self, e, env):
        arg = self.expr(e.arg, env)
        k, src, dst = e.kind, arg.ty, e.ty
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
            raise TypeMismatch(_site(self.fn.name, e), f"operand valid for {k} to {dst}", src)
        return replace(e, arg=arg)

    # statements
    def stmt(self, s, env):
        if isinstance(s, Block):
            out = []
            for x in s.stmts:
                try:
                    out.append(self.stmt(x, env))
                except HirError as err:
                    if isinstance(err, TypecheckError):
                        raise
                    self.errors.append(err)
                    out.append(x)
            return replace(s, stmts=tuple(out))
        if isinstance(s, ExprStmt):
            return replace(s, expr=self.expr(s.expr, env))
        if isinstance(s, SVoid):
            return s
        if isinstance(s, Return):
            if s.value is None:
                self.expect(s, self.fn.ret, VOID)
                return s
            v = self.expr(s.value, env)
            self.expect(s, self.fn.ret, v.ty)
            return replace(s, value=v)
        if isinstance(s, While):
            c = self.expr(s.cond, env)
            if not is_cond(c.ty):
                raise TypeMismatch(_site(self.fn.name, s), "i1 or bool condition", c.ty)
            return replace(s, cond=c, body=self.stmt(s.body, env))
        if isinstance(s, If):
            c = self.expr(s.cond, env)
            if not is_cond(c.ty):
                raise TypeMismatch(_site(self.fn.name, s), "i1 or bool condition", c.ty)
            return replace(s, cond=c, then=self.stmt(s.then, env), else_=self.stmt(s.else_, env))
        if isinstance(s, Set):
            if s.name not in env:
                raise UnboundVariable(f"{self.fn.name}: set! of {s.name}")
            v = self.expr(s.value, env)
            self.expect(s, env[s.name], v.ty)
            return replace(s, value=v)
        if isinstance(s, Store):
            v = self.expr(s.value, env)
            a = self.expr(s.addr, env)
            if not is_ptr(a.ty):
                raise TypeMismatch(_site(self.fn.name, s), "pointer", a.ty)
            self.expect(s, a.ty.elem, v.ty)
            return replace(s, value=v, addr=a)
        if isinstance(s, Switch):
            return self.switch(s, env)
        if isinstance(s, Label):
            return replace(s, body=self.stmt(s.body, env))
        if isinstance(s, Jump):
            if s.name not in self.labels:
                raise UnresolvedLabel(f"{self.fn.name}: {s.name}")
            return s
        raise HirError(f"{self.fn.name}: not a statement: {s!r}")

    def switch(self, s, env):
        scrut = self.expr(s.scrutinee, env)
        if not (is_int(scrut.ty) or scrut.ty in (SYM, BOOL)):
            raise TypeMismatch(_site(self.fn.name, s), "integer, sym or bool scrutinee", scrut.ty)
        seen = set()
        cases = []
        for const, body in s.cases:
            if not isinstance(const, (IntLit, SymLit, BoolLit)):
                raise TypeMismatch(_site(self.fn.name, s), "constant case", const)
            self.expect(s, scrut.ty, const.ty)
            key = const.text if isinstance(const, SymLit) else const.value
            if key in seen:
                raise DuplicateCase(f"{self.fn.name}: case {key!r}")
            seen.add(key)
            cases.append((const, self.stmt(body, env)))
        return replace(s, scrutinee=scrut, cases=tuple(cases), default=self.stmt(s.default, env))

    def run(self):
        fn = self.fn
        labels = collect_labels(fn.body)
        dup = {l for l in labels if labels.count(l) > 1}
        for l in sorted(dup):
            self.errors.append(DuplicateLabel(f"{fn.name}: {l}"))
        self.labels = set(labels)
        env = dict(fn.params)
        try:
            body = self.stmt(fn.body, env)
        except HirError as err:
            self.errors.append(err)
            body = fn.body
        if fn.ret != VOID and not terminates(fn.body):
            self.errors.append(MissingReturn(fn.name))
        return replace(fn, body=body)


def typecheck_function(m: HModule, fn: HFunction) -> HFunction:
    c = _Checker(m, fn)
    out = c.run()
    if c.errors:
        raise TypecheckError(c.errors)
    return out


def typecheck_module(m: HModule) -> HModule:
    """Type-annotate every function; raise ``TypecheckError`` listing all problems."""
    errors = []
    funcs = {}
    for name, fn in m.functions.items():
        c = _Checker(m, fn)
        funcs[name] = c.run()
        errors.extend(c.errors)
    if errors:
        raise TypecheckError(errors)
    return m.with_functions(funcs)
