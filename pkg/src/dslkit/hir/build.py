"""Builders for HIR: a generic tag-based constructor for generator code and
short named helpers for writing IR by hand.

    >>> add1(Var("pos"))
    PrimOp(op='add', args=(Var(name='pos', ty=None), IntLit(value=1, ty=i64, signed=False)), ty=None)
"""

from __future__ import annotations

from .intrinsics import intrinsic_type
from .nodes import (CAST_KINDS, PRIMOPS, App, Block, BoolLit, Cast, Defined, DuplicateParam,
                    ExprStmt, External, FloatLit, Gep, GlobalRef, HExpr, HFunction, HStmt, Host,
                    If, IntLit, Intrinsic, Jump, Label, Let, Load, PrimOp, Return, Set,
                    ShapeError, Store, SVoid, Switch, SymLit, Var, While)
from .types import F32, F64, I8, I16, I32, I64, FnT, HType, IntT


def _expr(x, what="expression"):
    if not isinstance(x, HExpr):
        raise ShapeError(f"expected an HIR {what}, got {x!r}")
    return x


def _stmt(x):
    if isinstance(x, HExpr):
        return ExprStmt(x)
    if not isinstance(x, HStmt):
        raise ShapeError(f"expected an HIR statement, got {x!r}")
    return x


# -- literals ---------------------------------------------------------------------


def ui64(v):
    return IntLit(v, I64, False)


def si64(v):
    return IntLit(v, I64, True)


def ui32(v):
    return IntLit(v, I32, False)


def si32(v):
    return IntLit(v, I32, True)


def ui16(v):
    return IntLit(v, I16, False)


def ui8(v):
    return IntLit(v, I8, False)


def int_lit(v, ty: HType = I64, signed=False):
    return IntLit(v, ty, signed)


def fl32(v):
    return FloatLit(v, F32)


def fl64(v):
    return FloatLit(v, F64)


def sym(text):
    return SymLit(str(text))


def rkt_bool(v):
    return BoolLit(bool(v))


TRUE = BoolLit(True)
FALSE = BoolLit(False)


# -- expressions ------------------------------------------------------------------


def var(name):
    return Var(str(name))


def primop(op, *args):
    if op not in PRIMOPS:
        raise ShapeError(f"unknown primitive {op!r}")
    if len(args) != 2:
        raise ShapeError(f"{op} takes 2 operands, got {len(args)}")
    return PrimOp(op, tuple(_expr(a) for a in args))


def _op(name):
    def build(a, b):
        return primop(name, a, b)
    build.__name__ = name.replace("-", "_")
    return build


add, sub, sub_nuw, mul = _op("add"), _op("sub"), _op("sub-nuw"), _op("mul")
udiv, sdiv, urem, srem = _op("udiv"), _op("sdiv"), _op("urem"), _op("srem")
and_, or_, xor = _op("and"), _op("or"), _op("xor")
shl, lshr, ashr = _op("shl"), _op("lshr"), _op("ashr")
fadd, fsub, fmul, fdiv, frem = _op("fadd"), _op("fsub"), _op("fmul"), _op("fdiv"), _op("frem")
icmp_eq, icmp_ne = _op("icmp-eq"), _op("icmp-ne")
icmp_ult, icmp_ule, icmp_ugt = _op("icmp-ult"), _op("icmp-ule"), _op("icmp-ugt")
icmp_slt, icmp_sle = _op("icmp-slt"), _op("icmp-sle")
fcmp_olt, fcmp_ole, fcmp_oeq = _op("fcmp-olt"), _op("fcmp-ole"), _op("fcmp-oeq")


def _one_like(e):
    ty = getattr(e, "ty", None)
    return IntLit(1, ty if isinstance(ty, IntT) else I64)


def add1(e):
    """``e + 1`` with the literal typed like ``e`` (i64 when unknown)."""
    return add(_expr(e), _one_like(e))


def sub1(e):
    return sub(_expr(e), _one_like(e))


def app(rator, *args):
    if isinstance(rator, HFunction):
        rator = Defined(rator.name)
    elif isinstance(rator, str):
        rator = Defined(rator)
    if not isinstance(rator, (Defined, Intrinsic, External, Host)):
        raise ShapeError(f"bad rator {rator!r}")
    return App(rator, tuple(_expr(a) for a in args))


def intrinsic(name, ty: FnT | None = None):
    return Intrinsic(name, ty if ty is not None else intrinsic_type(name))


def ri(name, *args):
    """Apply an intrinsic by name, e.g. ``ri("round.f32", x)``."""
    return App(intrinsic(name), tuple(_expr(a) for a in args))


def host(name, ty: FnT, *args):
    return App(Host(name, ty), tuple(_expr(a) for a in args))


def external(name, ty: FnT, *args):
    return App(External(name, ty), tuple(_expr(a) for a in args))


def gep(base, *indices):
    if not indices:
        raise ShapeError("gep needs at least one index")
    return Gep(_expr(base), tuple(_expr(i) for i in indices))


def load(addr):
    return Load(_expr(addr))


def array_ref(base, index):
    return Load(gep(base, index))


def cast(kind, arg, to: HType):
    if kind not in CAST_KINDS:
        raise ShapeError(f"unknown cast {kind!r}")
    return Cast(kind, _expr(arg), to)


def ui_to_fp(e, to=F64):
    return cast("ui->fp", e, to)


def si_to_fp(e, to=F64):
    return cast("si->fp", e, to)


def fp_to_si(e, to=I64):
    return cast("fp->si", e, to)


def global_ref(name):
    return GlobalRef(str(name))


def let(bindings, body, result=None):
    """``bindings`` is ``[(name, init, type), ...]``."""
    bs = []
    for b in bindings:
        if len(b) != 3:
            raise ShapeError(f"let binding needs (name, init, type): {b!r}")
        name, init, ty = b
        bs.append((str(name), _expr(init), ty))
    if isinstance(body, (list, tuple)):
        body = block(*body)
    return Let(tuple(bs), _stmt(body), None if result is None else _expr(result))


# -- statements -------------------------------------------------------------------


def block(*stmts):
    return Block(tuple(_stmt(s) for s in stmts))


def svoid():
    return SVoid()


def ret(value=None):
    return Return(None if value is None else _expr(value))


def while_(cond, *body):
    return While(_expr(cond), body[0] if len(body) == 1 and isinstance(body[0], HStmt) else block(*body))


def if_(cond, then, else_=None):
    return If(_expr(cond), _stmt(then), SVoid() if else_ is None else _stmt(else_))


def set_(name, value):
    return Set(str(name), _expr(value))


def store(value, addr):
    return Store(_expr(value), _expr(addr))


def array_set(base, index, value):
    return Store(_expr(value), gep(base, index))


def switch(scrutinee, cases, default=None):
    """``cases`` is ``[(constant, stmt), ...]``."""
    cs = []
    for c in cases:
        if len(c) != 2:
            raise ShapeError(f"switch case needs (constant, stmt): {c!r}")
        cs.append((_expr(c[0]), _stmt(c[1])))
    return Switch(_expr(scrutinee), tuple(cs), SVoid() if default is None else _stmt(default))


def label(name, *body):
    return Label(str(name), body[0] if len(body) == 1 and isinstance(body[0], HStmt) else block(*body))


def jump(name):
    return Jump(str(name))


def expr_stmt(e):
    return ExprStmt(_expr(e))


# -- functions --------------------------------------------------------------------


def function(name, params, ret_ty: HType, body, attrs=()) -> HFunction:
    """``params`` is ``[(name, type), ...]``; ``attrs`` e.g. ``{"always-inline"}``."""
    names = [str(n) for n, _ in params]
    seen = set()
    for n in names:
        if n in seen:
            raise DuplicateParam(n)
        seen.add(n)
    if isinstance(body, (list, tuple)):
        body = block(*body)
    return HFunction(str(name), tuple((str(n), t) for n, t in params), ret_ty,
                     _stmt(body), frozenset(attrs))


def build_pow(x, n: int):
    """``x**n`` unrolled at generation time: ``mul(x, mul(x, ... ui64(1)))``."""
    if n == 0:
        return ui64(1)
    return mul(x, build_pow(x, n - 1))


# -- generic tag-based constructors -----------------------------------------------

_EXPR_BUILDERS = {
    "var": (var, 1, 1),
    "ui64": (ui64, 1, 1),
    "si64": (si64, 1, 1),
    "fl32": (fl32, 1, 1),
    "fl64": (fl64, 1, 1),
    "sym": (sym, 1, 1),
    "bool": (rkt_bool, 1, 1),
    "app": (app, 1, None),
    "gep": (gep, 2, None),
    "load": (load, 1, 1),
    "cast": (cast, 3, 3),
    "let": (let, 2, 3),
    "add1": (add1, 1, 1),
    "global": (global_ref, 1, 1),
}

_STMT_BUILDERS = {
    "expr": (expr_stmt, 1, 1),
    "block": (block, 0, None),
    "svoid": (svoid, 0, 0),
    "return": (ret, 0, 1),
    "while": (while_, 2, None),
    "if": (if_, 2, 3),
    "set!": (set_, 2, 2),
    "store": (store, 2, 2),
    "switch": (switch, 2, 3),
    "label": (label, 2, None),
    "jump": (jump, 1, 1),
}


def _dispatch(table, tag, children):
    if tag in PRIMOPS and table is _EXPR_BUILDERS:
        return primop(tag, *children)
    try:
        fn, lo, hi = table[tag]
    except KeyError:
        raise ShapeError(f"unknown constructor {tag!r}") from None
    if len(children) < lo or (hi is not None and len(children) > hi):
        raise ShapeError(f"{tag} takes {lo}..{hi if hi is not None else 'n'} children, got {len(children)}")
    return fn(*children)


def make_expr(tag: str, *children) -> HExpr:
    return _dispatch(_EXPR_BUILDERS, tag, children)


def make_stmt(tag: str, *children) -> HStmt:
    return _dispatch(_STMT_BUILDERS, tag, children)
