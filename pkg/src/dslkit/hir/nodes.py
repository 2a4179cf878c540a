"""High-level IR node classes.

Expressions carry a ``ty`` slot that is ``None`` until type checking fills it
in (literals carry their type from construction).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .. import numerics
from .types import BOOL, F32, F64, I64, SYM, FnT, HType


class HirError(Exception):
    pass


class ShapeError(HirError):
    pass


class DuplicateParam(HirError):
    pass


class DuplicateFunction(HirError):
    pass


INT_BINOPS = ("add", "sub", "sub-nuw", "mul", "udiv", "sdiv", "urem", "srem",
              "and", "or", "xor", "shl", "lshr", "ashr")
FLOAT_BINOPS = ("fadd", "fsub", "fmul", "fdiv", "frem")
INT_CMPS = ("icmp-eq", "icmp-ne", "icmp-ult", "icmp-ule", "icmp-ugt", "icmp-slt", "icmp-sle")
FLOAT_CMPS = ("fcmp-olt", "fcmp-ole", "fcmp-oeq")
PRIMOPS = INT_BINOPS + FLOAT_BINOPS + INT_CMPS + FLOAT_CMPS
CAST_KINDS = ("ui->fp", "si->fp", "fp->ui", "fp->si", "trunc", "zext", "sext", "ptrcast", "fpconv")
TRAPPING_OPS = ("udiv", "sdiv", "urem", "srem", "sub-nuw")


class HExpr:
    __slots__ = ()


class HStmt:
    __slots__ = ()


# -- rators ---------------------------------------------------------------------


@dataclass(frozen=True)
class Defined:
    name: str


@dataclass(frozen=True)
class Intrinsic:
    name: str
    ty: FnT


@dataclass(frozen=True)
class External:
    name: str
    ty: FnT


@dataclass(frozen=True)
class Host:
    name: str
    ty: FnT


Rator = (Defined, Intrinsic, External, Host)


# -- expressions ----------------------------------------------------------------


@dataclass(frozen=True)
class Var(HExpr):
    name: str
    ty: HType | None = None


@dataclass(frozen=True)
class App(HExpr):
    rator: object
    args: tuple
    ty: HType | None = None


@dataclass(frozen=True)
class Let(HExpr):
    """Parallel bindings ``((name, init, type), ...)``, a body statement and a
    result expression. ``result=None`` makes a void let usable as a statement."""

    bindings: tuple
    body: HStmt
    result: HExpr | None
    ty: HType | None = None


@dataclass(frozen=True)
class IntLit(HExpr):
    value: int
    ty: HType = I64
    signed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "value", numerics.wrap(int(self.value), self.ty.width))


@dataclass(frozen=True)
class FloatLit(HExpr):
    value: float
    ty: HType = F64

    def __post_init__(self):
        v = float(self.value)
        object.__setattr__(self, "value", numerics.f32(v) if self.ty == F32 else v)


@dataclass(frozen=True)
class SymLit(HExpr):
    text: str
    ty: HType = SYM


@dataclass(frozen=True)
class BoolLit(HExpr):
    value: bool
    ty: HType = BOOL


@dataclass(frozen=True)
class GlobalRef(HExpr):
    """Address of a module global (a buffer preallocated by the engine)."""

    name: str
    ty: HType | None = None


@dataclass(frozen=True)
class Gep(HExpr):
    base: HExpr
    indices: tuple
    ty: HType | None = None


@dataclass(frozen=True)
class Load(HExpr):
    addr: HExpr
    ty: HType | None = None


@dataclass(frozen=True)
class Cast(HExpr):
    kind: str
    arg: HExpr
    ty: HType


@dataclass(frozen=True)
class PrimOp(HExpr):
    op: str
    args: tuple
    ty: HType | None = None


LITERALS = (IntLit, FloatLit, SymLit, BoolLit)


def is_literal(e) -> bool:
    return isinstance(e, LITERALS)


# -- statements -----------------------------------------------------------------


@dataclass(frozen=True)
class ExprStmt(HStmt):
    expr: HExpr


@dataclass(frozen=True)
class Block(HStmt):
    stmts: tuple


@dataclass(frozen=True)
class SVoid(HStmt):
    pass


@dataclass(frozen=True)
class Return(HStmt):
    value: HExpr | None = None


@dataclass(frozen=True)
class While(HStmt):
    cond: HExpr
    body: HStmt


@dataclass(frozen=True)
class If(HStmt):
    cond: HExpr
    then: HStmt
    else_: HStmt


@dataclass(frozen=True)
class Set(HStmt):
    name: str
    value: HExpr


@dataclass(frozen=True)
class Store(HStmt):
    value: HExpr
    addr: HExpr


@dataclass(frozen=True)
class Switch(HStmt):
    scrutinee: HExpr
    cases: tuple  # ((constant expr, stmt), ...)
    default: HStmt


@dataclass(frozen=True)
class Label(HStmt):
    name: str
    body: HStmt


@dataclass(frozen=True)
class Jump(HStmt):
    name: str


# -- functions and modules ------------------------------------------------------


@dataclass(frozen=True)
class HFunction:
    name: str
    params: tuple  # ((name, HType), ...)
    ret: HType
    body: HStmt
    attrs: frozenset = frozenset()

    @property
    def type(self) -> FnT:
        return FnT(tuple(t for _, t in self.params), self.ret)

    @property
    def param_names(self):
        return tuple(n for n, _ in self.params)

    def __call__(self, *args) -> App:
        """Build an application of this function."""
        return App(Defined(self.name), tuple(args))


@dataclass(frozen=True)
class Global:
    name: str
    ty: HType
    init: tuple | None = None  # element values, or None for zero fill


@dataclass(frozen=True, eq=True)
class HModule:
    name: str
    functions: dict = field(default_factory=dict)
    type_defs: dict = field(default_factory=dict)
    globals: tuple = ()

    __hash__ = None

    def __getitem__(self, name) -> HFunction:
        return self.functions[name]

    def __contains__(self, name):
        return name in self.functions

    def global_named(self, name):
        for g in self.globals:
            if g.name == name:
                return g
        raise KeyError(name)

    def with_functions(self, functions) -> "HModule":
        return replace(self, functions=dict(functions))


def make_module(name, functions=(), type_defs=None, globals_=()) -> HModule:
    m = HModule(str(name), {}, dict(type_defs or {}), tuple(globals_))
    for f in functions:
        m = module_add(m, f)
    return m


def module_add(m: HModule, fn: HFunction, *, replace_existing=False) -> HModule:
    if fn.name in m.functions and not replace_existing:
        raise DuplicateFunction(fn.name)
    funcs = dict(m.functions)
    funcs[fn.name] = fn
    return replace(m, functions=funcs)


def module_add_global(m: HModule, g: Global, *, replace_existing=False) -> HModule:
    existing = [x for x in m.globals if x.name != g.name]
    if len(existing) != len(m.globals) and not replace_existing:
        raise DuplicateFunction(f"global {g.name}")
    return replace(m, globals=tuple(existing) + (g,))
