"""High-level IR types."""

from __future__ import annotations

from dataclasses import dataclass

from ..sexpr import Symbol


class HType:
    __slots__ = ()

    def __str__(self):
        from ..sexpr import dumps
        return dumps(type_datum(self))


@dataclass(frozen=True, repr=False)
class IntT(HType):
    width: int

    def __post_init__(self):
        if self.width not in (1, 8, 16, 32, 64):
            raise ValueError(f"unsupported integer width {self.width}")

    def __repr__(self):
        return f"i{self.width}"


@dataclass(frozen=True, repr=False)
class F32T(HType):
    def __repr__(self):
        return "f32"


@dataclass(frozen=True, repr=False)
class F64T(HType):
    def __repr__(self):
        return "f64"


@dataclass(frozen=True, repr=False)
class VoidT(HType):
    def __repr__(self):
        return "void"


@dataclass(frozen=True, repr=False)
class SymT(HType):
    """Interned host symbol; natively an i64 intern id."""

    def __repr__(self):
        return "sym"


@dataclass(frozen=True, repr=False)
class HostBoolT(HType):
    """Host boolean; natively one byte holding 0 or 1."""

    def __repr__(self):
        return "bool"


@dataclass(frozen=True, repr=False)
class OpaqueT(HType):
    """Handle to a host value kept in its host representation."""

    def __repr__(self):
        return "opaque"


@dataclass(frozen=True, repr=False)
class PtrT(HType):
    elem: HType

    def __repr__(self):
        return f"(ptr {self.elem!r})"


@dataclass(frozen=True, repr=False)
class ArrayT(HType):
    elem: HType
    length: int | None = None

    def __post_init__(self):
        if self.length is not None and self.length <= 0:
            raise ValueError("array length must be positive")

    def __repr__(self):
        return f"(array {self.elem!r}{'' if self.length is None else ' ' + str(self.length)})"


@dataclass(frozen=True, repr=False)
class StructT(HType):
    fields: tuple  # ((name, HType), ...)

    def __post_init__(self):
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise ValueError("duplicate struct field")

    def __repr__(self):
        return "(struct " + " ".join(f"({n} {t!r})" for n, t in self.fields) + ")"

    def index_of(self, name):
        for i, (n, _) in enumerate(self.fields):
            if n == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True, repr=False)
class FnT(HType):
    params: tuple
    ret: HType

    def __repr__(self):
        return "(fn (" + " ".join(repr(p) for p in self.params) + f") {self.ret!r})"


I1, I8, I16, I32, I64 = IntT(1), IntT(8), IntT(16), IntT(32), IntT(64)
F32, F64 = F32T(), F64T()
VOID = VoidT()
SYM = SymT()
BOOL = HostBoolT()
OPAQUE = OpaqueT()

_NAMED = {"i1": I1, "i8": I8, "i16": I16, "i32": I32, "i64": I64, "f32": F32, "f64": F64,
          "void": VOID, "sym": SYM, "bool": BOOL, "opaque": OPAQUE}


def is_int(t):
    return isinstance(t, IntT)


def is_float(t):
    return isinstance(t, (F32T, F64T))


def is_ptr(t):
    return isinstance(t, PtrT)


def is_scalar(t):
    return isinstance(t, (IntT, F32T, F64T, SymT, HostBoolT, PtrT, OpaqueT))


def is_cond(t):
    return t == I1 or t == BOOL


def fn(params, ret) -> FnT:
    return FnT(tuple(params), ret)


def ptr(t) -> PtrT:
    return PtrT(t)


def type_datum(t):
    if isinstance(t, PtrT):
        return [Symbol("ptr"), type_datum(t.elem)]
    if isinstance(t, ArrayT):
        out = [Symbol("array"), type_datum(t.elem)]
        if t.length is not None:
            out.append(t.length)
        return out
    if isinstance(t, StructT):
        return [Symbol("struct")] + [[Symbol(n), type_datum(ft)] for n, ft in t.fields]
    if isinstance(t, FnT):
        return [Symbol("fn"), [type_datum(p) for p in t.params], type_datum(t.ret)]
    return Symbol(repr(t))


def type_from_datum(d) -> HType:
    if isinstance(d, str) and str(d) in _NAMED:
        return _NAMED[str(d)]
    if isinstance(d, list) and d:
        head = d[0]
        if head == "ptr" and len(d) == 2:
            return PtrT(type_from_datum(d[1]))
        if head == "array" and len(d) in (2, 3):
            return ArrayT(type_from_datum(d[1]), d[2] if len(d) == 3 else None)
        if head == "struct":
            return StructT(tuple((str(n), type_from_datum(t)) for n, t in d[1:]))
        if head == "fn" and len(d) == 3:
            return FnT(tuple(type_from_datum(p) for p in d[1]), type_from_datum(d[2]))
    raise ValueError(f"unknown type {d!r}")


def parse_type(text: str) -> HType:
    from ..sexpr import read
    return type_from_datum(read(text))
