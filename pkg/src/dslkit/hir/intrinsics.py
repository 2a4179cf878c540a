"""Built-in intrinsic table (signatures only; the engine supplies behavior)."""

from __future__ import annotations

from .types import F32, F64, I64, VOID, FnT, PtrT, is_ptr

MATH_NAMES = ("sqrt", "log", "sin", "round", "trunc", "exp")

INTRINSICS: dict[str, FnT] = {}
for _base in MATH_NAMES:
    INTRINSICS[f"{_base}.f32"] = FnT((F32,), F32)
    INTRINSICS[f"{_base}.f64"] = FnT((F64,), F64)

PURE_INTRINSICS = frozenset(INTRINSICS)


def intrinsic_accepts(name: str, ty: FnT) -> bool:
    """Whether ``ty`` is a valid signature for intrinsic ``name``.

    ``malloc`` returns any pointer type and ``free`` takes any pointer.
    """
    if name == "malloc":
        return ty.params == (I64,) and is_ptr(ty.ret)
    if name == "free":
        return len(ty.params) == 1 and is_ptr(ty.params[0]) and ty.ret == VOID
    return INTRINSICS.get(name) == ty


def is_intrinsic(name: str) -> bool:
    return name in INTRINSICS or name in ("malloc", "free")


def intrinsic_type(name: str, elem=None) -> FnT:
    if name == "malloc":
        return FnT((I64,), PtrT(elem if elem is not None else I64))
    if name == "free":
        return FnT((PtrT(elem if elem is not None else I64),), VOID)
    return INTRINSICS[name]
