"""Byte layout of sized types."""

from __future__ import annotations

from dataclasses import dataclass

from .hir.types import (ArrayT, F32T, F64T, HostBoolT, IntT, OpaqueT, PtrT, StructT,
                        SymT)


class UnsizedType(Exception):
    pass


@dataclass(frozen=True)
class Layout:
    size: int
    align: int
    offsets: tuple = ()  # struct field offsets; () for everything else
    stride: int | None = None  # element stride for arrays


_SCALAR = {F32T: 4, F64T: 8, PtrT: 8, SymT: 8, OpaqueT: 8, HostBoolT: 1}


def layout_of(t) -> Layout:
    if isinstance(t, IntT):
        size = 1 if t.width <= 8 else t.width // 8
        return Layout(size, size)
    size = _SCALAR.get(type(t))
    if size is not None:
        return Layout(size, size)
    if isinstance(t, ArrayT):
        if t.length is None:
            raise UnsizedType(t)
        el = layout_of(t.elem)
        return Layout(el.size * t.length, el.align, stride=el.size)
    if isinstance(t, StructT):
        off = 0
        align = 1
        offsets = []
        for _, ft in t.fields:
            fl = layout_of(ft)
            off = (off + fl.align - 1) // fl.align * fl.align
            offsets.append(off)
            off += fl.size
            align = max(align, fl.align)
        size = (off + align - 1) // align * align
        return Layout(size, align, tuple(offsets))
    raise UnsizedType(t)


def size_of(t) -> int:
    return layout_of(t).size


def elem_stride(t) -> int:
    """Stride used when indexing through a pointer to ``t``; unsized arrays
    fall back to their element stride."""
    if isinstance(t, ArrayT) and t.length is None:
        return size_of(t.elem)
    return size_of(t)
