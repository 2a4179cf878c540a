"""Arena memory: byte buffers addressed by (buffer id, byte offset), plus the
symbol intern table and opaque host handles."""

from __future__ import annotations

import struct

from ..hir.types import (ArrayT, F32T, F64T, HostBoolT, IntT, OpaqueT, PtrT, StructT,
                         SymT)
from ..layout import size_of

NULL = (0, 0)


class MemTrap(Exception):
    """Raised inside generated code; the engine turns it into a ``Trap``."""

    def __init__(self, kind):
        self.kind = kind
        super().__init__(kind)


_INT_FMT = {1: "<B", 8: "<B", 16: "<H", 32: "<I", 64: "<Q"}


def scalar_format(t):
    if isinstance(t, IntT):
        return _INT_FMT[t.width]
    if isinstance(t, F32T):
        return "<f"
    if isinstance(t, F64T):
        return "<d"
    if isinstance(t, HostBoolT):
        return "<B"
    if isinstance(t, (SymT, PtrT, OpaqueT)):
        return "<Q"
    raise TypeError(f"no scalar encoding for {t}")


def zero_value(t):
    if isinstance(t, (F32T, F64T)):
        return 0.0
    if isinstance(t, PtrT):
        return NULL
    if isinstance(t, HostBoolT):
        return False
    if isinstance(t, OpaqueT):
        return None
    return 0


class Memory:
    def __init__(self):
        # buffer 0 is the null buffer: zero length, so every access through
        # a null pointer is out of bounds
        self.bufs = [bytearray()]
        self.tags = [None]
        self.tag_sizes = [None]
        self.symbols = []
        self.sym_ids = {}
        self.handles = [None]

    # symbols and handles
    def intern(self, text) -> int:
        text = str(text)
        i = self.sym_ids.get(text)
        if i is None:
            i = len(self.symbols)
            self.symbols.append(text)
            self.sym_ids[text] = i
        return i

    def symbol_text(self, i) -> str:
        return self.symbols[i]

    def handle(self, obj) -> int:
        self.handles.append(obj)
        return len(self.handles) - 1

    # buffers
    def alloc(self, nbytes, tag=None):
        self.bufs.append(bytearray(nbytes))
        self.tags.append(tag)
        scalar = tag is not None and not isinstance(tag, (ArrayT, StructT))
        self.tag_sizes.append(size_of(tag) if scalar else None)
        return (len(self.bufs) - 1, 0)

    def free(self, p):
        bid, off = p
        if bid == 0:
            return
        if self.bufs[bid] is None:
            raise MemTrap("use-after-free")
        if off != 0:
            raise MemTrap("bad-access")
        self.bufs[bid] = None

    def alive(self, bid):
        return 0 < bid < len(self.bufs) and self.bufs[bid] is not None

    def buffer_len(self, bid):
        b = self.bufs[bid]
        return 0 if b is None else len(b)

    def truncate(self, n):
        del self.bufs[n:]
        del self.tags[n:]
        del self.tag_sizes[n:]

    def loader(self, t):
        """Return ``load(p) -> value`` for scalar type ``t``."""
        fmt = scalar_format(t)
        size = struct.calcsize(fmt)
        unpack = struct.Struct(fmt).unpack_from
        bufs = self.bufs
        tag_sizes = self.tag_sizes

        def check(p):
            bid, off = p
            buf = bufs[bid]
            if buf is None:
                raise MemTrap("use-after-free")
            if off < 0 or off + size > len(buf):
                raise MemTrap("oob-load")
            ts = tag_sizes[bid]
            if ts is not None and ts != size:
                raise MemTrap("bad-access")
            return buf, off

        if isinstance(t, PtrT):
            def load(p):
                buf, off = check(p)
                x = unpack(buf, off)[0]
                return (x >> 32, x & 0xFFFFFFFF)
        elif isinstance(t, OpaqueT):
            handles = self.handles

            def load(p):
                buf, off = check(p)
                return handles[unpack(buf, off)[0]]
        elif isinstance(t, HostBoolT):
            def load(p):
                buf, off = check(p)
                return bool(unpack(buf, off)[0])
        elif isinstance(t, IntT) and t.width == 1:
            def load(p):
                buf, off = check(p)
                return unpack(buf, off)[0] & 1
        else:
            def load(p):
                buf, off = check(p)
                return unpack(buf, off)[0]
        return load

    def storer(self, t):
        """Return ``store(value, p)`` for scalar type ``t``."""
        fmt = scalar_format(t)
        size = struct.calcsize(fmt)
        pack = struct.Struct(fmt).pack_into
        bufs = self.bufs
        tag_sizes = self.tag_sizes

        def check(p):
            bid, off = p
            buf = bufs[bid]
            if buf is None:
                raise MemTrap("use-after-free")
            if off < 0 or off + size > len(buf):
                raise MemTrap("oob-store")
            ts = tag_sizes[bid]
            if ts is not None and ts != size:
                raise MemTrap("bad-access")
            return buf, off

        if isinstance(t, PtrT):
            def store(v, p):
                buf, off = check(p)
                pack(buf, off, (v[0] << 32) | (v[1] & 0xFFFFFFFF))
        elif isinstance(t, OpaqueT):
            def store(v, p):
                buf, off = check(p)
                pack(buf, off, self.handle(v))
        else:
            def store(v, p):
                buf, off = check(p)
                pack(buf, off, v)
        return store

    def read(self, p, t):
        return self.loader(t)(p)

    def write(self, p, t, v):
        self.storer(t)(v, p)

