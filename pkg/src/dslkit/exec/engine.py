"""Reference execution engine: compiles a module through the pass pipeline,
generates Python for its LIR, and runs functions on host values while
counting executed instructions."""

from __future__ import annotations

import sys
import threading
import time
from dataclasses import dataclass, fields

from .. import numerics
from ..hir.nodes import HModule
from ..hir.types import (I64, ArrayT, F32T, F64T, FnT, HostBoolT, IntT, OpaqueT,
                         PtrT, StructT, SymT, VoidT)
from ..layout import layout_of, size_of
from ..lir import LModule, VerifyError, verify
from .codegen import ModuleCodegen
from .memory import NULL, Memory, MemTrap


class ExecError(Exception):
    pass


class Trap(ExecError):
    def __init__(self, kind, function=None, block=None, instr=None):
        self.kind, self.function, self.block, self.instr = kind, function, block, instr
        where = f" at {function}/{block}#{instr}" if function is not None else ""
        super().__init__(f"trap {kind}{where}")


class MarshalError(ExecError):
    def __init__(self, msg, index=None):
        self.index = index
        super().__init__(msg if index is None else f"argument {index}: {msg}")


class UnresolvedHostFunction(ExecError):
    pass


class DuplicateRegistration(ExecError):
    pass


class UnknownFunction(ExecError):
    pass


@dataclass
class ExecStats:
    instructions: int = 0
    loads: int = 0
    stores: int = 0
    calls: int = 0
    back_edges: int = 0
    allocations: int = 0

    def lines(self):
        return [f"{f.name}={getattr(self, f.name)}" for f in fields(self)]

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# -- host interop -----------------------------------------------------------------


class OpaqueHandle:
    """A host value passed through generated code untouched."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"OpaqueHandle({self.value!r})"


def wrap_opaque(value) -> OpaqueHandle:
    return value if isinstance(value, OpaqueHandle) else OpaqueHandle(value)


@dataclass(frozen=True)
class HostFn:
    name: str
    ty: FnT
    fn: object


class HostRegistry:
    def __init__(self):
        self.entries = {}

    def register(self, name, fnty: FnT, fn, *, replace=False):
        if name in self.entries and not replace:
            raise DuplicateRegistration(name)
        self.entries[name] = HostFn(name, fnty, fn)
        return self

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name) -> HostFn:
        return self.entries[name]

    def snapshot(self):
        r = HostRegistry()
        r.entries = dict(self.entries)
        return r


def register_host_fn(registry: HostRegistry, name, fnty: FnT, fn, *, replace=False) -> HostRegistry:
    return registry.register(name, fnty, fn, replace=replace)


class BufferView:
    """Read-only view of an arena buffer from a pointer onwards."""

    def __init__(self, memory: Memory, ptr, elem):
        self.memory, self.ptr, self.elem = memory, tuple(ptr), elem

    @property
    def stride(self):
        return size_of(self.elem)

    def __len__(self):
        bid, off = self.ptr
        return max(0, (self.memory.buffer_len(bid) - off) // self.stride)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        p = (self.ptr[0], self.ptr[1] + i * self.stride)
        return from_native(self.memory, read_value(self.memory, p, self.elem), self.elem)

    def to_list(self, n=None):
        return [self[i] for i in range(len(self) if n is None else n)]

    def __iter__(self):
        return iter(self.to_list())

    def __repr__(self):
        return f"BufferView({self.ptr}, {self.elem!r}, n={len(self)})"


def read_value(mem: Memory, p, t):
    if isinstance(t, StructT):
        lay = layout_of(t)
        return tuple(read_value(mem, (p[0], p[1] + off), ft) for off, (_, ft) in zip(lay.offsets, t.fields))
    if isinstance(t, ArrayT):
        st = size_of(t.elem)
        return tuple(read_value(mem, (p[0], p[1] + k * st), t.elem) for k in range(t.length))
    try:
        return mem.read(p, t)
    except MemTrap as e:
        raise Trap(e.kind) from None


def write_value(mem: Memory, p, t, v):
    if isinstance(t, StructT):
        for off, (_, ft), x in zip(layout_of(t).offsets, t.fields, v):
            write_value(mem, (p[0], p[1] + off), ft, x)
    elif isinstance(t, ArrayT):
        st = size_of(t.elem)
        for k, x in enumerate(v):
            write_value(mem, (p[0], p[1] + k * st), t.elem, x)
    else:
        mem.write(p, t, v)


def _scalar_to_native(mem, value, t):
    if isinstance(t, IntT):
        if isinstance(value, bool):
            if t.width != 1:
                raise MarshalError(f"boolean given for {t}")
            return int(value)
        if not isinstance(value, int):
            raise MarshalError(f"{value!r} is not an integer ({t})")
        return numerics.wrap(value, t.width)
    if isinstance(t, (F32T, F64T)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MarshalError(f"{value!r} is not a real ({t})")
        return numerics.f32(float(value)) if isinstance(t, F32T) else float(value)
    if isinstance(t, SymT):
        if not isinstance(value, str):
            raise MarshalError(f"{value!r} is not a symbol")
        return mem.intern(value)
    if isinstance(t, HostBoolT):
        if not isinstance(value, bool):
            raise MarshalError(f"{value!r} is not a boolean")
        return value
    if isinstance(t, OpaqueT):
        if not isinstance(value, OpaqueHandle):
            raise MarshalError(f"{value!r} is not an opaque handle (use wrap_opaque)")
        return value
    raise MarshalError(f"cannot marshal to {t}")


def _elem_to_native(mem, value, t):
    if isinstance(t, StructT):
        if isinstance(value, dict):
            value = [value[n] for n, _ in t.fields]
        if not isinstance(value, (list, tuple)) or len(value) != len(t.fields):
            raise MarshalError(f"{value!r} does not match {t}")
        return tuple(_elem_to_native(mem, x, ft) for x, (_, ft) in zip(value, t.fields))
    if isinstance(t, ArrayT):
        if not isinstance(value, (list, tuple)) or len(value) != t.length:
            raise MarshalError(f"{value!r} does not match {t}")
        return tuple(_elem_to_native(mem, x, t.elem) for x in value)
    return to_native(mem, value, t)


def to_native(mem: Memory, value, t):
    """Convert a host value to the engine representation of type ``t``;
    sequences given for pointer types are copied into a fresh arena buffer."""
    if isinstance(t, PtrT):
        if value is None:
            return NULL
        if isinstance(value, BufferView):
            return value.ptr
        if isinstance(value, (list, tuple)):
            elem = t.elem.elem if isinstance(t.elem, ArrayT) and t.elem.length is None else t.elem
            vals = [_elem_to_native(mem, x, elem) for x in value]
            p = mem.alloc(size_of(elem) * len(vals), elem)
            st = size_of(elem)
            for k, x in enumerate(vals):
                write_value(mem, (p[0], k * st), elem, x)
            return p
        raise MarshalError(f"{value!r} cannot be passed as {t}")
    return _scalar_to_native(mem, value, t)


def from_native(mem: Memory, v, t):
    if isinstance(t, IntT):
        return v if t.width == 1 else numerics.signed(v, t.width)
    if isinstance(t, (F32T, F64T)):
        return v
    if isinstance(t, SymT):
        return mem.symbol_text(v)
    if isinstance(t, HostBoolT):
        return bool(v)
    if isinstance(t, PtrT):
        return BufferView(mem, v, t.elem)
    if isinstance(t, OpaqueT):
        return v
    if isinstance(t, VoidT):
        return None
    if isinstance(t, StructT):
        return tuple(from_native(mem, x, ft) for x, (_, ft) in zip(v, t.fields))
    if isinstance(t, ArrayT):
        return [from_native(mem, x, t.elem) for x in v]
    raise MarshalError(f"cannot unmarshal {t}")


def _host_arg(mem, v, t):
    x = from_native(mem, v, t)
    return x.value if isinstance(x, OpaqueHandle) else x


def _host_wrapper(mem, entry: HostFn):
    ty, fn = entry.ty, entry.fn

    def call(*args):
        host_args = [_host_arg(mem, a, t) for a, t in zip(args, ty.params)]
        r = fn(*host_args)
        if isinstance(ty.ret, VoidT):
            return None
        if isinstance(ty.ret, OpaqueT):
            return wrap_opaque(r)
        return to_native(mem, r, ty.ret)
    return call


# -- compiled modules -------------------------------------------------------------

CALL_DEPTH = 4000


def _frame_coordinates(tb, linemaps):
    coord = None
    while tb is not None:
        code = tb.tb_frame.f_code
        entry = linemaps.get(code.co_filename)
        if entry is not None:
            name, linemap = entry
            block, idx = linemap.get(tb.tb_lineno, (None, None))
            coord = (name, block, idx)
        tb = tb.tb_next
    return coord


class CompiledModule:
    """Immutable handle on a compiled module. Invocations are serialized
    because they share the module's arena."""

    def __init__(self, lmodule: LModule, hmodule=None, registry=None, opt_level=0,
                 compile_ms=0.0, pass_stats=()):
        diags = verify(lmodule)
        if diags:
            raise VerifyError(diags)
        self.lmodule = lmodule
        self.hmodule = hmodule
        self.registry = (registry or HostRegistry()).snapshot()
        self.opt_level = opt_level
        self.pass_stats = list(pass_stats)
        self.memory = Memory()
        self.global_ptrs = {}
        self.global_types = {}
        for g in lmodule.globals:
            p = self.memory.alloc(size_of(g.ty), g.ty.elem if isinstance(g.ty, ArrayT) else g.ty)
            if g.init is not None:
                elem = g.ty.elem if isinstance(g.ty, ArrayT) else g.ty
                vals = list(g.init) if isinstance(g.ty, ArrayT) else [g.init[0]]
                st = size_of(elem)
                for k, x in enumerate(vals):
                    write_value(self.memory, (p[0], k * st), elem, _elem_to_native(self.memory, x, elem))
            self.global_ptrs[g.name] = p
            self.global_types[g.name] = g.ty
        host_fns = {}
        for fn in lmodule.functions.values():
            for b in fn.blocks:
                for ins in b.instrs:
                    if ins.op == "call" and ins.attr[0] in ("host", "external"):
                        name = ins.attr[1]
                        if name not in self.registry:
                            raise UnresolvedHostFunction(name)
                        entry = self.registry[name]
                        if entry.ty != ins.attr[2]:
                            raise UnresolvedHostFunction(
                                f"{name}: registered as {entry.ty}, called as {ins.attr[2]}")
                        host_fns[name] = _host_wrapper(self.memory, entry)
        t0 = time.perf_counter()
        self.codegen = ModuleCodegen(lmodule, self.memory, host_fns, self.global_ptrs,
                                     check_nuw=opt_level == 0)
        self.functions = self.codegen.generate()
        self.compile_ms = compile_ms + (time.perf_counter() - t0) * 1000.0
        self.base_buffers = len(self.memory.bufs)
        self._lock = threading.Lock()
        self.last_stats = None

    @property
    def function_names(self):
        return list(self.lmodule.functions)

    def signature(self, name) -> FnT:
        return self.lmodule.functions[name].type

    def global_view(self, name) -> BufferView:
        t = self.global_types[name]
        return BufferView(self.memory, self.global_ptrs[name], t.elem if isinstance(t, ArrayT) else t)

    def reset_arena(self):
        """Drop every buffer allocated by previous invocations."""
        with self._lock:
            self.memory.truncate(self.base_buffers)

    def marshal_args(self, name, args):
        fty = self.signature(name)
        params = list(fty.params)
        args = list(args)
        if len(args) != len(params):
            args = self._derive_lengths(name, params, args)
        out = []
        for i, (a, t) in enumerate(zip(args, params)):
            try:
                out.append(to_native(self.memory, a, t))
            except MarshalError as e:
                raise MarshalError(str(e), i) from None
        return out

    def _derive_lengths(self, name, params, args):
        pairs = [i for i in range(len(params) - 1)
                 if isinstance(params[i], PtrT) and params[i + 1] == I64]
        if len(args) != len(params) - len(pairs):
            raise MarshalError(f"{name} takes {len(params)} arguments, got {len(args)}")
        full = []
        it = iter(args)
        i = 0
        while i < len(params):
            a = next(it)
            full.append(a)
            if i in pairs:
                if not isinstance(a, (list, tuple, BufferView)):
                    raise MarshalError("length can only be derived from a host sequence", i)
                full.append(len(a))
                i += 2
            else:
                i += 1
        return full

    def apply(self, name, *args):
        """Run ``name`` on host arguments; returns ``(value, ExecStats)``."""
        if name not in self.functions:
            raise UnknownFunction(name)
        with self._lock:
            native = self.marshal_args(name, args)
            counters = [0] * 6
            self.codegen.ns["ST"] = counters
            old = sys.getrecursionlimit()
            if old < CALL_DEPTH + 200:
                sys.setrecursionlimit(CALL_DEPTH + 200)
            try:
                result = self.functions[name](*native)
            except (MemTrap, numerics.ArithmeticTrap, ZeroDivisionError, RecursionError) as e:
                kind = {ZeroDivisionError: "div-by-zero", RecursionError: "stack-overflow"}.get(
                    type(e), getattr(e, "kind", None) or str(e))
                coord = _frame_coordinates(e.__traceback__, self.codegen.linemaps) or (None, None, None)
                self.last_stats = ExecStats(*counters)
                raise Trap(kind, *coord) from None
            finally:
                sys.setrecursionlimit(old)
            stats = ExecStats(*counters)
            self.last_stats = stats
            return from_native(self.memory, result, self.signature(name).ret), stats

    def call(self, name, *args):
        return self.apply(name, *args)[0]


def compile_lir(lmodule: LModule, registry=None, opt_level=0) -> CompiledModule:
    return CompiledModule(lmodule, None, registry, opt_level)


def compile_module(m: HModule, cfg=None, registry=None) -> CompiledModule:
    """Typecheck, optimize and lower ``m`` per ``cfg`` (a ``PassConfig`` or an
    opt level), then prepare it for execution."""
    from ..opt.pipeline import PassConfig, run_pipeline

    if cfg is None:
        cfg = PassConfig()
    elif isinstance(cfg, int):
        cfg = PassConfig(opt_level=cfg)
    t0 = time.perf_counter()
    result = run_pipeline(m, cfg)
    ms = (time.perf_counter() - t0) * 1000.0
    return CompiledModule(result.lmodule, result.hmodule, registry, cfg.opt_level, ms, result.stats)


def apply_function(cm: CompiledModule, name, args):
    return cm.apply(name, *args)

