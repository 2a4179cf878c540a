"""Reference execution engine and host interop."""

from .engine import (BufferView, CompiledModule, DuplicateRegistration, ExecError, ExecStats,
                     HostRegistry, MarshalError, OpaqueHandle, Trap, UnknownFunction,
                     UnresolvedHostFunction, apply_function, compile_lir, compile_module,
                     from_native, register_host_fn, to_native, wrap_opaque)
from .memory import Memory

__all__ = [
    "BufferView", "CompiledModule", "DuplicateRegistration", "ExecError", "ExecStats",
    "HostRegistry", "MarshalError", "Memory", "OpaqueHandle", "Trap", "UnknownFunction",
    "UnresolvedHostFunction", "apply_function", "compile_lir", "compile_module", "from_native",
    "register_host_fn", "to_native", "wrap_opaque",
]
