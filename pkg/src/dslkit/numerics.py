"""Reference numeric semantics shared by the engine and constant folding.

Integers are held as unsigned Python ints masked to their width
(two's complement). f32 values are Python floats that are always exactly
representable in binary32; every f32 operation rounds its result.
"""

from __future__ import annotations

import math
import struct

_F32 = struct.Struct("<f")
F32_MAX = 3.4028234663852886e38
# values at or beyond the midpoint between F32_MAX and 2**128 round to infinity
_F32_OVERFLOW = 2.0 ** 128 - 2.0 ** 103


class ArithmeticTrap(Exception):
    def __init__(self, kind):
        self.kind = kind
        super().__init__(kind)


def f32(x: float) -> float:
    """Round a double to the nearest binary32 value."""
    try:
        return _F32.unpack(_F32.pack(x))[0]
    except OverflowError:
        if abs(x) >= _F32_OVERFLOW:
            return math.copysign(math.inf, x)
        return math.copysign(F32_MAX, x)


def mask(width: int) -> int:
    return (1 << width) - 1


def wrap(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def signed(value: int, width: int) -> int:
    sb = 1 << (width - 1)
    return (value ^ sb) - sb


def int_to_f32(v: int) -> float:
    """Correctly rounded integer -> binary32 (no double rounding through f64)."""
    a = abs(v)
    n = a.bit_length()
    if n <= 53:
        return f32(float(v))
    shift = n - 25
    q = a >> shift
    rem = a - (q << shift)
    # q holds 25 bits; fold the remainder into a sticky bit so one rounding step suffices
    q = (q << 1) | (1 if rem else 0)
    return f32(math.copysign(float(q) * 2.0 ** (shift - 1), v))


def int_to_float(v: int, is_f32: bool) -> float:
    return int_to_f32(v) if is_f32 else float(v)


def float_to_int(x: float, width: int) -> int:
    """Truncate toward zero and wrap; NaN and infinities give 0."""
    if math.isnan(x) or math.isinf(x):
        return 0
    return int(x) & ((1 << width) - 1)


def fdiv(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        neg = (math.copysign(1.0, a) < 0) != (math.copysign(1.0, b) < 0)
        return -math.inf if neg else math.inf
    return a / b


def frem(a: float, b: float) -> float:
    if b == 0.0 or math.isinf(a) or math.isnan(a) or math.isnan(b):
        return math.nan
    if math.isinf(b):
        return a
    return math.fmod(a, b)


def round_half_away(x: float) -> float:
    if math.isnan(x) or math.isinf(x):
        return x
    t = float(math.trunc(x))
    if abs(x - t) >= 0.5:
        t += math.copysign(1.0, x)
    return math.copysign(t, x) if t == 0.0 else t


def ftrunc(x: float) -> float:
    if math.isnan(x) or math.isinf(x):
        return x
    return math.copysign(float(math.trunc(x)), x)


def fsqrt(x: float) -> float:
    if x < 0.0:
        return math.nan
    return math.sqrt(x)


def flog(x: float) -> float:
    if x == 0.0:
        return -math.inf
    if x < 0.0 or math.isnan(x):
        return math.nan
    return math.inf if math.isinf(x) else math.log(x)


def fsin(x: float) -> float:
    if math.isinf(x):
        return math.nan
    return math.sin(x)


def fexp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


MATH_FUNCS = {
    "sqrt": fsqrt,
    "log": flog,
    "sin": fsin,
    "round": round_half_away,
    "trunc": ftrunc,
    "exp": fexp,
}


def math_intrinsic(name: str, x: float) -> float:
    """``sqrt.f32`` etc. on an already-width-correct argument."""
    base, width = name.split(".")
    r = MATH_FUNCS[base](x)
    return f32(r) if width == "f32" else r


def int_binop(op: str, a: int, b: int, width: int, nuw_check: bool = False) -> int:
    m = (1 << width) - 1
    if op == "add":
        return (a + b) & m
    if op == "sub":
        return (a - b) & m
    if op == "sub-nuw":
        if nuw_check and b > a:
            raise ArithmeticTrap("nuw-overflow")
        return (a - b) & m
    if op == "mul":
        return (a * b) & m
    if op == "udiv":
        if b == 0:
            raise ArithmeticTrap("div-by-zero")
        return a // b
    if op == "urem":
        if b == 0:
            raise ArithmeticTrap("div-by-zero")
        return a % b
    if op in ("sdiv", "srem"):
        if b == 0:
            raise ArithmeticTrap("div-by-zero")
        sa, sb = signed(a, width), signed(b, width)
        q = abs(sa) // abs(sb)
        if (sa < 0) != (sb < 0):
            q = -q
        if op == "sdiv":
            return q & m
        return (sa - q * sb) & m
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return (a << (b % width)) & m
    if op == "lshr":
        return a >> (b % width)
    if op == "ashr":
        return (signed(a, width) >> (b % width)) & m
    raise ValueError(op)


def float_binop(op: str, a: float, b: float, is_f32: bool) -> float:
    if op == "fadd":
        r = a + b
    elif op == "fsub":
        r = a - b
    elif op == "fmul":
        r = a * b
    elif op == "fdiv":
        r = fdiv(a, b)
    elif op == "frem":
        r = frem(a, b)
    else:
        raise ValueError(op)
    return f32(r) if is_f32 else r


def compare(op: str, a, b, width: int = 64) -> int:
    if op == "icmp-eq":
        return int(a == b)
    if op == "icmp-ne":
        return int(a != b)
    if op == "icmp-ult":
        return int(a < b)
    if op == "icmp-ule":
        return int(a <= b)
    if op == "icmp-ugt":
        return int(a > b)
    if op == "icmp-slt":
        return int(signed(a, width) < signed(b, width))
    if op == "icmp-sle":
        return int(signed(a, width) <= signed(b, width))
    if op == "fcmp-olt":
        return int(a < b)
    if op == "fcmp-ole":
        return int(a <= b)
    if op == "fcmp-oeq":
        return int(a == b)
    raise ValueError(op)


def cast(kind: str, v, from_width: int | None, to_width: int | None, to_f32: bool = False):
    """Integer/float conversions. Widths are None for non-integer sides."""
    if kind == "ui->fp":
        return int_to_float(v, to_f32)
    if kind == "si->fp":
        return int_to_float(signed(v, from_width), to_f32)
    if kind in ("fp->ui", "fp->si"):
        return float_to_int(v, to_width)
    if kind == "trunc":
        return v & ((1 << to_width) - 1)
    if kind == "zext":
        return v
    if kind == "sext":
        return signed(v, from_width) & ((1 << to_width) - 1)
    if kind == "fpconv":
        return f32(v) if to_f32 else v
    if kind == "ptrcast":
        return v
    raise ValueError(kind)
